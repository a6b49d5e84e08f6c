//! Worked scenarios built on the other modules: Heaviside power integrals,
//! the Keyfitz–Kranzer singular shock, δ/δ′ extraction, the isothermal
//! in-shock state law and elastoplastic profile pairings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genfun::{
    combine, estimate_order, lift_heaviside, scale, weak_residual_pairs, AsymptoticOptions, AsymptoticReport,
    CombineOp, GenRep, SpaceTimeTest, TestFunction,
};
use crate::numerics::{brent, extrapolate};
use crate::profiles::{affine_profile, make_heaviside_profile, HeavisideKind, Profile, ProfileKind};
use crate::quadrature::{integrate, QuadOptions};

fn require_heaviside(h: &Profile, what: &str) -> Result<()> {
    if h.is_heaviside() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be a Heaviside profile, got {:?}", h.kind)))
    }
}

/// ∫(H^p − H^q) H′ dξ by quadrature.
pub fn heaviside_power_integral(p: u32, q: u32, h: &Profile) -> Result<f64> {
    require_heaviside(h, "H")?;
    if p == q {
        return Ok(0.0);
    }
    h.integrate_over_support(|x| {
        let v = h.value(x);
        (v.powi(p as i32) - v.powi(q as i32)) * h.derivative(x, 1)
    })
}

// ---------------------------------------------------------------------------
// δ / δ′ extraction

/// Half-width of the probing test functions.
pub const PROBE_HALF_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extraction {
    Converged,
    Inconclusive { reason: String },
}

/// Limits of a concentrated family tested against ψ₀ (ψ₀(c)=1, ψ₀′(c)=0)
/// and ψ₁ (ψ₁(c)=0, ψ₁′(c)=1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaCoefficients {
    pub center: f64,
    pub c_delta: f64,
    pub c_delta_prime: f64,
    pub noise_delta: f64,
    pub noise_delta_prime: f64,
    pub eps_ladder: Vec<f64>,
    pub delta_values: Vec<f64>,
    pub delta_prime_values: Vec<f64>,
    pub extraction: Extraction,
}

impl DeltaCoefficients {
    pub fn converged(&self) -> bool {
        self.extraction == Extraction::Converged
    }
}

/// Extrapolation basis besides the constant: a √ε series up to ε², which
/// covers both ε-scaled kernels (even powers of ε) and ε^{1/2}-wide profiles.
pub const EXTRAPOLATION_POWERS: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

/// Extrapolate the pairings produced by `pair(ψ, ε)` for the two probes,
/// fitting c₀ + Σ c_k ε^{powers[k]}.
pub fn concentration_coefficients<P>(pair: P, center: f64, ladder: &[f64], powers: &[f64]) -> Result<DeltaCoefficients>
where
    P: Fn(&TestFunction, f64) -> Result<f64>,
{
    if ladder.len() < powers.len() + 2 {
        return Err(Error::InvalidInput(format!(
            "δ extraction with {} basis terms needs ≥ {} ladder points, got {}",
            powers.len() + 1,
            powers.len() + 2,
            ladder.len()
        )));
    }
    let psi0 = TestFunction::bump(center, PROBE_HALF_WIDTH);
    let psi1 = TestFunction::odd_bump(center, PROBE_HALF_WIDTH);
    let d0 = ladder.iter().map(|&e| pair(&psi0, e)).collect::<Result<Vec<_>>>()?;
    let d1 = ladder.iter().map(|&e| pair(&psi1, e)).collect::<Result<Vec<_>>>()?;
    let (c0, n0) = extrapolate(ladder, &d0, powers)?;
    let (c1, n1) = extrapolate(ladder, &d1, powers)?;
    let (c_delta, c_delta_prime) = (c0[0], -c1[0]);
    let bad = |c: f64, n: f64| !(n <= 1e-3 * (1.0 + c.abs()));
    let extraction = if bad(c_delta, n0) || bad(c_delta_prime, n1) {
        Extraction::Inconclusive {
            reason: format!("ladder does not settle: fit noise ({n0:.3e}, {n1:.3e}) for limits ({c_delta:.4}, {c_delta_prime:.4})"),
        }
    } else {
        Extraction::Converged
    };
    Ok(DeltaCoefficients {
        center,
        c_delta,
        c_delta_prime,
        noise_delta: n0,
        noise_delta_prime: n1,
        eps_ladder: ladder.to_vec(),
        delta_values: d0,
        delta_prime_values: d1,
        extraction,
    })
}

/// (c_δ, c_δ′) of a family concentrating at `center`, so that the family
/// tends to c_δ δ + c_δ′ δ′ there.
pub fn delta_prime_coefficient(family: &GenRep, center: f64, ladder: &[f64]) -> Result<DeltaCoefficients> {
    concentration_coefficients(
        |psi, eps| {
            let (a, b) = psi.support;
            integrate(|x| family.value(x, eps) * psi.eval(x, 0), a, b, &family.features(eps), &QuadOptions::default())
        },
        center,
        ladder,
        &EXTRAPOLATION_POWERS,
    )
}

// ---------------------------------------------------------------------------
// Keyfitz–Kranzer singular shock

/// u = u₀+[u]h(η/ε^p)+(a/√ε)ρ(η/ε), v = v₀+[v]h(η/ε^p)+(a²/ε)ρ²(η/ε), η = x/t − s.
#[derive(Debug, Clone)]
pub struct KKAnsatz {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
    pub s: f64,
    pub a: f64,
    pub p: f64,
    pub h: Profile,
    pub rho: Profile,
    /// Keep the √δ term in u. Turning it off leaves v unchanged.
    pub u_corrector: bool,
}

/// Which of the two conservation laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KkEquation {
    /// u_t + (u² − v)_x = 0
    First,
    /// v_t + (u³/3 − u)_x = 0
    Second,
}

impl KkEquation {
    pub const BOTH: [KkEquation; 2] = [KkEquation::First, KkEquation::Second];
}

impl KKAnsatz {
    pub fn validate(&self) -> Result<()> {
        require_heaviside(&self.h, "h")?;
        if self.rho.kind != ProfileKind::KkCorrector {
            return Err(Error::InvalidInput(format!("ρ must be a KK corrector profile, got {:?}", self.rho.kind)));
        }
        if !(self.p > 0.0) {
            return Err(Error::InvalidInput(format!("smoothing exponent p must be > 0, got {}", self.p)));
        }
        let vals = [self.u0, self.u1, self.v0, self.v1, self.s, self.a];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("KK ansatz parameters must be finite".into()));
        }
        Ok(())
    }

    fn eta(&self, x: f64, t: f64) -> f64 {
        x / t - self.s
    }

    fn u_amp(&self) -> f64 {
        if self.u_corrector {
            self.a
        } else {
            0.0
        }
    }

    pub fn u(&self, x: f64, t: f64, eps: f64) -> f64 {
        let eta = self.eta(x, t);
        let mut u = self.u0 + (self.u1 - self.u0) * self.h.value(eta / eps.powf(self.p));
        if self.u_corrector {
            u += self.a / eps.sqrt() * self.rho.value(eta / eps);
        }
        u
    }

    pub fn v(&self, x: f64, t: f64, eps: f64) -> f64 {
        let eta = self.eta(x, t);
        let r = self.rho.value(eta / eps);
        self.v0 + (self.v1 - self.v0) * self.h.value(eta / eps.powf(self.p)) + self.a * self.a / eps * r * r
    }

    pub fn u_t(&self, x: f64, t: f64, eps: f64) -> f64 {
        let (eta, deta) = (self.eta(x, t), -x / (t * t));
        let ep = eps.powf(self.p);
        let corr = self.u_amp() / eps.sqrt() * self.rho.derivative(eta / eps, 1) / eps;
        deta * ((self.u1 - self.u0) * self.h.derivative(eta / ep, 1) / ep + corr)
    }

    pub fn v_t(&self, x: f64, t: f64, eps: f64) -> f64 {
        let (eta, deta) = (self.eta(x, t), -x / (t * t));
        let ep = eps.powf(self.p);
        let y = eta / eps;
        let corr = self.a * self.a / eps * 2.0 * self.rho.value(y) * self.rho.derivative(y, 1) / eps;
        deta * ((self.v1 - self.v0) * self.h.derivative(eta / ep, 1) / ep + corr)
    }

    /// (density, flux) of one equation.
    pub fn density_flux(&self, eq: KkEquation, x: f64, t: f64, eps: f64) -> (f64, f64) {
        let u = self.u(x, t, eps);
        match eq {
            KkEquation::First => (u, u * u - self.v(x, t, eps)),
            KkEquation::Second => (self.v(x, t, eps), u * u * u / 3.0 - u),
        }
    }

    /// Points in x where the ansatz has narrow structure at time t.
    pub fn features(&self, t: f64, eps: f64) -> Vec<f64> {
        let ep = eps.powf(self.p);
        let mut f: Vec<f64> = self.h.breakpoints().iter().map(|b| t * (self.s + ep * b)).collect();
        f.extend(self.rho.breakpoints().iter().map(|b| t * (self.s + eps * b)));
        f
    }

    /// ∫ (D_t ψ − F ψ′) dx at fixed t: the residual u_t + F_x tested against ψ.
    pub fn pairing(&self, eq: KkEquation, psi: &TestFunction, t: f64, eps: f64) -> Result<f64> {
        let (a, b) = psi.support;
        integrate(
            |x| {
                let dt = match eq {
                    KkEquation::First => self.u_t(x, t, eps),
                    KkEquation::Second => self.v_t(x, t, eps),
                };
                let (_, flux) = self.density_flux(eq, x, t, eps);
                dt * psi.eval(x, 0) - flux * psi.eval(x, 1)
            },
            a,
            b,
            &self.features(t, eps),
            &QuadOptions::default().with_abs_tol(1e-12),
        )
    }

    /// δ/δ′ content of one equation's residual at the front x = s·t.
    pub fn residual_coefficients(&self, eq: KkEquation, t: f64, ladder: &[f64]) -> Result<DeltaCoefficients> {
        self.validate()?;
        concentration_coefficients(|psi, eps| self.pairing(eq, psi, t, eps), self.s * t, ladder, &EXTRAPOLATION_POWERS)
    }
}

/// ∫ (1/ε) ρ²((x/t − s)/ε) dx.
pub fn kk_corrector_mass(rho: &Profile, s: f64, t: f64, eps: f64) -> Result<f64> {
    let (a, b) = rho.support();
    let feats: Vec<f64> = rho.breakpoints().iter().map(|y| t * (s + eps * y)).collect();
    integrate(
        |x| {
            let r = rho.value((x / t - s) / eps);
            r * r / eps
        },
        t * (s + eps * a),
        t * (s + eps * b),
        &feats,
        &QuadOptions::default().with_abs_tol(1e-14),
    )
}

/// Ladder ε = 2^{-j}, j = 6..15. The Heaviside part has width ε^{1/2}, which
/// is still comparable to the test functions at coarser ε.
pub fn kk_default_ladder() -> Vec<f64> {
    crate::numerics::dyadic_ladder(6, 15)
}

/// Space-time tests straddling the front: even and odd in x, one bump in t around t = 1.
pub fn kk_default_tests(s: f64) -> Vec<SpaceTimeTest> {
    let time = TestFunction::bump(1.0, 0.5);
    vec![
        SpaceTimeTest::new(TestFunction::bump(s, 1.0), time.clone()),
        SpaceTimeTest::new(TestFunction::odd_bump(s, 1.0), time.clone()),
        SpaceTimeTest::new(TestFunction::bump(s + 0.25, 0.75), time),
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KkResidual {
    pub first: AsymptoticReport,
    pub second: AsymptoticReport,
}

impl KkResidual {
    pub fn report(&self, eq: KkEquation) -> &AsymptoticReport {
        match eq {
            KkEquation::First => &self.first,
            KkEquation::Second => &self.second,
        }
    }
}

/// Space-time weak residuals ∫∫ (D ψ_t + F ψ_x) of both equations along the ladder.
pub fn kk_residual(
    ansatz: &KKAnsatz,
    tests: &[SpaceTimeTest],
    ladder: &[f64],
    opts: &AsymptoticOptions,
) -> Result<KkResidual> {
    ansatz.validate()?;
    let run = |eq: KkEquation, label: &str| {
        weak_residual_pairs(
            label,
            |x, t, eps| ansatz.density_flux(eq, x, t, eps),
            |t, eps| ansatz.features(t, eps),
            tests,
            ladder,
            opts,
        )
    };
    Ok(KkResidual {
        first: run(KkEquation::First, "u_t + (u^2 - v)_x")?,
        second: run(KkEquation::Second, "v_t + (u^3/3 - u)_x")?,
    })
}

/// Calibrated (s, a) and the residual coefficients left at that point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KkCalibration {
    pub s: f64,
    pub a: f64,
    pub t: f64,
    pub first: DeltaCoefficients,
    pub second: DeltaCoefficients,
}

impl KkCalibration {
    /// Largest |coefficient| over both equations.
    pub fn max_coefficient(&self) -> f64 {
        [&self.first, &self.second]
            .iter()
            .flat_map(|c| [c.c_delta.abs(), c.c_delta_prime.abs()])
            .fold(0.0, f64::max)
    }
}

fn coefficient_at(base: &KKAnsatz, s: f64, a: f64, eq: KkEquation, t: f64, ladder: &[f64]) -> Result<DeltaCoefficients> {
    let trial = KKAnsatz { s, a, u_corrector: true, ..base.clone() };
    trial.residual_coefficients(eq, t, ladder)
}

/// Root-find s on the δ′ coefficient and then a on the δ coefficient of the
/// second equation's residual. The first equation's coefficients at the
/// result are reported, not forced: they vanish only if the states obey its
/// Rankine–Hugoniot relation.
pub fn kk_calibrate(base: &KKAnsatz, t: f64, ladder: &[f64]) -> Result<KkCalibration> {
    base.validate()?;
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("calibration time must be > 0, got {t}")));
    }
    let eq = KkEquation::Second;
    let a_probe = if base.a.abs() > 1e-3 { base.a.abs() } else { 1.0 };
    let err = std::cell::RefCell::new(None);
    let guard = |r: Result<DeltaCoefficients>, pick: fn(&DeltaCoefficients) -> f64| match r {
        Ok(c) => pick(&c),
        Err(e) => {
            err.replace(Some(e));
            f64::NAN
        }
    };

    let (lo, hi) = (base.u0.min(base.u1), base.u0.max(base.u1));
    if !(hi > lo) {
        return Err(Error::InvalidInput("KK calibration needs u₀ ≠ u₁".into()));
    }
    let s = brent(|s| guard(coefficient_at(base, s, a_probe, eq, t, ladder), |c| c.c_delta_prime), lo, hi, 1e-11, 100);
    if let Some(e) = err.take() {
        return Err(e);
    }
    let s = s?;

    let f = |a: f64| guard(coefficient_at(base, s, a, eq, t, ladder), |c| c.c_delta);
    let f0 = f(0.0);
    if let Some(e) = err.take() {
        return Err(e);
    }
    if !(f0 < 0.0) {
        return Err(Error::NoStrongSolution(format!(
            "no singular shock: δ coefficient without corrector is {f0:.6} ≥ 0, so no real amplitude cancels it"
        )));
    }
    let mut top = 1.0;
    while f(top) < 0.0 && top < 1e6 {
        top *= 2.0;
    }
    let a = brent(f, 0.0, top, 1e-11, 100);
    if let Some(e) = err.take() {
        return Err(e);
    }
    let a = a?;
    Ok(KkCalibration {
        s,
        a,
        t,
        first: coefficient_at(base, s, a, KkEquation::First, t, ladder)?,
        second: coefficient_at(base, s, a, eq, t, ladder)?,
    })
}

// ---------------------------------------------------------------------------
// Isothermal gas

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsothermalStates {
    pub rho_l: f64,
    pub rho_r: f64,
    pub u_l: f64,
    pub u_r: f64,
    pub p_l: f64,
    pub p_r: f64,
}

impl IsothermalStates {
    /// States on the isotherm p = Cρ.
    pub fn on_isotherm(c: f64, rho_l: f64, rho_r: f64, u_l: f64, u_r: f64) -> Self {
        Self { rho_l, rho_r, u_l, u_r, p_l: c * rho_l, p_r: c * rho_r }
    }

    /// (p_l + [p]H)(1/ρ_l + [1/ρ]H).
    pub fn law_at(&self, h: f64) -> f64 {
        (self.p_l + (self.p_r - self.p_l) * h) * (1.0 / self.rho_l + (1.0 / self.rho_r - 1.0 / self.rho_l) * h)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsothermalLaw {
    pub c: f64,
    pub xi: Vec<f64>,
    pub h: Vec<f64>,
    pub law: Vec<f64>,
    pub endpoints: (f64, f64),
    /// Signed C(ξ) − C of largest magnitude, located by refinement.
    pub max_deviation: f64,
    pub max_deviation_xi: f64,
}

impl IsothermalLaw {
    /// CSV with columns xi,H,C.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("xi,H,C\n");
        for ((x, h), c) in self.xi.iter().zip(&self.h).zip(&self.law) {
            s.push_str(&format!("{x:.12e},{h:.12e},{c:.12e}\n"));
        }
        s
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// C(ξ) imposed by the state law holding strongly inside the shock, with the
/// common Heaviside H of u, p and 1/ρ.
pub fn isothermal_in_shock_state_law(states: &IsothermalStates, h: &Profile, samples: usize) -> Result<IsothermalLaw> {
    require_heaviside(h, "H")?;
    let st = *states;
    if !(st.rho_l > 0.0 && st.rho_r > 0.0) {
        return Err(Error::InvalidInput("densities must be positive".into()));
    }
    let (cl, cr) = (st.p_l / st.rho_l, st.p_r / st.rho_r);
    if !((cl - cr).abs() <= 1e-12 * cl.abs().max(cr.abs()).max(1.0)) {
        return Err(Error::InvalidInput(format!(
            "side states are not on one isotherm: p_l/ρ_l = {cl}, p_r/ρ_r = {cr}"
        )));
    }
    if samples < 3 {
        return Err(Error::InvalidInput("need at least 3 samples".into()));
    }
    let c = cl;
    let (a, b) = h.support();
    let pad = 0.1 * (b - a);
    let (lo, hi) = (a - pad, b + pad);
    let xi: Vec<f64> = (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64).collect();
    let hv: Vec<f64> = xi.iter().map(|&x| h.value(x)).collect();
    let law: Vec<f64> = hv.iter().map(|&v| st.law_at(v)).collect();

    let dev = |x: f64| (st.law_at(h.value(x)) - c).abs();
    let i = (0..samples).max_by(|&i, &j| dev(xi[i]).total_cmp(&dev(xi[j]))).unwrap_or(0);
    let (ba, bb) = (xi[i.saturating_sub(1)], xi[(i + 1).min(samples - 1)]);
    let x_star = golden_max(dev, ba, bb, 1e-12);
    let best = if dev(x_star) >= dev(xi[i]) { x_star } else { xi[i] };
    Ok(IsothermalLaw {
        c,
        endpoints: (st.law_at(h.limits.0), st.law_at(h.limits.1)),
        max_deviation: st.law_at(h.value(best)) - c,
        max_deviation_xi: best,
        xi,
        h: hv,
        law,
    })
}

/// Sup-order of H² − H on (−1, 1): a strong p = Cρ inside the shock would
/// need (ρ_l+[ρ]H)(1/ρ_l+[1/ρ]H) = 1, i.e. H² = H, which this refutes.
pub fn strong_state_law_obstruction(h: &Profile, ladder: &[f64], opts: &AsymptoticOptions) -> Result<AsymptoticReport> {
    require_heaviside(h, "H")?;
    let domain = (-2.0, 2.0);
    let hh = lift_heaviside(h, 0.0, domain);
    let sq = combine(&hh, &hh, CombineOp::Mul)?;
    let diff = combine(&sq, &scale(&hh, -1.0), CombineOp::Add)?;
    estimate_order(&diff, (-1.0, 1.0), 0, ladder, opts)
}

// ---------------------------------------------------------------------------
// Elastoplastic pairings

/// A jump left + jump·H(ξ).
#[derive(Debug, Clone)]
pub struct Wave {
    pub left: f64,
    pub jump: f64,
    pub profile: Profile,
}

/// ∫ (u_l + [u]H_u) [S] H_S′ dξ.
pub fn elastoplastic_product(u: &Wave, s: &Wave) -> Result<f64> {
    require_heaviside(&u.profile, "u profile")?;
    require_heaviside(&s.profile, "S profile")?;
    let (a, b) = s.profile.support();
    let mut bp: Vec<f64> = u.profile.breakpoints().into_iter().chain(s.profile.breakpoints()).collect();
    bp.retain(|x| *x > a && *x < b);
    integrate(
        |x| (u.left + u.jump * u.profile.value(x)) * s.jump * s.profile.derivative(x, 1),
        a,
        b,
        &bp,
        &QuadOptions::default().with_abs_tol(1e-13),
    )
}

/// Elastoplastic shock data. Pressure follows p = constant·ρ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElastoplasticCase {
    pub rho_l: f64,
    pub rho_r: f64,
    pub u_l: f64,
    pub u_r: f64,
    pub s_l: f64,
    pub s_r: f64,
    pub pressure_constant: f64,
    /// Fraction of the u-transition occupied by the flat plastic foot.
    pub foot: f64,
}

impl Default for ElastoplasticCase {
    fn default() -> Self {
        Self { rho_l: 1.0, rho_r: 1.5, u_l: 0.0, u_r: 1.0, s_l: 0.0, s_r: 1.0, pressure_constant: 1.0, foot: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElastoplasticSummary {
    pub case: ElastoplasticCase,
    pub pressures: (f64, f64),
    /// Shared profile for u and S (weak elastic shock).
    pub elastic_product: f64,
    pub elastic_pairing: f64,
    /// S transition inside u's flat foot (strong shock).
    pub plastic_product: f64,
    pub plastic_pairing: f64,
}

/// Monotone S profile squeezed into the flat foot of delayed_foot(θ).
pub fn plastic_foot_profiles(theta: f64) -> Result<(Profile, Profile)> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidInput(format!("foot fraction must be in (0, 1), got {theta}")));
    }
    let hu = make_heaviside_profile(HeavisideKind::DelayedFoot { theta })?;
    let foot = (-1.0, -1.0 + 2.0 * theta);
    let mid = 0.5 * (foot.0 + foot.1);
    let hs = affine_profile(&make_heaviside_profile(HeavisideKind::Monotone)?, mid, 0.45 * (foot.1 - foot.0));
    Ok((hu, hs))
}

pub fn elastoplastic_case(case: &ElastoplasticCase) -> Result<ElastoplasticSummary> {
    if !(case.rho_l > 0.0 && case.rho_r > 0.0 && case.pressure_constant.is_finite()) {
        return Err(Error::InvalidInput("densities must be positive and the pressure constant finite".into()));
    }
    let mono = make_heaviside_profile(HeavisideKind::Monotone)?;
    let (du, ds) = (case.u_r - case.u_l, case.s_r - case.s_l);
    let wave = |left, jump, p: &Profile| Wave { left, jump, profile: p.clone() };
    let elastic = elastoplastic_product(&wave(case.u_l, du, &mono), &wave(case.s_l, ds, &mono))?;
    let (hu, hs) = plastic_foot_profiles(case.foot)?;
    let plastic = elastoplastic_product(&wave(case.u_l, du, &hu), &wave(case.s_l, ds, &hs))?;
    Ok(ElastoplasticSummary {
        case: *case,
        pressures: (case.pressure_constant * case.rho_l, case.pressure_constant * case.rho_r),
        elastic_product: elastic,
        elastic_pairing: crate::jumpcalc::pairing_coefficient(&mono, &mono)?,
        plastic_product: plastic,
        plastic_pairing: crate::jumpcalc::pairing_coefficient(&hu, &hs)?,
    })
}
