//! ε-families of smooth functions and their asymptotic tests.
//!
//! A [`GenRep`] is a representative `(x, ε) ↦ f(x, ε)` together with its
//! x-derivatives. Algebra is pointwise in (x, ε). The tests sample families
//! along a decreasing ε-ladder and fit log-log slopes.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{extrapolate, fit_line};
use crate::profiles::{fd_derivative, std_bump, Mollifier, Profile};
use crate::quadrature::{integrate, QuadOptions};

type EvalFn = dyn Fn(f64, f64, usize) -> f64 + Send + Sync;
type FeatureFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// Representative of an element of the simplified algebra.
#[derive(Clone)]
pub struct GenRep {
    eval: Arc<EvalFn>,
    features: Arc<FeatureFn>,
    /// Highest x-derivative available in closed form.
    pub derivative_depth: usize,
    pub domain: (f64, f64),
    pub label: String,
}

impl fmt::Debug for GenRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenRep")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("derivative_depth", &self.derivative_depth)
            .finish()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl GenRep {
    /// Build from a closure `(x, ε, k) ↦ ∂ₓᵏ f(x, ε)` valid for k ≤ depth.
    pub fn from_fn<F>(label: impl Into<String>, domain: (f64, f64), depth: usize, f: F) -> Self
    where
        F: Fn(f64, f64, usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            features: Arc::new(|_| Vec::new()),
            derivative_depth: depth,
            domain,
            label: label.into(),
        }
    }

    /// Attach the points (for a given ε) where the family has narrow structure.
    pub fn with_features<F>(mut self, f: F) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.features = Arc::new(f);
        self
    }

    pub fn value(&self, x: f64, eps: f64) -> f64 {
        (self.eval)(x, eps, 0)
    }

    /// k-th x-derivative. Beyond `derivative_depth` uses central differences
    /// with step ε²·(domain width).
    pub fn deriv(&self, x: f64, eps: f64, k: usize) -> f64 {
        if k <= self.derivative_depth {
            (self.eval)(x, eps, k)
        } else {
            let top = self.derivative_depth;
            let h = eps * eps * (self.domain.1 - self.domain.0);
            fd_derivative(|t| (self.eval)(t, eps, top), x, k - top, h)
        }
    }

    pub fn features(&self, eps: f64) -> Vec<f64> {
        (self.features)(eps)
    }

    fn joint_domain(a: &GenRep, b: &GenRep) -> Result<(f64, f64)> {
        let lo = a.domain.0.max(b.domain.0);
        let hi = a.domain.1.min(b.domain.1);
        if !(hi > lo) {
            return Err(Error::DomainMismatch(format!(
                "{} on {:?} and {} on {:?} do not overlap",
                a.label, a.domain, b.label, b.domain
            )));
        }
        Ok((lo, hi))
    }

    fn joint_features(a: &GenRep, b: &GenRep) -> Arc<FeatureFn> {
        let (fa, fb) = (a.features.clone(), b.features.clone());
        Arc::new(move |eps| {
            let mut v = fa(eps);
            v.extend(fb(eps));
            v
        })
    }
}

/// Constant-in-ε embedding of a smooth function given with its derivatives.
pub fn lift_smooth<F>(label: impl Into<String>, domain: (f64, f64), depth: usize, f: F) -> GenRep
where
    F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
{
    GenRep::from_fn(label, domain, depth, move |x, _eps, k| f(x, k))
}

/// ε^power · profile((x - center)/ε).
pub fn lift_profile(profile: &Profile, center: f64, power: f64, domain: (f64, f64)) -> GenRep {
    let p = profile.clone();
    let label = format!("eps^{power}*{}((x-{center})/eps)", profile.label);
    let bps = profile.breakpoints();
    let depth = profile.shape.max_derivative();
    GenRep::from_fn(label, domain, depth, move |x, eps, k| {
        eps.powf(power - k as f64) * p.derivative((x - center) / eps, k)
    })
    .with_features(move |eps| bps.iter().map(|b| center + eps * b).collect())
}

/// Heaviside representative H((x - center)/ε).
pub fn lift_heaviside(profile: &Profile, center: f64, domain: (f64, f64)) -> GenRep {
    lift_profile(profile, center, 0.0, domain)
}

/// √δ representative ε^{-1/2} χ((x - center)/ε).
pub fn lift_sqrt_delta(profile: &Profile, center: f64, domain: (f64, f64)) -> GenRep {
    lift_profile(profile, center, -0.5, domain)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineOp {
    Add,
    Mul,
}

pub fn combine(a: &GenRep, b: &GenRep, op: CombineOp) -> Result<GenRep> {
    let domain = GenRep::joint_domain(a, b)?;
    let depth = a.derivative_depth.min(b.derivative_depth);
    let (ea, eb) = (a.clone(), b.clone());
    let features = GenRep::joint_features(a, b);
    let (label, eval): (String, Arc<EvalFn>) = match op {
        CombineOp::Add => (
            format!("({})+({})", a.label, b.label),
            Arc::new(move |x, eps, k| ea.deriv(x, eps, k) + eb.deriv(x, eps, k)),
        ),
        CombineOp::Mul => (
            format!("({})*({})", a.label, b.label),
            Arc::new(move |x, eps, k| {
                (0..=k).map(|j| binomial(k, j) * ea.deriv(x, eps, j) * eb.deriv(x, eps, k - j)).sum()
            }),
        ),
    };
    Ok(GenRep { eval, features, derivative_depth: depth, domain, label })
}

pub fn scale(a: &GenRep, lambda: f64) -> GenRep {
    let inner = a.clone();
    GenRep {
        eval: Arc::new(move |x, eps, k| lambda * inner.deriv(x, eps, k)),
        features: a.features.clone(),
        derivative_depth: a.derivative_depth,
        domain: a.domain,
        label: format!("{lambda}*({})", a.label),
    }
}

/// F ∘ a for a smooth F given with its first two derivatives (`F(y, k)`).
pub fn compose_smooth<F>(label: &str, f: F, a: &GenRep) -> GenRep
where
    F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
{
    let inner = a.clone();
    let depth = a.derivative_depth.min(2);
    GenRep {
        eval: Arc::new(move |x, eps, k| {
            let y = inner.deriv(x, eps, 0);
            match k {
                0 => f(y, 0),
                1 => f(y, 1) * inner.deriv(x, eps, 1),
                _ => {
                    let d1 = inner.deriv(x, eps, 1);
                    f(y, 2) * d1 * d1 + f(y, 1) * inner.deriv(x, eps, 2)
                }
            }
        }),
        features: a.features.clone(),
        derivative_depth: depth,
        domain: a.domain,
        label: format!("{label}({})", a.label),
    }
}

pub fn derivative(a: &GenRep, k: usize) -> GenRep {
    let inner = a.clone();
    GenRep {
        eval: Arc::new(move |x, eps, j| inner.deriv(x, eps, j + k)),
        features: a.features.clone(),
        derivative_depth: a.derivative_depth.saturating_sub(k),
        domain: a.domain,
        label: format!("d^{k}({})", a.label),
    }
}

/// Smooth compactly supported test function ψ with derivatives.
#[derive(Clone)]
pub struct TestFunction {
    f: Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>,
    pub support: (f64, f64),
    pub label: String,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction").field("label", &self.label).field("support", &self.support).finish()
    }
}

impl TestFunction {
    pub fn from_fn<F>(label: impl Into<String>, support: (f64, f64), f: F) -> Self
    where
        F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
    {
        Self { f: Arc::new(f), support, label: label.into() }
    }

    /// Bump with ψ(center) = 1 and ψ′(center) = 0.
    pub fn bump(center: f64, half_width: f64) -> Self {
        let peak = std_bump(0.0, 0);
        Self::from_fn(format!("bump({center},{half_width})"), (center - half_width, center + half_width), move |x, k| {
            std_bump((x - center) / half_width, k) / (peak * half_width.powi(k as i32))
        })
    }

    /// (x - center)·bump: ψ(center) = 0, ψ′(center) = 1.
    pub fn odd_bump(center: f64, half_width: f64) -> Self {
        let b = Self::bump(center, half_width);
        Self::from_fn(format!("odd_bump({center},{half_width})"), b.support, move |x, k| {
            let y = x - center;
            match k {
                0 => y * b.eval(x, 0),
                _ => y * b.eval(x, k) + k as f64 * b.eval(x, k - 1),
            }
        })
    }

    pub fn eval(&self, x: f64, k: usize) -> f64 {
        if x <= self.support.0 || x >= self.support.1 {
            return 0.0;
        }
        (self.f)(x, k)
    }
}

/// Outcome classification of an asymptotic test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    /// Sup bound C·ε^{-N}.
    Moderate { n: u32 },
    /// Bound C·ε^q observed, certified only up to the probed order.
    NegligibleToOrder { q: u32 },
    /// Every sample below the numerical floor.
    Vanishing,
    Associated { rate: f64 },
    NotAssociated { limit: f64 },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Moderate { .. } => "moderate",
            Verdict::NegligibleToOrder { .. } => "negligible",
            Verdict::Vanishing => "vanishing",
            Verdict::Associated { .. } => "associated",
            Verdict::NotAssociated { .. } => "not_associated",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn is_associated(&self) -> bool {
        matches!(self, Verdict::Associated { .. } | Verdict::Vanishing)
    }
}

/// Ladder samples with their log-log fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub quantity: String,
    pub eps_ladder: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_order: f64,
    pub intercept: f64,
    pub residual: f64,
    /// Extrapolated ε → 0 limit of the signed values (basis 1, ε^{1/2}, ε) and its fit noise.
    pub limit: Option<f64>,
    pub limit_noise: Option<f64>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<AsymptoticReport>,
}

impl AsymptoticReport {
    /// CSV with columns eps,value.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,value\n");
        for (e, v) in self.eps_ladder.iter().zip(&self.values) {
            s.push_str(&format!("{e:.12e},{v:.12e}\n"));
        }
        s
    }
}

/// Thresholds shared by the tests.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AsymptoticOptions {
    /// Largest order certified by a negligibility verdict.
    pub probe_q: u32,
    /// Max rms of the log-log fit for a definite verdict.
    pub fit_tolerance: f64,
    /// Smallest rate accepted as convergence to zero.
    pub min_rate: f64,
    /// Absolute floor below which a sample counts as zero.
    pub floor: f64,
    /// Grid points per gap for sup-norm sampling.
    pub grid_per_gap: usize,
}

impl Default for AsymptoticOptions {
    fn default() -> Self {
        Self { probe_q: 8, fit_tolerance: 0.05, min_rate: 0.2, floor: 1e-300, grid_per_gap: 200 }
    }
}

/// Default ladder ε = 2^{-j}, j = 3..12.
pub fn default_ladder() -> Vec<f64> {
    crate::numerics::dyadic_ladder(3, 12)
}

fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.len() < 5 {
        return Err(Error::InvalidInput(format!("ladder needs ≥ 5 points, got {}", ladder.len())));
    }
    if ladder.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(Error::InvalidInput("ladder values must lie in (0, 1]".into()));
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("ladder must be strictly decreasing".into()));
    }
    Ok(())
}

/// Grid on K refined between the family's feature points.
pub fn feature_grid(k: (f64, f64), features: &[f64], per_gap: usize) -> Vec<f64> {
    let mut nodes: Vec<f64> = features.iter().copied().filter(|p| *p > k.0 && *p < k.1).collect();
    nodes.push(k.0);
    nodes.push(k.1);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mut grid = Vec::with_capacity(nodes.len() * per_gap);
    for w in nodes.windows(2) {
        for i in 0..per_gap {
            grid.push(w[0] + (w[1] - w[0]) * i as f64 / per_gap as f64);
        }
    }
    grid.push(k.1);
    grid
}

fn order_verdict(fitted: f64, residual: f64, opts: &AsymptoticOptions) -> Verdict {
    if !(residual < opts.fit_tolerance) {
        return Verdict::Inconclusive { reason: format!("log-log fit residual {residual:.3} ≥ {}", opts.fit_tolerance) };
    }
    if fitted >= 0.8 {
        let q = ((fitted + 0.2).floor() as u32).min(opts.probe_q);
        Verdict::NegligibleToOrder { q }
    } else {
        Verdict::Moderate { n: (-fitted - 0.2).ceil().max(0.0) as u32 }
    }
}

fn fit_report(quantity: String, ladder: &[f64], values: Vec<f64>, floor: f64) -> AsymptoticReport {
    let used: Vec<(f64, f64)> = ladder
        .iter()
        .zip(&values)
        .filter(|(_, v)| v.abs() > floor)
        .map(|(e, v)| (e.ln(), v.abs().ln()))
        .collect();
    let (slope, icpt, res) = if used.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = used.iter().copied().unzip();
        fit_line(&xs, &ys)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let (limit, noise) = match extrapolate(ladder, &values, &[0.5, 1.0]) {
        Ok((c, rms)) => (Some(c[0]), Some(rms)),
        Err(_) => (None, None),
    };
    AsymptoticReport {
        quantity,
        eps_ladder: ladder.to_vec(),
        values,
        fitted_order: slope,
        intercept: icpt,
        residual: res,
        limit,
        limit_noise: noise,
        verdict: Verdict::Vanishing,
        components: Vec::new(),
    }
}

/// Fitted order of sup_K |∂ₓᵏ a(·, ε)| along the ladder.
pub fn estimate_order(
    a: &GenRep,
    k_set: (f64, f64),
    k: usize,
    ladder: &[f64],
    opts: &AsymptoticOptions,
) -> Result<AsymptoticReport> {
    check_ladder(ladder)?;
    let mut sups = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let grid = feature_grid(k_set, &a.features(eps), opts.grid_per_gap);
        let mut sup: f64 = 0.0;
        for x in grid {
            let v = a.deriv(x, eps, k);
            if !v.is_finite() {
                return Err(Error::NonFinite { x, eps });
            }
            sup = sup.max(v.abs());
        }
        sups.push(sup);
    }
    let mut rep = fit_report(format!("sup |d^{k} {}| on {:?}", a.label, k_set), ladder, sups, opts.floor);
    rep.verdict = if rep.values.iter().all(|v| *v <= opts.floor) {
        Verdict::Vanishing
    } else if rep.values.iter().any(|v| *v <= opts.floor) {
        Verdict::Inconclusive { reason: "some samples below the numerical floor".into() }
    } else {
        order_verdict(rep.fitted_order, rep.residual, opts)
    };
    Ok(rep)
}

fn pairing_integral(f: &dyn Fn(f64) -> f64, psi: &TestFunction, features: &[f64]) -> Result<f64> {
    let (a, b) = psi.support;
    integrate(|x| f(x) * psi.eval(x, 0), a, b, features, &QuadOptions::default())
}

fn association_verdict(rep: &AsymptoticReport, opts: &AsymptoticOptions) -> Verdict {
    if rep.values.iter().all(|v| v.abs() <= opts.floor.max(1e-14)) {
        return Verdict::Vanishing;
    }
    if rep.fitted_order >= opts.min_rate && rep.residual < opts.fit_tolerance {
        return Verdict::Associated { rate: rep.fitted_order };
    }
    if let (Some(l), Some(n)) = (rep.limit, rep.limit_noise) {
        if l.abs() > 10.0 * n && l.abs() > 1e-8 {
            return Verdict::NotAssociated { limit: l };
        }
    }
    Verdict::Inconclusive {
        reason: format!("rate {:.3} (fit residual {:.3}) neither converges nor has a clear nonzero limit", rep.fitted_order, rep.residual),
    }
}

fn merge_components(quantity: String, ladder: &[f64], comps: Vec<AsymptoticReport>) -> AsymptoticReport {
    let slowest = comps
        .iter()
        .filter(|c| !matches!(c.verdict, Verdict::Vanishing))
        .min_by(|x, y| x.fitted_order.total_cmp(&y.fitted_order))
        .cloned();
    let verdict = if let Some(bad) = comps.iter().find(|c| matches!(c.verdict, Verdict::NotAssociated { .. })) {
        bad.verdict.clone()
    } else if let Some(inc) = comps.iter().find(|c| matches!(c.verdict, Verdict::Inconclusive { .. })) {
        inc.verdict.clone()
    } else if let Some(s) = &slowest {
        Verdict::Associated { rate: s.fitted_order }
    } else {
        Verdict::Vanishing
    };
    let base = slowest.unwrap_or_else(|| comps[0].clone());
    AsymptoticReport {
        quantity,
        eps_ladder: ladder.to_vec(),
        values: base.values,
        fitted_order: base.fitted_order,
        intercept: base.intercept,
        residual: base.residual,
        limit: base.limit,
        limit_noise: base.limit_noise,
        verdict,
        components: comps,
    }
}

/// Is ∫(a - b)ψ → 0 for every ψ? Reports the slowest rate.
pub fn associate(
    a: &GenRep,
    b: &GenRep,
    tests: &[TestFunction],
    ladder: &[f64],
    opts: &AsymptoticOptions,
) -> Result<AsymptoticReport> {
    check_ladder(ladder)?;
    if tests.is_empty() {
        return Err(Error::InvalidInput("association needs at least one test function".into()));
    }
    let domain = GenRep::joint_domain(a, b)?;
    let mut comps = Vec::with_capacity(tests.len());
    for psi in tests {
        if psi.support.0 < domain.0 || psi.support.1 > domain.1 {
            return Err(Error::DomainMismatch(format!("test {} support {:?} outside {:?}", psi.label, psi.support, domain)));
        }
        let mut vals = Vec::with_capacity(ladder.len());
        for &eps in ladder {
            let mut feats = a.features(eps);
            feats.extend(b.features(eps));
            let diff = |x: f64| a.value(x, eps) - b.value(x, eps);
            vals.push(pairing_integral(&diff, psi, &feats)?);
        }
        let mut rep = fit_report(format!("∫({} - {})·{}", a.label, b.label, psi.label), ladder, vals, opts.floor);
        rep.verdict = association_verdict(&rep, opts);
        comps.push(rep);
    }
    Ok(merge_components(format!("{} ≈ {}", a.label, b.label), ladder, comps))
}

/// Association of (a, b) and, when it holds, of (a′, b′).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub base: AsymptoticReport,
    pub derivative: Option<AsymptoticReport>,
}

pub fn association_derivative_check(
    a: &GenRep,
    b: &GenRep,
    tests: &[TestFunction],
    ladder: &[f64],
    opts: &AsymptoticOptions,
) -> Result<DerivativeCheck> {
    let base = associate(a, b, tests, ladder, opts)?;
    let derivative = if base.verdict.is_associated() {
        Some(associate(&derivative(a, 1), &derivative(b, 1), tests, ladder, opts)?)
    } else {
        None
    };
    Ok(DerivativeCheck { base, derivative })
}

/// A classical function with its known non-smooth points.
#[derive(Clone)]
pub struct ClassicalFn {
    pub label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub kinks: Vec<f64>,
}

impl fmt::Debug for ClassicalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClassicalFn").field("label", &self.label).field("kinks", &self.kinks).finish()
    }
}

impl ClassicalFn {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(label: impl Into<String>, kinks: Vec<f64>, f: F) -> Self {
        Self { label: label.into(), f: Arc::new(f), kinks }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

/// ∫ f(x + εμ) ρ(μ) dμ.
pub fn mollify_at(f: &dyn Fn(f64) -> f64, kinks: &[f64], rho: &Mollifier, x: f64, eps: f64) -> Result<f64> {
    let (a, b) = rho.support();
    let mut bps: Vec<f64> = kinks.iter().map(|k| (k - x) / eps).collect();
    bps.push(rho.base.center * rho.scale);
    let opts = QuadOptions { abs_tol: 1e-16, rel_tol: 1e-15, max_intervals: 4000 };
    integrate(|mu| f(x + eps * mu) * rho.eval(mu), a, b, &bps, &opts)
}

/// Sup over K of the product defect (ρ_ε*f)(ρ_ε*g) - ρ_ε*(fg).
pub fn product_defect_order(
    f: &ClassicalFn,
    g: &ClassicalFn,
    rho: &Mollifier,
    k_set: (f64, f64),
    ladder: &[f64],
    opts: &AsymptoticOptions,
) -> Result<AsymptoticReport> {
    if rho.moment_order < 1 {
        return Err(Error::InvalidInput("product defect needs a kernel with q ≥ 1".into()));
    }
    check_ladder(ladder)?;
    let mut kinks = f.kinks.clone();
    kinks.extend(&g.kinks);
    let fg = |x: f64| f.eval(x) * g.eval(x);
    let (ra, rb) = rho.support();
    let mut sups = Vec::with_capacity(ladder.len());
    let mut scale: f64 = 0.0;
    for &eps in ladder {
        // Refine around each kink's ε-neighbourhood.
        let mut feats: Vec<f64> = Vec::new();
        for k in &kinks {
            feats.extend([k - eps * rb, k - eps * ra, *k]);
        }
        let grid = feature_grid(k_set, &feats, (opts.grid_per_gap / 4).max(16));
        let mut sup: f64 = 0.0;
        for x in grid {
            let mf = mollify_at(&|t| f.eval(t), &kinks, rho, x, eps)?;
            let mg = mollify_at(&|t| g.eval(t), &kinks, rho, x, eps)?;
            let mfg = mollify_at(&fg, &kinks, rho, x, eps)?;
            let d = mf * mg - mfg;
            if !d.is_finite() {
                return Err(Error::NonFinite { x, eps });
            }
            sup = sup.max(d.abs());
            scale = scale.max(mfg.abs()).max((mf * mg).abs());
        }
        sups.push(sup);
    }
    // Cancellation floor of the subtraction.
    let floor = opts.floor.max(32.0 * f64::EPSILON * scale);
    let mut rep = fit_report(format!("sup |{}•{} - {}.{}| on {:?}", f.label, g.label, f.label, g.label, k_set), ladder, sups, floor);
    let above = rep.values.iter().filter(|v| **v > floor).count();
    rep.verdict = if above == 0 {
        Verdict::Vanishing
    } else if above < rep.values.len() {
        Verdict::Inconclusive {
            reason: format!("{} of {} samples below the roundoff floor {floor:.1e}; shorten the ladder", rep.values.len() - above, rep.values.len()),
        }
    } else {
        order_verdict(rep.fitted_order, rep.residual, opts)
    };
    Ok(rep)
}

/// Space-time test function ψ(x,t) = φ(x)·χ(t).
#[derive(Debug, Clone)]
pub struct SpaceTimeTest {
    pub space: TestFunction,
    pub time: TestFunction,
}

impl SpaceTimeTest {
    pub fn new(space: TestFunction, time: TestFunction) -> Self {
        Self { space, time }
    }

    pub fn label(&self) -> String {
        format!("{}x{}", self.space.label, self.time.label)
    }
}

/// Space-time family (x, t, ε) ↦ u with ε-dependent front locations at each t.
#[derive(Clone)]
pub struct SpaceTimeRep {
    f: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    features: Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>,
    pub label: String,
}

impl fmt::Debug for SpaceTimeRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpaceTimeRep").field("label", &self.label).finish()
    }
}

impl SpaceTimeRep {
    pub fn new<F, G>(label: impl Into<String>, f: F, features: G) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { f: Arc::new(f), features: Arc::new(features), label: label.into() }
    }

    pub fn value(&self, x: f64, t: f64, eps: f64) -> f64 {
        (self.f)(x, t, eps)
    }

    pub fn features(&self, t: f64, eps: f64) -> Vec<f64> {
        (self.features)(t, eps)
    }
}

/// ∫∫ (D ψ_t + F ψ_x) dx dt for a density/flux pair `(x, t, ε) ↦ (D, F)`.
pub fn weak_integral<DF, FE>(pair: &DF, features: &FE, psi: &SpaceTimeTest, eps: f64) -> Result<f64>
where
    DF: Fn(f64, f64, f64) -> (f64, f64),
    FE: Fn(f64, f64) -> Vec<f64>,
{
    let (xa, xb) = psi.space.support;
    let (ta, tb) = psi.time.support;
    let opts = QuadOptions::default().with_abs_tol(1e-11);
    let inner_err = std::cell::Cell::new(None);
    let outer = |t: f64| {
        let (c0, c1) = (psi.time.eval(t, 0), psi.time.eval(t, 1));
        if c0 == 0.0 && c1 == 0.0 {
            return 0.0;
        }
        let feats = features(t, eps);
        let r = integrate(
            |x| {
                let (d, fl) = pair(x, t, eps);
                d * psi.space.eval(x, 0) * c1 + fl * psi.space.eval(x, 1) * c0
            },
            xa,
            xb,
            &feats,
            &opts,
        );
        match r {
            Ok(v) => v,
            Err(e) => {
                inner_err.set(Some(e));
                f64::NAN
            }
        }
    };
    let tcenter = 0.5 * (ta + tb);
    let v = integrate(outer, ta, tb, &[tcenter], &opts);
    if let Some(e) = inner_err.take() {
        return Err(e);
    }
    v
}

/// Weak residual ladder for a density/flux pair against space-time tests.
pub fn weak_residual_pairs<DF, FE>(
    label: &str,
    pair: DF,
    features: FE,
    tests: &[SpaceTimeTest],
    ladder: &[f64],
    opts: &AsymptoticOptions,
) -> Result<AsymptoticReport>
where
    DF: Fn(f64, f64, f64) -> (f64, f64),
    FE: Fn(f64, f64) -> Vec<f64>,
{
    check_ladder(ladder)?;
    if tests.is_empty() {
        return Err(Error::InvalidInput("weak residual needs at least one test function".into()));
    }
    let mut comps = Vec::with_capacity(tests.len());
    for psi in tests {
        let vals = ladder.iter().map(|&eps| weak_integral(&pair, &features, psi, eps)).collect::<Result<Vec<_>>>()?;
        let mut rep = fit_report(format!("weak residual of {label} against {}", psi.label()), ladder, vals, opts.floor);
        rep.verdict = association_verdict(&rep, &AsymptoticOptions { floor: opts.floor.max(1e-10), ..*opts });
        comps.push(rep);
    }
    Ok(merge_components(format!("weak residual of {label}"), ladder, comps))
}

/// ∫∫ (u ψ_t + f(u) ψ_x) dx dt along the ladder for the scalar law u_t + f(u)_x = 0.
pub fn weak_residual_spacetime<F>(
    u: &SpaceTimeRep,
    flux: F,
    tests: &[SpaceTimeTest],
    ladder: &[f64],
    opts: &AsymptoticOptions,
) -> Result<AsymptoticReport>
where
    F: Fn(f64) -> f64,
{
    weak_residual_pairs(
        &u.label,
        |x, t, eps| {
            let v = u.value(x, t, eps);
            (v, flux(v))
        },
        |t, eps| u.features(t, eps),
        tests,
        ladder,
        opts,
    )
}
