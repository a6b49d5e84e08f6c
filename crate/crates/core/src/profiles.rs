//! Kernels and microscopic shapes.
//!
//! Everything here is built from the bump `exp(-1/(1-y²))`: mollifiers are
//! polynomial corrections of it, the monotone Heaviside profile is its
//! normalized antiderivative, and the √δ and KK shapes are sums of scaled copies.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{brent, HermiteTable};
use crate::quadrature::{integrate, kronrod_fixed, QuadOptions};

/// Unnormalized bump on (-1, 1) and its first two derivatives.
pub fn std_bump(y: f64, k: usize) -> f64 {
    if y <= -1.0 || y >= 1.0 {
        return 0.0;
    }
    let d = 1.0 - y * y;
    let b = (-1.0 / d).exp();
    match k {
        0 => b,
        1 => b * (-2.0 * y / (d * d)),
        2 => {
            let g1 = -2.0 * y / (d * d);
            let g2 = -2.0 / (d * d) - 8.0 * y * y / (d * d * d);
            b * (g1 * g1 + g2)
        }
        _ => fd_derivative(|t| std_bump(t, 2), y, k - 2, 1e-3),
    }
}

/// Central-difference fallback for derivatives beyond the analytic ones.
pub(crate) fn fd_derivative<F: Fn(f64) -> f64>(f: F, x: f64, k: usize, h: f64) -> f64 {
    fd_rec(&f, x, k, h)
}

fn fd_rec(f: &dyn Fn(f64) -> f64, x: f64, k: usize, h: f64) -> f64 {
    match k {
        0 => f(x),
        _ => (fd_rec(f, x + h, k - 1, h) - fd_rec(f, x - h, k - 1, h)) / (2.0 * h),
    }
}

/// ∫_{-1}^{1} exp(-1/(1-y²)) dy.
pub fn std_bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        integrate(|y| std_bump(y, 0), -1.0, 1.0, &[0.0], &QuadOptions::default().with_abs_tol(1e-15))
            .expect("bump mass quadrature")
    })
}

/// A scaled and shifted copy of the standard bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseBump {
    pub center: f64,
    pub half_width: f64,
}

impl BaseBump {
    pub const fn standard() -> Self {
        Self { center: 0.0, half_width: 1.0 }
    }

    /// Default mollifier base: unit half-width, centred off the origin so
    /// that even-q kernels do not pick up an extra vanishing moment by symmetry.
    pub const fn offset() -> Self {
        Self { center: 0.25, half_width: 1.0 }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn eval(&self, x: f64, k: usize) -> f64 {
        std_bump((x - self.center) / self.half_width, k) / self.half_width.powi(k as i32)
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite() && self.center.is_finite()) {
            return Err(Error::InvalidInput(format!("bump needs finite centre and positive width, got {self:?}")));
        }
        Ok(())
    }
}

impl Default for BaseBump {
    fn default() -> Self {
        Self::offset()
    }
}

fn legendre(n: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return p0;
    }
    for j in 1..n {
        let p2 = ((2 * j + 1) as f64 * t * p1 - j as f64 * p0) / (j + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Kernel in A_q: unit mass, moments 1..q vanish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub base: BaseBump,
    pub moment_order: usize,
    /// Coefficients of the polynomial multiplier in Legendre polynomials of
    /// the base's normalized coordinate.
    pub coefficients: Vec<f64>,
    /// Support rescaling λ: the kernel is (1/λ)ρ₁(x/λ).
    pub scale: f64,
}

impl Mollifier {
    pub fn support(&self) -> (f64, f64) {
        let (a, b) = self.base.support();
        (a * self.scale, b * self.scale)
    }

    fn unscaled(&self, x: f64) -> f64 {
        let (a, b) = self.base.support();
        if x <= a || x >= b {
            return 0.0;
        }
        let t = (x - self.base.center) / self.base.half_width;
        let p: f64 = self.coefficients.iter().enumerate().map(|(j, c)| c * legendre(j, t)).sum();
        p * self.base.eval(x, 0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.unscaled(x / self.scale) / self.scale
    }

    /// (1/λ)ρ(x/λ).
    pub fn rescaled(&self, lambda: f64) -> Self {
        Self { scale: self.scale * lambda, ..self.clone() }
    }

    /// ∫x^i ρ(x)dx by adaptive quadrature.
    pub fn moment(&self, i: usize) -> f64 {
        let (a, b) = self.support();
        let mid = 0.5 * (a + b);
        integrate(|x| x.powi(i as i32) * self.eval(x), a, b, &[mid], &QuadOptions::default().with_abs_tol(1e-15))
            .unwrap_or(f64::NAN)
    }
}

/// Build ρ ∈ A_q by multiplying the base bump with a degree-q polynomial.
///
/// Constraint rows use Legendre polynomials in x (which span the same space as
/// x⁰..x^q, with right-hand side L_i(0)); unknowns are Legendre coefficients
/// in the base's normalized coordinate.
pub fn make_mollifier(base: BaseBump, q: usize) -> Result<Mollifier> {
    base.validate()?;
    let n = q + 1;
    let (a, b) = base.support();
    let opts = QuadOptions::default().with_abs_tol(1e-15);
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = integrate(
                |x| {
                    let t = (x - base.center) / base.half_width;
                    legendre(i, x) * legendre(j, t) * base.eval(x, 0)
                },
                a,
                b,
                &[base.center],
                &opts,
            )?;
        }
    }
    let rhs = DVector::from_fn(n, |i, _| legendre(i, 0.0));
    let coefficients = gauss_solve(gram, rhs)?;
    Ok(Mollifier { base, moment_order: q, coefficients, scale: 1.0 })
}

/// Partial-pivot elimination that reports the first vanishing pivot.
fn gauss_solve(mut m: DMatrix<f64>, mut rhs: DVector<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let (piv_row, piv) = (col..n)
            .map(|r| (r, m[(r, col)]))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .unwrap();
        if !(piv.abs() > 1e-13 * scale) {
            return Err(Error::SingularMoments { moment: col, pivot: piv });
        }
        m.swap_rows(col, piv_row);
        rhs.swap_rows(col, piv_row);
        for r in col + 1..n {
            let f = m[(r, col)] / m[(col, col)];
            for c in col..n {
                m[(r, c)] -= f * m[(col, c)];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[(r, c)] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[(r, r)];
    }
    Ok(x)
}

/// A real shape on the normalized variable ξ with analytic derivatives up to
/// `max_derivative()`.
pub trait Shape: Send + Sync + fmt::Debug {
    fn eval(&self, xi: f64, k: usize) -> f64;
    /// Interval outside which the shape is constant.
    fn support(&self) -> (f64, f64);
    /// Interior points where the shape is not analytic or changes character.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    fn max_derivative(&self) -> usize {
        2
    }
}

const CDF_PANELS: usize = 128;

/// Normalized antiderivative of the standard bump: smooth, monotone, 0 → 1 on (-1, 1).
#[derive(Debug, Clone, Copy)]
pub struct MonotoneStep;

fn cdf_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut cum = vec![0.0; CDF_PANELS + 1];
        for i in 0..CDF_PANELS {
            let a = -1.0 + 2.0 * i as f64 / CDF_PANELS as f64;
            let b = a + 2.0 / CDF_PANELS as f64;
            cum[i + 1] = cum[i] + kronrod_fixed(|y| std_bump(y, 0), a, b);
        }
        let total = cum[CDF_PANELS];
        cum.iter_mut().for_each(|c| *c /= total);
        cum
    })
}

/// Monotone step value at y.
pub fn monotone_step(y: f64) -> f64 {
    if y <= -1.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 1.0;
    }
    let cum = cdf_table();
    let i = (((y + 1.0) * 0.5 * CDF_PANELS as f64).floor() as usize).min(CDF_PANELS - 1);
    let a = -1.0 + 2.0 * i as f64 / CDF_PANELS as f64;
    let part = kronrod_fixed(|t| std_bump(t, 0), a, y) / std_bump_mass();
    (cum[i] + part).clamp(0.0, 1.0)
}

impl Shape for MonotoneStep {
    fn eval(&self, xi: f64, k: usize) -> f64 {
        match k {
            0 => monotone_step(xi),
            _ => std_bump(xi, k - 1) / std_bump_mass(),
        }
    }
    fn support(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn max_derivative(&self) -> usize {
        3
    }
}

#[derive(Debug, Clone)]
struct PowerShape {
    inner: Arc<dyn Shape>,
    n: u32,
}

impl Shape for PowerShape {
    fn eval(&self, xi: f64, k: usize) -> f64 {
        let n = self.n as f64;
        let m = self.inner.eval(xi, 0);
        match k {
            0 => m.powi(self.n as i32),
            1 => n * m.powi(self.n as i32 - 1) * self.inner.eval(xi, 1),
            2 => {
                let d1 = self.inner.eval(xi, 1);
                let d2 = self.inner.eval(xi, 2);
                let lower = if self.n >= 2 { n * (n - 1.0) * m.powi(self.n as i32 - 2) } else { 0.0 };
                lower * d1 * d1 + n * m.powi(self.n as i32 - 1) * d2
            }
            _ => fd_derivative(|t| self.eval(t, 2), xi, k - 2, 1e-4),
        }
    }
    fn support(&self) -> (f64, f64) {
        self.inner.support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }
}

/// Inner shape evaluated on an affinely mapped variable: inner((ξ - shift)/stretch).
#[derive(Debug, Clone)]
pub struct AffineShape {
    pub inner: Arc<dyn Shape>,
    pub shift: f64,
    pub stretch: f64,
    pub amplitude: f64,
}

impl Shape for AffineShape {
    fn eval(&self, xi: f64, k: usize) -> f64 {
        self.amplitude * self.inner.eval((xi - self.shift) / self.stretch, k) / self.stretch.powi(k as i32)
    }
    fn support(&self) -> (f64, f64) {
        let (a, b) = self.inner.support();
        (a * self.stretch + self.shift, b * self.stretch + self.shift)
    }
    fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.support();
        let mut v: Vec<f64> = self.inner.breakpoints().iter().map(|p| p * self.stretch + self.shift).collect();
        v.extend([a, b]);
        v
    }
    fn max_derivative(&self) -> usize {
        self.inner.max_derivative()
    }
}

#[derive(Debug, Clone)]
struct TableShape {
    table: HermiteTable,
}

impl Shape for TableShape {
    fn eval(&self, xi: f64, k: usize) -> f64 {
        self.table.eval(xi, k)
    }
    fn support(&self) -> (f64, f64) {
        self.table.range()
    }
    fn breakpoints(&self) -> Vec<f64> {
        let x = self.table.nodes();
        // Every node is a potential kink in the second derivative; keep a thinned set.
        let step = (x.len() / 64).max(1);
        x.iter().step_by(step).copied().collect()
    }
}

/// outer(driver(ξ)) for an outer map tabulated on [0, 1].
#[derive(Debug, Clone)]
pub struct ComposedShape {
    pub outer: HermiteTable,
    pub driver: Arc<dyn Shape>,
}

impl Shape for ComposedShape {
    fn eval(&self, xi: f64, k: usize) -> f64 {
        let s = self.driver.eval(xi, 0);
        match k {
            0 => self.outer.eval(s, 0),
            1 => self.outer.eval(s, 1) * self.driver.eval(xi, 1),
            2 => {
                let d1 = self.driver.eval(xi, 1);
                self.outer.eval(s, 2) * d1 * d1 + self.outer.eval(s, 1) * self.driver.eval(xi, 2)
            }
            _ => fd_derivative(|t| self.eval(t, 2), xi, k - 2, 1e-4),
        }
    }
    fn support(&self) -> (f64, f64) {
        self.driver.support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.driver.breakpoints()
    }
}

/// Sum of weighted shapes.
#[derive(Debug, Clone)]
pub struct SumShape {
    pub parts: Vec<(f64, Arc<dyn Shape>)>,
}

impl Shape for SumShape {
    fn eval(&self, xi: f64, k: usize) -> f64 {
        self.parts.iter().map(|(w, s)| w * s.eval(xi, k)).sum()
    }
    fn support(&self) -> (f64, f64) {
        self.parts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, (_, s)| {
            let (a, b) = s.support();
            (acc.0.min(a), acc.1.max(b))
        })
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.parts.iter().flat_map(|(_, s)| {
            let (a, b) = s.support();
            let mut v = s.breakpoints();
            v.extend([a, b]);
            v
        })
        .collect()
    }
    fn max_derivative(&self) -> usize {
        self.parts.iter().map(|(_, s)| s.max_derivative()).min().unwrap_or(2)
    }
}

#[derive(Debug, Clone)]
struct BumpShape(BaseBump);

impl Shape for BumpShape {
    fn eval(&self, xi: f64, k: usize) -> f64 {
        self.0.eval(xi, k)
    }
    fn support(&self) -> (f64, f64) {
        self.0.support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.0.center]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Heaviside,
    SqrtDelta,
    KkCorrector,
}

/// A microscopic shape with its kind and far-field limits.
#[derive(Clone)]
pub struct Profile {
    pub kind: ProfileKind,
    pub label: String,
    pub shape: Arc<dyn Shape>,
    pub limits: (f64, f64),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .field("limits", &self.limits)
            .field("support", &self.support())
            .finish()
    }
}

impl Profile {
    pub fn value(&self, xi: f64) -> f64 {
        self.shape.eval(xi, 0)
    }

    /// k-th derivative; analytic where available, central differences beyond.
    pub fn derivative(&self, xi: f64, k: usize) -> f64 {
        let top = self.shape.max_derivative();
        if k <= top {
            self.shape.eval(xi, k)
        } else {
            let (a, b) = self.support();
            fd_derivative(|t| self.shape.eval(t, top), xi, k - top, 1e-4 * (b - a))
        }
    }

    pub fn support(&self) -> (f64, f64) {
        self.shape.support()
    }

    /// Support edges plus interior breakpoints, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.support();
        let mut v = self.shape.breakpoints();
        v.extend([a, b]);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// ∫ g(ξ) over the support, split at breakpoints.
    pub fn integrate_over_support<F: Fn(f64) -> f64>(&self, g: F) -> Result<f64> {
        let (a, b) = self.support();
        integrate(g, a, b, &self.breakpoints(), &QuadOptions::default())
    }

    /// Two-column CSV (xi,value) on n+1 uniform samples, padded 10% past the support.
    pub fn to_csv(&self, n: usize) -> String {
        let (a, b) = self.support();
        let pad = 0.1 * (b - a);
        let (lo, hi) = (a - pad, b + pad);
        let mut out = String::from("xi,value\n");
        for i in 0..=n {
            let xi = lo + (hi - lo) * i as f64 / n as f64;
            out.push_str(&format!("{xi:.12e},{:.12e}\n", self.value(xi)));
        }
        out
    }

    pub fn is_heaviside(&self) -> bool {
        self.kind == ProfileKind::Heaviside
    }
}

/// Recipe for a Heaviside profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HeavisideKind {
    Monotone,
    Power { n: u32 },
    DelayedFoot { theta: f64 },
    Table { xi: Vec<f64>, values: Vec<f64> },
}

const TABLE_TOL: f64 = 1e-9;

pub fn make_heaviside_profile(kind: HeavisideKind) -> Result<Profile> {
    let mono: Arc<dyn Shape> = Arc::new(MonotoneStep);
    let (shape, label): (Arc<dyn Shape>, String) = match &kind {
        HeavisideKind::Monotone => (mono, "monotone".into()),
        HeavisideKind::Power { n } => {
            if *n < 1 {
                return Err(Error::InvalidInput("power profile needs n >= 1".into()));
            }
            (Arc::new(PowerShape { inner: mono, n: *n }), format!("power({n})"))
        }
        HeavisideKind::DelayedFoot { theta } => {
            if !(0.0..1.0).contains(theta) {
                return Err(Error::InvalidInput(format!("foot fraction must be in [0,1), got {theta}")));
            }
            // Transition on [-1 + 2θ, 1], flat 0 before it.
            let start = -1.0 + 2.0 * theta;
            let stretch = 0.5 * (1.0 - start);
            let shape = AffineShape { inner: mono, shift: start + stretch, stretch, amplitude: 1.0 };
            (Arc::new(FootShape { body: shape, foot_start: -1.0 }), format!("delayed_foot({theta})"))
        }
        HeavisideKind::Table { xi, values } => {
            validate_table(xi, values)?;
            let table = HermiteTable::pchip(xi.clone(), values.clone())?;
            (Arc::new(TableShape { table }), "table".into())
        }
    };
    Ok(Profile { kind: ProfileKind::Heaviside, label, shape, limits: (0.0, 1.0) })
}

/// Delayed-foot wrapper so the reported support still starts at the foot.
#[derive(Debug, Clone)]
struct FootShape {
    body: AffineShape,
    foot_start: f64,
}

impl Shape for FootShape {
    fn eval(&self, xi: f64, k: usize) -> f64 {
        self.body.eval(xi, k)
    }
    fn support(&self) -> (f64, f64) {
        (self.foot_start, self.body.support().1)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.body.breakpoints()
    }
    fn max_derivative(&self) -> usize {
        self.body.max_derivative()
    }
}

fn validate_table(xi: &[f64], values: &[f64]) -> Result<()> {
    if xi.len() < 2 || xi.len() != values.len() {
        return Err(Error::ProfileValidation("table needs ≥ 2 (xi, value) pairs of equal length".into()));
    }
    if xi.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::ProfileValidation("table xi must be strictly increasing".into()));
    }
    let (first, last) = (values[0], values[values.len() - 1]);
    if first.abs() > TABLE_TOL || (last - 1.0).abs() > TABLE_TOL {
        return Err(Error::ProfileValidation(format!("table limits must be (0, 1), got ({first}, {last})")));
    }
    if let Some(v) = values.iter().find(|v| !(-TABLE_TOL..=1.0 + TABLE_TOL).contains(*v)) {
        return Err(Error::ProfileValidation(format!("table value {v} outside [0, 1]")));
    }
    if values.windows(2).any(|w| w[1] < w[0] - TABLE_TOL) {
        return Err(Error::ProfileValidation("table values must be nondecreasing".into()));
    }
    Ok(())
}

/// Heaviside profile given as outer(driver(ξ)); outer maps [0,1] onto [0,1].
pub fn composed_heaviside(outer: HermiteTable, driver: &Profile, label: impl Into<String>) -> Result<Profile> {
    let (s0, s1) = (outer.eval(0.0, 0), outer.eval(1.0, 0));
    if s0.abs() > 1e-8 || (s1 - 1.0).abs() > 1e-8 {
        return Err(Error::ProfileValidation(format!("composed profile limits ({s0}, {s1}) are not (0, 1)")));
    }
    Ok(Profile {
        kind: ProfileKind::Heaviside,
        label: label.into(),
        shape: Arc::new(ComposedShape { outer, driver: driver.shape.clone() }),
        limits: (0.0, 1.0),
    })
}

/// Profile evaluated at (ξ - shift)/stretch, keeping kind and limits.
pub fn affine_profile(p: &Profile, shift: f64, stretch: f64) -> Profile {
    Profile {
        kind: p.kind,
        label: format!("{}@({shift},{stretch})", p.label),
        shape: Arc::new(AffineShape { inner: p.shape.clone(), shift, stretch, amplitude: 1.0 }),
        limits: p.limits,
    }
}

/// Compactly supported seed for √δ shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChiSpec {
    Bump(BaseBump),
    /// 1 on |ξ| ≤ plateau, smooth monotone ramps of width `ramp` on each side.
    SmoothBox { plateau: f64, ramp: f64 },
    Zero,
}

#[derive(Debug, Clone)]
struct ZeroShape;

impl Shape for ZeroShape {
    fn eval(&self, _xi: f64, _k: usize) -> f64 {
        0.0
    }
    fn support(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }
}

fn chi_shape(chi: &ChiSpec) -> Result<Arc<dyn Shape>> {
    Ok(match chi {
        ChiSpec::Bump(b) => {
            b.validate()?;
            Arc::new(BumpShape(*b))
        }
        ChiSpec::SmoothBox { plateau, ramp } => {
            if !(*plateau >= 0.0 && *ramp > 0.0) {
                return Err(Error::InvalidInput("smooth box needs plateau ≥ 0 and ramp > 0".into()));
            }
            let half = 0.5 * ramp;
            let edge = plateau + half;
            let mono: Arc<dyn Shape> = Arc::new(MonotoneStep);
            let up = AffineShape { inner: mono.clone(), shift: -edge, stretch: half, amplitude: 1.0 };
            let down = AffineShape { inner: mono, shift: edge, stretch: half, amplitude: 1.0 };
            Arc::new(SumShape {
                parts: vec![(1.0, Arc::new(up)), (-1.0, Arc::new(down))],
            })
        }
        ChiSpec::Zero => Arc::new(ZeroShape),
    })
}

/// χ normalized so ∫shape² = 1.
pub fn make_sqrt_delta_profile(chi: &ChiSpec) -> Result<Profile> {
    let raw = chi_shape(chi)?;
    let probe = Profile { kind: ProfileKind::SqrtDelta, label: String::new(), shape: raw.clone(), limits: (0.0, 0.0) };
    let norm2 = probe.integrate_over_support(|x| raw.eval(x, 0).powi(2))?;
    if !(norm2 > 1e-300) {
        return Err(Error::InvalidInput("√δ seed has zero L² norm".into()));
    }
    let amp = 1.0 / norm2.sqrt();
    Ok(Profile {
        kind: ProfileKind::SqrtDelta,
        label: "sqrt_delta".into(),
        shape: Arc::new(AffineShape { inner: raw, shift: 0.0, stretch: 1.0, amplitude: amp }),
        limits: (0.0, 0.0),
    })
}

/// Recipe for the sign-changing corrector with ∫ρ²=1, ∫ρ³=0, ξρ(ξ) ≤ 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KkSpec {
    /// Positive bump on (-1, 0) and a negative bump on (0, width_ratio),
    /// amplitude ratio root-found for ∫ρ³ = 0.
    TwoLobe { width_ratio: f64 },
    /// A fixed seed shape; only normalized and checked.
    Fixed(ChiSpec),
}

impl Default for KkSpec {
    fn default() -> Self {
        KkSpec::TwoLobe { width_ratio: 0.5 }
    }
}

const KK_TOL: f64 = 1e-10;

fn lobe(center: f64, half_width: f64) -> Arc<dyn Shape> {
    Arc::new(BumpShape(BaseBump { center, half_width }))
}

pub fn make_kk_corrector(spec: &KkSpec) -> Result<Profile> {
    let opts = QuadOptions::default().with_abs_tol(1e-15);
    let raw: Arc<dyn Shape> = match spec {
        KkSpec::TwoLobe { width_ratio } => {
            let r = *width_ratio;
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidInput(format!("width ratio must be in (0, 1], got {r}")));
            }
            let pos = lobe(-0.5, 0.5);
            let neg = lobe(0.5 * r, 0.5 * r);
            let cube = |s: &Arc<dyn Shape>| {
                let (a, b) = s.support();
                integrate(|x| s.eval(x, 0).powi(3), a, b, &[0.5 * (a + b)], &opts)
            };
            let (p3, n3) = (cube(&pos)?, cube(&neg)?);
            // ∫(pos - β·neg)³ = p3 - β³ n3 on disjoint supports.
            let beta = brent(|b| p3 - b * b * b * n3, 0.0, 1e3, 1e-15, 200)?;
            Arc::new(SumShape { parts: vec![(1.0, pos), (-beta, neg)] })
        }
        KkSpec::Fixed(chi) => chi_shape(chi)?,
    };
    let probe = Profile { kind: ProfileKind::KkCorrector, label: String::new(), shape: raw.clone(), limits: (0.0, 0.0) };
    let n2 = probe.integrate_over_support(|x| raw.eval(x, 0).powi(2))?;
    if !(n2 > 1e-300) {
        return Err(Error::Infeasible { detail: "seed has zero L² norm".into(), residuals: vec![1.0, 0.0] });
    }
    let amp = 1.0 / n2.sqrt();
    let shape: Arc<dyn Shape> = Arc::new(AffineShape { inner: raw, shift: 0.0, stretch: 1.0, amplitude: amp });
    let prof = Profile { kind: ProfileKind::KkCorrector, label: "kk_corrector".into(), shape, limits: (0.0, 0.0) };

    let cube = prof.integrate_over_support(|x| prof.value(x).powi(3))?;
    let (a, b) = prof.support();
    let sign_violation = (0..=4000)
        .map(|i| {
            let x = a + (b - a) * i as f64 / 4000.0;
            (x * prof.value(x)).max(0.0)
        })
        .fold(0.0, f64::max);
    let inside = a > -1.0 - 1e-12 && b < 1.0 + 1e-12;
    if cube.abs() > KK_TOL || sign_violation > 0.0 || !inside {
        return Err(Error::Infeasible {
            detail: format!(
                "need ∫ρ³ = 0, ξρ(ξ) ≤ 0 and support in (-1, 1); got ∫ρ³ = {cube:e}, max ξρ = {sign_violation:e}, support ({a}, {b})"
            ),
            residuals: vec![cube, sign_violation],
        });
    }
    Ok(prof)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivatives_match_differences() {
        for &y in &[-0.7, -0.2, 0.1, 0.55, 0.9] {
            let h = 1e-5;
            let d1 = (std_bump(y + h, 0) - std_bump(y - h, 0)) / (2.0 * h);
            let d2 = (std_bump(y + h, 1) - std_bump(y - h, 1)) / (2.0 * h);
            assert!((std_bump(y, 1) - d1).abs() < 1e-8);
            assert!((std_bump(y, 2) - d2).abs() < 1e-7);
        }
    }

    #[test]
    fn monotone_step_is_symmetric_cdf() {
        assert!((monotone_step(0.0) - 0.5).abs() < 1e-14);
        for &y in &[0.1, 0.37, 0.8, 0.999] {
            assert!((monotone_step(y) + monotone_step(-y) - 1.0).abs() < 1e-13);
        }
        let direct = integrate(|t| std_bump(t, 0), -1.0, 0.3, &[], &QuadOptions::default()).unwrap() / std_bump_mass();
        assert!((monotone_step(0.3) - direct).abs() < 1e-13);
    }

    #[test]
    fn gram_solver_reports_singular_moment() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = gauss_solve(m, DVector::from_vec(vec![1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::SingularMoments { moment: 1, .. }));
    }

    #[test]
    fn kk_amplitude_ratio_matches_closed_form() {
        // ∫(bump scaled by w)³ = w∫b³, so β = (1/r)^{1/3}.
        let p = make_kk_corrector(&KkSpec::TwoLobe { width_ratio: 0.5 }).unwrap();
        let left = p.value(-0.5);
        let right = p.value(0.25);
        assert!((-right / left - 2f64.cbrt()).abs() < 1e-10);
    }
}
