//! Small numerical helpers shared across modules: log-log order fits,
//! least squares extrapolation, scalar root bracketing and cubic Hermite tables.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares line fit. Returns (slope, intercept, rms residual).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    (slope, intercept, (ss / n).sqrt())
}

/// Fit `values(eps) ≈ c0 + Σ_k c_k eps^{powers[k]}` by least squares.
/// Returns (coefficients with c0 first, rms residual).
pub fn extrapolate(eps: &[f64], values: &[f64], powers: &[f64]) -> Result<(Vec<f64>, f64)> {
    let cols = powers.len() + 1;
    if eps.len() < cols {
        return Err(Error::InvalidInput(format!(
            "extrapolation needs at least {cols} ladder points, got {}",
            eps.len()
        )));
    }
    let a = DMatrix::from_fn(eps.len(), cols, |i, j| if j == 0 { 1.0 } else { eps[i].powf(powers[j - 1]) });
    let b = DVector::from_column_slice(values);
    let svd = a.clone().svd(true, true);
    let coef = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidInput(format!("extrapolation solve failed: {e}")))?;
    let resid = &a * &coef - &b;
    let rms = (resid.norm_squared() / eps.len() as f64).sqrt();
    Ok((coef.iter().copied().collect(), rms))
}

/// Brent's method on a bracketing interval.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::InvalidInput(format!(
            "root not bracketed: f({a}) = {fa}, f({b}) = {fb}"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::InvalidInput("Brent iteration limit reached".into()))
}

/// Piecewise cubic Hermite interpolant on strictly increasing nodes.
/// Outside the node range it extends constantly with the end values.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl HermiteTable {
    pub fn new(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != y.len() || x.len() != dy.len() {
            return Err(Error::InvalidInput("Hermite table needs ≥ 2 nodes with matching lengths".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("Hermite table nodes must be strictly increasing".into()));
        }
        Ok(Self { x, y, dy })
    }

    /// Monotonicity-preserving (Fritsch–Carlson) slopes from samples alone.
    pub fn pchip(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidInput("PCHIP needs ≥ 2 samples".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Self::new(x, y, d)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn locate(&self, t: f64) -> usize {
        match self.x.binary_search_by(|p| p.total_cmp(&t)) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    /// k-th derivative (k ≤ 3) of the interpolant at t.
    pub fn eval(&self, t: f64, k: usize) -> f64 {
        let (lo, hi) = self.range();
        if t <= lo {
            return if k == 0 { self.y[0] } else { 0.0 };
        }
        if t >= hi {
            return if k == 0 { self.y[self.y.len() - 1] } else { 0.0 };
        }
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.dy[i] * h, self.dy[i + 1] * h);
        // Hermite basis derivatives with respect to s.
        let (h00, h10, h01, h11) = match k {
            0 => (
                2.0 * s * s * s - 3.0 * s * s + 1.0,
                s * s * s - 2.0 * s * s + s,
                -2.0 * s * s * s + 3.0 * s * s,
                s * s * s - s * s,
            ),
            1 => (6.0 * s * s - 6.0 * s, 3.0 * s * s - 4.0 * s + 1.0, -6.0 * s * s + 6.0 * s, 3.0 * s * s - 2.0 * s),
            2 => (12.0 * s - 6.0, 6.0 * s - 4.0, -12.0 * s + 6.0, 6.0 * s - 2.0),
            3 => (12.0, 6.0, -12.0, 6.0),
            _ => return 0.0,
        };
        (h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1) / h.powi(k as i32)
    }
}

fn pchip_end(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Geometric ε-ladder 2^{-j}, j = from..=to.
pub fn dyadic_ladder(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|j| 2f64.powi(-j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_slope() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let (s, c, r) = fit_line(&xs, &ys);
        assert!((s - 3.0).abs() < 1e-14 && (c + 1.0).abs() < 1e-14 && r < 1e-14);
    }

    #[test]
    fn extrapolation_recovers_limit() {
        let eps = dyadic_ladder(3, 10);
        let v: Vec<f64> = eps.iter().map(|e| 0.7 + 2.0 * e.sqrt() - 0.3 * e).collect();
        let (c, rms) = extrapolate(&eps, &v, &[0.5, 1.0]).unwrap();
        assert!((c[0] - 0.7).abs() < 1e-12, "{c:?}");
        assert!(rms < 1e-13);
    }

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 50).is_err());
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let f = |x: f64| x * x * x - x;
        let df = |x: f64| 3.0 * x * x - 1.0;
        let x: Vec<f64> = (0..=10).map(|i| -1.0 + 0.2 * i as f64).collect();
        let t = HermiteTable::new(x.clone(), x.iter().map(|&v| f(v)).collect(), x.iter().map(|&v| df(v)).collect())
            .unwrap();
        for &p in &[-0.93, -0.1, 0.37, 0.99] {
            assert!((t.eval(p, 0) - f(p)).abs() < 1e-14);
            assert!((t.eval(p, 1) - df(p)).abs() < 1e-12);
            assert!((t.eval(p, 2) - 6.0 * p).abs() < 1e-10);
        }
    }

    #[test]
    fn pchip_stays_monotone() {
        let x = vec![0.0, 0.1, 0.2, 0.7, 1.0];
        let y = vec![0.0, 0.0, 0.5, 0.98, 1.0];
        let t = HermiteTable::pchip(x, y).unwrap();
        let mut prev = -1.0;
        for i in 0..=1000 {
            let v = t.eval(i as f64 / 1000.0, 0);
            assert!(v >= prev - 1e-15 && (-1e-15..=1.0 + 1e-15).contains(&v));
            prev = v;
        }
    }
}
