//! Run configuration: a TOML file with one optional table per command.
//! Command-line flags are merged on top of it and always win.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub expect: Vec<String>,
    pub asymptotics: Option<AsymptoticsConfig>,
    pub jump: Option<JumpConfig>,
    pub simulate: Option<SimulateConfig>,
    pub case: Option<CaseConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsConfig {
    /// order | associate | defect
    pub op: Option<String>,
    pub a: Option<String>,
    pub b: Option<String>,
    /// Derivative order for `order`.
    pub k: Option<usize>,
    /// Compact set for sup norms.
    pub set: Option<(f64, f64)>,
    /// Exponents (from, to) of the dyadic ladder ε = 2^-j.
    pub ladder: Option<(i32, i32)>,
    /// Extra bump tests drawn from the seed.
    pub random_tests: Option<usize>,
    pub f: Option<String>,
    pub g: Option<String>,
    pub q: Option<usize>,
    /// offset | standard
    pub base: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    /// elastic | burgers; fills in the system below.
    pub preset: Option<String>,
    /// For the elastic preset: "=,~" style statement vector.
    pub statements: Option<String>,
    pub k2: Option<f64>,
    pub variables: Option<Vec<String>>,
    pub parameters: Option<std::collections::BTreeMap<String, f64>>,
    pub equations: Option<Vec<String>>,
    pub left: Option<Vec<f64>>,
    pub right: Option<Vec<f64>>,
    /// Variables whose right state is solved for.
    pub unknowns: Option<Vec<String>>,
    pub speed: Option<f64>,
    /// "shared" or "power:<var>:<of>:<n>"
    pub assumption: Option<String>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// two_scale | two_viscosity
    pub scheme: Option<String>,
    pub k: Option<f64>,
    pub sweep: Option<Vec<f64>>,
    pub h: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub domain: Option<(f64, f64)>,
    pub eps_min: Option<f64>,
    pub u_left: Option<f64>,
    pub u_right: Option<f64>,
    /// conservative | nonconservative
    pub form: Option<String>,
    pub coupling: Option<f64>,
    pub snapshots: Option<usize>,
    /// Time window for the speed fit; defaults to [T/2, T].
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub name: Option<String>,
    pub kk: Option<KkCaseConfig>,
    pub isothermal: Option<IsothermalCaseConfig>,
    pub elastoplastic: Option<shocklab_core::cases::ElastoplasticCase>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct KkCaseConfig {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
    pub p: f64,
    pub t: f64,
    pub width_ratio: f64,
    pub ladder: (i32, i32),
}

impl Default for KkCaseConfig {
    fn default() -> Self {
        Self { u0: 2.0, u1: -2.0, v0: 0.0, v1: 0.0, p: 0.5, t: 1.0, width_ratio: 0.5, ladder: (6, 15) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct IsothermalCaseConfig {
    pub c: f64,
    pub rho_l: f64,
    pub rho_r: f64,
    pub u_l: f64,
    pub u_r: f64,
    /// Explicit pressures; default to c·ρ.
    pub p_l: Option<f64>,
    pub p_r: Option<f64>,
    pub samples: usize,
}

impl Default for IsothermalCaseConfig {
    fn default() -> Self {
        Self { c: 1.0, rho_l: 1.0, rho_r: 2.0, u_l: 1.0, u_r: 0.5, p_l: None, p_r: None, samples: 401 }
    }
}

/// Overlay every `Some` field of `top` onto `base`.
macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),+) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )+
    };
}

impl AsymptoticsConfig {
    pub fn merge(mut self, top: &Self) -> Self {
        overlay!(self, top, op, a, b, k, set, ladder, random_tests, f, g, q, base);
        self
    }
}

impl JumpConfig {
    pub fn merge(mut self, top: &Self) -> Self {
        overlay!(self, top, preset, statements, k2, variables, parameters, equations, left, right, unknowns, speed, assumption, tolerance);
        self
    }
}

impl SimulateConfig {
    pub fn merge(mut self, top: &Self) -> Self {
        overlay!(self, top, scheme, k, sweep, h, dt, t_final, domain, eps_min, u_left, u_right, form, coupling, snapshots, window);
        self
    }
}

/// Comma-separated numbers; each may be a fraction like 1/16.
pub fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| parse_number(t.trim())).collect()
}

pub fn parse_number(t: &str) -> Result<f64> {
    let v = match t.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
            if b == 0.0 {
                bail!("division by zero in '{t}'");
            }
            a / b
        }
        None => t.parse().with_context(|| format!("not a number: '{t}'"))?,
    };
    if !v.is_finite() {
        bail!("not a finite number: '{t}'");
    }
    Ok(v)
}

pub fn parse_pair(s: &str) -> Result<(f64, f64)> {
    match parse_numbers(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => bail!("expected two comma-separated numbers, got '{s}'"),
    }
}

/// "3..12" or "3,12".
pub fn parse_ladder(s: &str) -> Result<(i32, i32)> {
    let (a, b) = s.split_once("..").or_else(|| s.split_once(',')).with_context(|| format!("ladder must look like 3..12, got '{s}'"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

/// "k=1/16,1,16".
pub fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let rest = s.strip_prefix("k=").with_context(|| format!("sweep must look like k=1/16,1,16, got '{s}'"))?;
    let ks = parse_numbers(rest)?;
    if ks.is_empty() {
        bail!("empty sweep");
    }
    Ok(ks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_sweeps() {
        assert_eq!(parse_numbers("1/16, 1,16").unwrap(), vec![0.0625, 1.0, 16.0]);
        assert_eq!(parse_sweep("k=1/60,60").unwrap(), vec![1.0 / 60.0, 60.0]);
        assert!(parse_sweep("1,2").is_err());
        assert!(parse_number("1/0").is_err());
        assert_eq!(parse_ladder("3..12").unwrap(), (3, 12));
    }

    #[test]
    fn flags_win_over_file() {
        let file = AsymptoticsConfig { op: Some("order".into()), a: Some("H".into()), ..Default::default() };
        let flags = AsymptoticsConfig { a: Some("delta".into()), ..Default::default() };
        let m = file.merge(&flags);
        assert_eq!(m.op.as_deref(), Some("order"));
        assert_eq!(m.a.as_deref(), Some("delta"));
    }
}
