//! Short names for ε-families and classical functions used on the command line.
//!
//! Families: `H`, `Hpow:n`, `Hfoot:θ`, `sqrtdelta`, `sqrtdelta2`, `delta`,
//! `zero`, `epspow:P:sin|cos` (ε^P times sin or cos).
//! Classical functions: `sin`, `cos`, `exp`, `x2`, `abs`, `abs3`.

use anyhow::{bail, Context, Result};
use shocklab_core::genfun::{combine, derivative, lift_heaviside, lift_smooth, lift_sqrt_delta, ClassicalFn, CombineOp, GenRep};
use shocklab_core::profiles::{make_heaviside_profile, make_sqrt_delta_profile, ChiSpec, HeavisideKind};

pub const DOMAIN: (f64, f64) = (-2.0, 2.0);

fn trig(name: &str, x: f64, k: usize) -> Result<f64> {
    // d^k sin = sin(x + kπ/2)
    let shift = k as f64 * std::f64::consts::FRAC_PI_2;
    Ok(match name {
        "sin" => (x + shift).sin(),
        "cos" => (x + shift).cos(),
        _ => bail!("unknown smooth factor '{name}', expected sin or cos"),
    })
}

pub fn family(spec: &str) -> Result<GenRep> {
    let mono = || make_heaviside_profile(HeavisideKind::Monotone);
    let sqrt = || {
        make_sqrt_delta_profile(&ChiSpec::SmoothBox { plateau: 0.3, ramp: 0.4 }).map(|p| lift_sqrt_delta(&p, 0.0, DOMAIN))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let rep = match parts.as_slice() {
        ["H"] => lift_heaviside(&mono()?, 0.0, DOMAIN),
        ["Hpow", n] => {
            let n: u32 = n.parse().with_context(|| format!("bad power in '{spec}'"))?;
            lift_heaviside(&make_heaviside_profile(HeavisideKind::Power { n })?, 0.0, DOMAIN)
        }
        ["Hfoot", theta] => {
            let theta: f64 = theta.parse().with_context(|| format!("bad foot fraction in '{spec}'"))?;
            lift_heaviside(&make_heaviside_profile(HeavisideKind::DelayedFoot { theta })?, 0.0, DOMAIN)
        }
        ["sqrtdelta"] => sqrt()?,
        ["sqrtdelta2"] => {
            let s = sqrt()?;
            combine(&s, &s, CombineOp::Mul)?
        }
        ["delta"] => derivative(&lift_heaviside(&mono()?, 0.0, DOMAIN), 1),
        ["zero"] => lift_smooth("0", DOMAIN, 8, |_, _| 0.0),
        ["epspow", p, f] => {
            let p: f64 = p.parse().with_context(|| format!("bad exponent in '{spec}'"))?;
            let name = f.to_string();
            trig(&name, 0.0, 0)?;
            GenRep::from_fn(format!("eps^{p}*{name}"), DOMAIN, 8, move |x, eps, k| {
                eps.powf(p) * trig(&name, x, k).unwrap_or(f64::NAN)
            })
        }
        _ => bail!("unknown family '{spec}' (try H, Hpow:3, Hfoot:0.5, sqrtdelta, sqrtdelta2, delta, zero, epspow:2:sin)"),
    };
    Ok(rep)
}

pub fn classical(name: &str) -> Result<ClassicalFn> {
    Ok(match name {
        "sin" => ClassicalFn::new("sin", vec![], f64::sin),
        "cos" => ClassicalFn::new("cos", vec![], f64::cos),
        "exp" => ClassicalFn::new("exp", vec![], f64::exp),
        "x2" => ClassicalFn::new("x^2", vec![], |x: f64| x * x),
        "abs" => ClassicalFn::new("|x|", vec![0.0], f64::abs),
        "abs3" => ClassicalFn::new("|x|^3", vec![0.0], |x: f64| x.abs().powi(3)),
        _ => bail!("unknown function '{name}' (try sin, cos, exp, x2, abs, abs3)"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_documented_family_parses() {
        for s in ["H", "Hpow:3", "Hfoot:0.5", "sqrtdelta", "sqrtdelta2", "delta", "zero", "epspow:2:sin", "epspow:0.5:cos"] {
            let f = family(s).unwrap();
            assert!(f.value(0.1, 0.01).is_finite(), "{s}");
        }
        for s in ["Q", "Hpow:x", "epspow:1:tan", "Hfoot:2"] {
            assert!(family(s).is_err(), "{s}");
        }
    }

    #[test]
    fn epspow_derivatives() {
        let f = family("epspow:1:sin").unwrap();
        assert!((f.deriv(0.3, 0.5, 1) - 0.5 * 0.3f64.cos()).abs() < 1e-15);
    }
}
