use proptest::prelude::*;
use shocklab_core::genfun::*;
use shocklab_core::numerics::dyadic_ladder;
use shocklab_core::profiles::*;
use shocklab_core::quadrature::{integrate, QuadOptions};
use shocklab_core::Error;

const DOM: (f64, f64) = (-2.0, 2.0);

fn opts() -> AsymptoticOptions {
    AsymptoticOptions::default()
}

fn mono() -> Profile {
    make_heaviside_profile(HeavisideKind::Monotone).unwrap()
}

fn sqrt_delta() -> Profile {
    make_sqrt_delta_profile(&ChiSpec::SmoothBox { plateau: 0.3, ramp: 0.4 }).unwrap()
}

fn tests() -> Vec<TestFunction> {
    vec![TestFunction::bump(0.0, 1.0), TestFunction::bump(0.2, 0.9), TestFunction::odd_bump(-0.1, 1.2)]
}

#[test]
fn smooth_lift_is_constant_in_eps() {
    let f = lift_smooth("x^2", DOM, 2, |x, k| match k {
        0 => x * x,
        1 => 2.0 * x,
        _ => 2.0,
    });
    for &e in &[1.0, 0.1, 1e-4] {
        assert!((f.value(0.7, e) - 0.49).abs() < 1e-15);
    }
    let d = derivative(&f, 1);
    assert!((d.value(0.7, 0.01) - 1.4).abs() < 1e-15);
}

#[test]
fn heaviside_square_at_half_is_quarter() {
    let h = lift_heaviside(&mono(), 0.0, DOM);
    let hh = combine(&h, &h, CombineOp::Mul).unwrap();
    assert!((hh.value(0.0, 0.01) - 0.25).abs() < 1e-14);
}

#[test]
fn sqrt_delta_lift_scales_as_inverse_root() {
    let p = sqrt_delta();
    let r = lift_sqrt_delta(&p, 0.0, DOM);
    let eps = 0.01;
    assert!((r.value(0.0, eps) - p.value(0.0) / eps.sqrt()).abs() < 1e-12);
}

#[test]
fn disjoint_domains_are_rejected() {
    let a = lift_smooth("1", (0.0, 1.0), 4, |_, k| if k == 0 { 1.0 } else { 0.0 });
    let b = lift_smooth("1", (2.0, 3.0), 4, |_, k| if k == 0 { 1.0 } else { 0.0 });
    assert!(matches!(combine(&a, &b, CombineOp::Add), Err(Error::DomainMismatch(_))));
}

#[test]
fn fd_fallback_matches_analytic_derivative() {
    let h = lift_heaviside(&mono(), 0.0, DOM);
    // depth of the monotone profile is 3; the 4th derivative falls back to differences.
    // Step is ε²·(domain width), so relative accuracy improves as ε shrinks.
    let eps = 0.01;
    let x = 0.003;
    let d3 = h.deriv(x, eps, 3);
    let h4 = 1e-7;
    let fd = (h.deriv(x + h4, eps, 3) - h.deriv(x - h4, eps, 3)) / (2.0 * h4);
    assert!(((h.deriv(x, eps, 4) - fd) / fd).abs() < 1e-2, "{} {fd}", h.deriv(x, eps, 4));
    assert!(d3.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn algebra_laws_hold_pointwise(x in -1.5f64..1.5, j in 1i32..10) {
        let eps = 2f64.powi(-j);
        let h = lift_heaviside(&mono(), 0.1, DOM);
        let s = lift_sqrt_delta(&sqrt_delta(), -0.05, DOM);
        let f = lift_smooth("sin", DOM, 8, |x, k| match k % 4 { 0 => x.sin(), 1 => x.cos(), 2 => -x.sin(), _ => -x.cos() });
        let ab = combine(&h, &s, CombineOp::Mul).unwrap();
        let ba = combine(&s, &h, CombineOp::Mul).unwrap();
        prop_assert!((ab.value(x, eps) - ba.value(x, eps)).abs() <= 1e-14 * ab.value(x, eps).abs().max(1.0));
        let l = combine(&combine(&h, &s, CombineOp::Mul).unwrap(), &f, CombineOp::Mul).unwrap();
        let r = combine(&h, &combine(&s, &f, CombineOp::Mul).unwrap(), CombineOp::Mul).unwrap();
        prop_assert!((l.value(x, eps) - r.value(x, eps)).abs() <= 1e-14 * l.value(x, eps).abs().max(1.0));
        let dl = combine(&h, &combine(&s, &f, CombineOp::Add).unwrap(), CombineOp::Mul).unwrap();
        let dr = combine(&combine(&h, &s, CombineOp::Mul).unwrap(), &combine(&h, &f, CombineOp::Mul).unwrap(), CombineOp::Add).unwrap();
        prop_assert!((dl.value(x, eps) - dr.value(x, eps)).abs() <= 1e-14 * dl.value(x, eps).abs().max(1.0));
    }

    #[test]
    fn leibniz_rule(x in -0.2f64..0.2, j in 1i32..8) {
        let eps = 2f64.powi(-j);
        let h = lift_heaviside(&mono(), 0.0, DOM);
        let s = lift_sqrt_delta(&sqrt_delta(), 0.02, DOM);
        let p = combine(&h, &s, CombineOp::Mul).unwrap();
        let lhs = derivative(&p, 1).value(x, eps);
        let rhs = h.deriv(x, eps, 1) * s.value(x, eps) + h.value(x, eps) * s.deriv(x, eps, 1);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn composition_chain_rule(x in -0.5f64..0.5, j in 1i32..8) {
        let eps = 2f64.powi(-j);
        let h = lift_heaviside(&mono(), 0.0, DOM);
        let c = compose_smooth("exp", |y, _| y.exp(), &h);
        prop_assert!((c.value(x, eps) - h.value(x, eps).exp()).abs() < 1e-14);
        prop_assert!((c.deriv(x, eps, 1) - h.value(x, eps).exp() * h.deriv(x, eps, 1)).abs() <= 1e-12 * (1.0 + c.deriv(x, eps, 1).abs()));
    }
}

#[test]
fn estimate_order_pure_powers() {
    let ladder = default_ladder();
    let f = GenRep::from_fn("eps^5 sin", DOM, 4, |x, e, k| e.powi(5) * if k % 2 == 0 { x.sin() } else { x.cos() });
    let r = estimate_order(&f, (-1.0, 1.0), 0, &ladder, &opts()).unwrap();
    assert!((r.fitted_order - 5.0).abs() < 0.05);
    assert_eq!(r.verdict, Verdict::NegligibleToOrder { q: 5 });
    let g = GenRep::from_fn("eps^-2 cos", DOM, 4, |x, e, _| x.cos() / (e * e));
    let r = estimate_order(&g, (-1.0, 1.0), 0, &ladder, &opts()).unwrap();
    assert!((r.fitted_order + 2.0).abs() < 0.05);
    assert_eq!(r.verdict, Verdict::Moderate { n: 2 });
}

#[test]
fn heaviside_derivative_orders() {
    let h = lift_heaviside(&mono(), 0.0, DOM);
    for k in 0..3 {
        let r = estimate_order(&h, (-1.0, 1.0), k, &default_ladder(), &opts()).unwrap();
        assert!((r.fitted_order + k as f64).abs() < 0.05, "k={k} {}", r.fitted_order);
    }
}

#[test]
fn heaviside_square_minus_heaviside_is_not_negligible() {
    let h = lift_heaviside(&mono(), 0.0, DOM);
    let d = combine(&combine(&h, &h, CombineOp::Mul).unwrap(), &scale(&h, -1.0), CombineOp::Add).unwrap();
    let r = estimate_order(&d, (-1.0, 1.0), 0, &default_ladder(), &opts()).unwrap();
    assert!(r.fitted_order.abs() < 0.1);
    assert_eq!(r.verdict, Verdict::Moderate { n: 0 });
    // sup |H²-H| = 1/4, attained where H = 1/2.
    assert!(r.values.iter().all(|v| (v - 0.25).abs() < 1e-12));
}

#[test]
fn non_finite_samples_name_the_point() {
    let f = GenRep::from_fn("bad", DOM, 0, |x, e, _| if x > 0.5 && e < 0.01 { f64::NAN } else { 1.0 });
    match estimate_order(&f, (-1.0, 1.0), 0, &default_ladder(), &opts()) {
        Err(Error::NonFinite { x, eps }) => assert!(x > 0.5 && eps < 0.01),
        other => panic!("{other:?}"),
    }
}

#[test]
fn ladder_preconditions() {
    let f = lift_smooth("1", DOM, 2, |_, _| 1.0);
    assert!(estimate_order(&f, (-1.0, 1.0), 0, &[0.5, 0.25, 0.1], &opts()).is_err());
    assert!(estimate_order(&f, (-1.0, 1.0), 0, &[0.5, 0.6, 0.1, 0.05, 0.01], &opts()).is_err());
}

#[test]
fn heaviside_powers_are_associated_to_heaviside() {
    let h = lift_heaviside(&mono(), 0.0, DOM);
    for n in 2..5u32 {
        let hn = lift_heaviside(&make_heaviside_profile(HeavisideKind::Power { n }).unwrap(), 0.0, DOM);
        let r = associate(&hn, &h, &tests(), &default_ladder(), &opts()).unwrap();
        match r.verdict {
            Verdict::Associated { rate } => assert!(rate > 0.95, "n={n} rate {rate}"),
            v => panic!("n={n} {v:?}"),
        }
    }
}

#[test]
fn sqrt_delta_and_its_square() {
    let s = lift_sqrt_delta(&sqrt_delta(), 0.0, DOM);
    let zero = lift_smooth("0", DOM, 8, |_, _| 0.0);
    let r = associate(&s, &zero, &tests(), &default_ladder(), &opts()).unwrap();
    match r.verdict {
        Verdict::Associated { rate } => assert!((rate - 0.5).abs() < 0.1, "rate {rate}"),
        v => panic!("{v:?}"),
    }
    let s2 = combine(&s, &s, CombineOp::Mul).unwrap();
    let psi = TestFunction::bump(0.1, 1.0);
    let r = associate(&s2, &zero, &[psi.clone()], &default_ladder(), &opts()).unwrap();
    match r.verdict {
        Verdict::NotAssociated { limit } => assert!((limit - psi.eval(0.0, 0)).abs() < 1e-3, "limit {limit}"),
        v => panic!("{v:?}"),
    }
    // Independent check: ∫ε⁻¹χ²(x/ε)ψ = ψ(0) + O(ε) on the ladder.
    let chi = sqrt_delta();
    for &eps in &default_ladder() {
        let v = integrate(|y| chi.value(y).powi(2) * psi.eval(eps * y, 0), -1.0, 1.0, &[0.0], &QuadOptions::default()).unwrap();
        assert!((v - psi.eval(0.0, 0)).abs() < 2.0 * eps);
    }
}

#[test]
fn association_is_not_compatible_with_multiplication() {
    let s = lift_sqrt_delta(&sqrt_delta(), 0.0, DOM);
    let zero = lift_smooth("0", DOM, 8, |_, _| 0.0);
    let t = tests();
    assert!(associate(&s, &zero, &t, &default_ladder(), &opts()).unwrap().verdict.is_associated());
    let ss = combine(&s, &s, CombineOp::Mul).unwrap();
    let s0 = combine(&s, &zero, CombineOp::Mul).unwrap();
    let r = associate(&ss, &s0, &t, &default_ladder(), &opts()).unwrap();
    assert!(matches!(r.verdict, Verdict::NotAssociated { .. }), "{:?}", r.verdict);
}

#[test]
fn association_reflexive_and_symmetric() {
    let h = lift_heaviside(&mono(), 0.0, DOM);
    let h3 = lift_heaviside(&make_heaviside_profile(HeavisideKind::Power { n: 3 }).unwrap(), 0.0, DOM);
    let r = associate(&h, &h, &tests(), &default_ladder(), &opts()).unwrap();
    assert_eq!(r.verdict, Verdict::Vanishing);
    let ab = associate(&h3, &h, &tests(), &default_ladder(), &opts()).unwrap();
    let ba = associate(&h, &h3, &tests(), &default_ladder(), &opts()).unwrap();
    assert_eq!(ab.verdict.name(), ba.verdict.name());
    assert!((ab.fitted_order - ba.fitted_order).abs() < 1e-12);
}

#[test]
fn mollified_smooth_functions_associate_iff_equal_limit() {
    let f = lift_smooth("cos", DOM, 2, |x, k| match k {
        0 => x.cos(),
        1 => -x.sin(),
        _ => -x.cos(),
    });
    let g = GenRep::from_fn("cos + eps", DOM, 2, |x, e, k| match k {
        0 => x.cos() + e,
        1 => -x.sin(),
        _ => -x.cos(),
    });
    let h = GenRep::from_fn("cos + 0.1", DOM, 2, |x, _e, k| match k {
        0 => x.cos() + 0.1,
        1 => -x.sin(),
        _ => -x.cos(),
    });
    assert!(associate(&f, &g, &tests(), &default_ladder(), &opts()).unwrap().verdict.is_associated());
    assert!(matches!(
        associate(&f, &h, &tests(), &default_ladder(), &opts()).unwrap().verdict,
        Verdict::NotAssociated { .. }
    ));
}

#[test]
fn derivative_check_passes_to_derivatives() {
    let h = lift_heaviside(&mono(), 0.0, DOM);
    let h2 = combine(&h, &h, CombineOp::Mul).unwrap();
    let r = association_derivative_check(&h2, &h, &tests(), &default_ladder(), &opts()).unwrap();
    assert!(r.base.verdict.is_associated());
    assert!(r.derivative.unwrap().verdict.is_associated());

    let f = lift_smooth("sin", DOM, 8, |x, k| match k % 4 { 0 => x.sin(), 1 => x.cos(), 2 => -x.sin(), _ => -x.cos() });
    let r = association_derivative_check(&f, &f, &tests(), &default_ladder(), &opts()).unwrap();
    assert_eq!(r.base.verdict, Verdict::Vanishing);
    assert_eq!(r.derivative.unwrap().verdict, Verdict::Vanishing);
}

#[test]
fn sqrt_delta_derivative_by_parts() {
    let chi = sqrt_delta();
    let s = lift_sqrt_delta(&chi, 0.0, DOM);
    let zero = lift_smooth("0", DOM, 8, |_, _| 0.0);
    let psi = TestFunction::bump(0.15, 0.8);
    let r = association_derivative_check(&s, &zero, &[psi.clone()], &default_ladder(), &opts()).unwrap();
    let d = r.derivative.expect("base association holds");
    match d.verdict {
        Verdict::Associated { rate } => assert!((rate - 0.5).abs() < 0.1),
        v => panic!("{v:?}"),
    }
    // ∫ε^{-3/2}χ'(x/ε)ψ = -∫ε^{-1/2}χ(x/ε)ψ'.
    for (i, &eps) in d.eps_ladder.iter().enumerate() {
        let by_parts = -eps.sqrt()
            * integrate(|y| chi.value(y) * psi.eval(eps * y, 1), -1.0, 1.0, &[-0.5, 0.5], &QuadOptions::default()).unwrap();
        assert!((d.values[i] - by_parts).abs() < 1e-9 * (1.0 + by_parts.abs()), "{} vs {by_parts}", d.values[i]);
    }
}

#[test]
fn product_defect_polynomial_vanishes() {
    let m = make_mollifier(BaseBump::offset(), 4).unwrap();
    let cube = ClassicalFn::new("x^3", vec![], |x: f64| x * x * x);
    let r = product_defect_order(&cube, &cube, &m, (-1.0, 1.0), &dyadic_ladder(2, 8), &opts()).unwrap();
    // Not identically zero: the fg = x⁶ term exceeds the kernel order. Bound still ≥ q+1.
    assert!(r.fitted_order >= 5.0 - 0.2, "{}", r.fitted_order);
    let lin = ClassicalFn::new("x", vec![], |x: f64| x);
    let r = product_defect_order(&lin, &lin, &m, (-1.0, 1.0), &dyadic_ladder(2, 8), &opts()).unwrap();
    assert_eq!(r.verdict, Verdict::Vanishing);
}

#[test]
fn product_defect_smooth_order_q_plus_one() {
    let sin = ClassicalFn::new("sin", vec![], f64::sin);
    for q in [1usize, 2, 3, 4] {
        let m = make_mollifier(BaseBump::offset(), q).unwrap();
        let r = product_defect_order(&sin, &sin, &m, (-1.0, 1.0), &dyadic_ladder(2, 7), &opts()).unwrap();
        assert!((r.fitted_order - (q as f64 + 1.0)).abs() < 0.2, "q={q} {}", r.fitted_order);
    }
    let m0 = make_mollifier(BaseBump::offset(), 0).unwrap();
    assert!(product_defect_order(&sin, &sin, &m0, (-1.0, 1.0), &dyadic_ladder(2, 7), &opts()).is_err());
}

#[test]
fn product_defect_of_cubic_kink_saturates() {
    // f = |x|³: the defect is exactly ε⁶·D(x/ε), so the sup order stops growing with q.
    let f = ClassicalFn::new("|x|^3", vec![0.0], |x: f64| x.abs().powi(3));
    let ladder = [0.5, 0.35, 0.25, 0.18, 0.125, 0.09];
    let orders: Vec<f64> = [5usize, 6, 8]
        .iter()
        .map(|&q| {
            let m = make_mollifier(BaseBump::offset(), q).unwrap();
            product_defect_order(&f, &f, &m, (-1.0, 1.0), &ladder, &opts()).unwrap().fitted_order
        })
        .collect();
    for o in &orders {
        assert!((o - orders[0]).abs() < 0.2, "{orders:?}");
    }
}

#[test]
fn burgers_weak_residuals() {
    let ladder = dyadic_ladder(3, 9);
    let tests = vec![
        SpaceTimeTest::new(TestFunction::bump(1.0, 1.5), TestFunction::bump(1.0, 0.8)),
        SpaceTimeTest::new(TestFunction::odd_bump(0.8, 1.2), TestFunction::bump(1.2, 0.6)),
    ];
    let flux = |u: f64| 0.5 * u * u;

    // Smooth expansion wave u = x/(1+t).
    let smooth = SpaceTimeRep::new("x/(1+t)", |x, t, _| x / (1.0 + t), |_, _| Vec::new());
    let r = weak_residual_spacetime(&smooth, flux, &tests, &ladder, &opts()).unwrap();
    assert!(r.components.iter().all(|c| c.values.iter().all(|v| v.abs() < 1e-10)));

    let h = mono();
    let shock = |c: f64| {
        let h = h.clone();
        SpaceTimeRep::new(
            format!("shock c={c}"),
            move |x, t, e| 2.0 - 2.0 * h.value((x - c * t) / e),
            move |t, e| vec![c * t - e, c * t, c * t + e],
        )
    };
    let r = weak_residual_spacetime(&shock(1.0), flux, &tests, &ladder, &opts()).unwrap();
    match r.verdict {
        Verdict::Associated { rate } => assert!((rate - 1.0).abs() < 0.15, "rate {rate}"),
        v => panic!("{v:?}"),
    }
    let r = weak_residual_spacetime(&shock(0.5), flux, &tests, &ladder, &opts()).unwrap();
    assert!(matches!(r.verdict, Verdict::NotAssociated { .. }), "{:?}", r.verdict);
}

#[test]
fn report_serializes() {
    let f = GenRep::from_fn("eps sin", DOM, 2, |x, e, _| e * x.sin());
    let r = estimate_order(&f, (-1.0, 1.0), 0, &default_ladder(), &opts()).unwrap();
    let js = serde_json::to_string(&r).unwrap();
    let back: AsymptoticReport = serde_json::from_str(&js).unwrap();
    assert_eq!(back.verdict, r.verdict);
    assert!(r.to_csv().starts_with("eps,value\n"));
}
