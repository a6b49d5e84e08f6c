use shocklab_core::cases::*;
use shocklab_core::genfun::{default_ladder, AsymptoticOptions, GenRep, Verdict};
use shocklab_core::jumpcalc::pairing_coefficient;
use shocklab_core::profiles::*;
use shocklab_core::Error;

fn mono() -> Profile {
    make_heaviside_profile(HeavisideKind::Monotone).unwrap()
}

fn heavisides() -> Vec<Profile> {
    vec![
        mono(),
        make_heaviside_profile(HeavisideKind::Power { n: 3 }).unwrap(),
        make_heaviside_profile(HeavisideKind::DelayedFoot { theta: 0.3 }).unwrap(),
        make_heaviside_profile(HeavisideKind::Table { xi: vec![-1.0, -0.2, 0.5, 1.0], values: vec![0.0, 0.3, 0.8, 1.0] })
            .unwrap(),
    ]
}

#[test]
fn power_integrals_match_the_closed_form_for_every_profile() {
    for h in heavisides() {
        for (p, q) in [(1, 2), (0, 3), (2, 5), (4, 1)] {
            let want = 1.0 / (p as f64 + 1.0) - 1.0 / (q as f64 + 1.0);
            let got = heaviside_power_integral(p, q, &h).unwrap();
            assert!((got - want).abs() < 1e-8, "{} ({p},{q}): {got} vs {want}", h.label);
        }
        assert_eq!(heaviside_power_integral(3, 3, &h).unwrap(), 0.0);
    }
    let chi = make_sqrt_delta_profile(&ChiSpec::Bump(BaseBump::default())).unwrap();
    assert!(matches!(heaviside_power_integral(1, 2, &chi), Err(Error::InvalidInput(_))));
}

fn bump_family(power: i32, deriv: usize, center: f64) -> GenRep {
    let mass = std_bump_mass();
    GenRep::from_fn("scaled bump", (-5.0, 5.0), 0, move |x, eps, _| {
        eps.powi(power) * std_bump((x - center) / eps, deriv) / mass
    })
    .with_features(move |eps| vec![center - eps, center, center + eps])
}

#[test]
fn mollified_delta_and_its_derivative() {
    let ladder = default_ladder();
    let d = delta_prime_coefficient(&bump_family(-1, 0, 0.2), 0.2, &ladder).unwrap();
    assert!(d.converged());
    assert!((d.c_delta - 1.0).abs() < 1e-6 && d.c_delta_prime.abs() < 1e-6, "{d:?}");
    let dp = delta_prime_coefficient(&bump_family(-2, 1, 0.2), 0.2, &ladder).unwrap();
    assert!(dp.converged());
    assert!(dp.c_delta.abs() < 1e-6 && (dp.c_delta_prime - 1.0).abs() < 1e-6, "{dp:?}");
}

#[test]
fn time_derivative_of_a_moving_shock_carries_minus_c_jump() {
    // u = u_l + [u]h((x - ct)/ε) gives u_t = −c[u]h′((x - ct)/ε)/ε; at t = 1 the front is at x = c.
    let (c, jump, t) = (2.0, 1.0, 1.0);
    let h = mono();
    let f = GenRep::from_fn("u_t", (-5.0, 10.0), 0, move |x, eps, _| -c * jump * h.derivative((x - c * t) / eps, 1) / eps)
        .with_features(move |eps| vec![c * t - eps, c * t, c * t + eps]);
    let d = delta_prime_coefficient(&f, c * t, &default_ladder()).unwrap();
    assert!((d.c_delta + 2.0).abs() < 1e-6, "{d:?}");
    assert!(d.c_delta_prime.abs() < 1e-6);
}

#[test]
fn diverging_family_is_inconclusive() {
    let d = delta_prime_coefficient(&bump_family(-2, 0, 0.0), 0.0, &default_ladder()).unwrap();
    assert!(matches!(d.extraction, Extraction::Inconclusive { .. }), "{d:?}");
}

fn kk(u0: f64, u1: f64, v0: f64, v1: f64) -> KKAnsatz {
    KKAnsatz {
        u0,
        u1,
        v0,
        v1,
        s: 0.0,
        a: 1.0,
        p: 0.5,
        h: mono(),
        rho: make_kk_corrector(&KkSpec::default()).unwrap(),
        u_corrector: true,
    }
}

/// s = u₀ + [u]h(0) and a² = s[v] − [u³/3 − u].
fn kk_oracle(k: &KKAnsatz) -> (f64, f64) {
    let s = k.u0 + (k.u1 - k.u0) * k.h.value(0.0);
    let f = |u: f64| u * u * u / 3.0 - u;
    (s, (s * (k.v1 - k.v0) - (f(k.u1) - f(k.u0))).sqrt())
}

#[test]
fn corrector_mass_is_t() {
    let rho = make_kk_corrector(&KkSpec::default()).unwrap();
    for (s, t, eps) in [(0.0, 1.0, 1e-2), (0.7, 2.5, 1e-4), (-1.3, 0.4, 3e-3)] {
        let m = kk_corrector_mass(&rho, s, t, eps).unwrap();
        assert!((m - t).abs() < 1e-6, "s={s} t={t}: {m}");
    }
}

#[test]
fn corrector_alone_tends_to_t_psi_at_the_front() {
    use shocklab_core::genfun::TestFunction;
    use shocklab_core::quadrature::{integrate, QuadOptions};
    let rho = make_kk_corrector(&KkSpec::default()).unwrap();
    let (s, t) = (0.5, 1.5);
    let psi = TestFunction::bump(0.6, 1.0);
    let target = t * psi.eval(s * t, 0);
    let mut prev = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4] {
        let feats: Vec<f64> = rho.breakpoints().iter().map(|y| t * (s + eps * y)).collect();
        let v = integrate(
            |x| rho.value((x / t - s) / eps).powi(2) / eps * psi.eval(x, 0),
            psi.support.0,
            psi.support.1,
            &feats,
            &QuadOptions::default().with_abs_tol(1e-13),
        )
        .unwrap();
        let err = (v - target).abs();
        assert!(err < 10.0 * eps, "eps={eps}: {err}");
        assert!(err < prev);
        prev = err;
    }
}

#[test]
fn calibration_recovers_the_derived_speed_and_amplitude() {
    let ladder = kk_default_ladder();
    for base in [kk(2.0, -2.0, 0.0, 0.0), kk(3.0, -1.0, 0.0, -4.0)] {
        let (s, a) = kk_oracle(&base);
        let cal = kk_calibrate(&base, 1.0, &ladder).unwrap();
        assert!((cal.s - s).abs() < 1e-5, "s {} vs {s}", cal.s);
        assert!((cal.a - a).abs() < 1e-5, "a {} vs {a}", cal.a);
        assert!(cal.first.converged() && cal.second.converged());
        // Both states obey the first equation's jump relation, so nothing is left over.
        assert!(cal.max_coefficient() < 1e-4, "{}", cal.max_coefficient());
    }
}

#[test]
fn calibration_rejects_states_without_a_real_amplitude() {
    let err = kk_calibrate(&kk(-2.0, 2.0, 0.0, 0.0), 1.0, &kk_default_ladder()).unwrap_err();
    assert!(matches!(err, Error::NoStrongSolution(_)), "{err}");
}

#[test]
fn singular_shock_needs_the_sqrt_delta_corrector() {
    let ladder = kk_default_ladder();
    let base = kk(2.0, -2.0, 0.0, 0.0);
    let cal = kk_calibrate(&base, 1.0, &ladder).unwrap();
    let full = KKAnsatz { s: cal.s, a: cal.a, ..base };
    let opts = AsymptoticOptions::default();
    let r = kk_residual(&full, &kk_default_tests(full.s), &ladder, &opts).unwrap();
    for eq in KkEquation::BOTH {
        let rep = r.report(eq);
        assert!(rep.verdict.is_associated(), "{eq:?}: {:?}", rep.verdict);
        assert!(rep.fitted_order >= 0.4, "{eq:?}: {}", rep.fitted_order);
        for c in &rep.components {
            assert!(c.values.windows(2).all(|w| w[1].abs() < w[0].abs()), "{eq:?}: {:?}", c.values);
        }
    }

    let bare = KKAnsatz { u_corrector: false, ..full };
    let c = bare.residual_coefficients(KkEquation::First, 1.0, &ladder).unwrap();
    // (u² − v)_x keeps −a²t δ′ once u loses its corrector.
    assert!((c.c_delta_prime + cal.a * cal.a).abs() < 1e-5, "{c:?}");
    assert!(c.c_delta_prime.abs() > 10.0 * c.noise_delta_prime);
    let rb = kk_residual(&bare, &kk_default_tests(bare.s), &ladder, &opts).unwrap();
    assert!(matches!(rb.first.verdict, Verdict::NotAssociated { .. }), "{:?}", rb.first.verdict);
    assert!(rb.first.fitted_order < r.first.fitted_order);
}

#[test]
fn kk_ansatz_validation() {
    let mut k = kk(2.0, -2.0, 0.0, 0.0);
    k.p = 0.0;
    assert!(k.validate().is_err());
    let mut k = kk(2.0, -2.0, 0.0, 0.0);
    k.rho = mono();
    assert!(k.validate().is_err());
}

#[test]
fn isothermal_law_inside_the_shock() {
    let st = IsothermalStates::on_isotherm(1.0, 1.0, 2.0, 1.0, 0.5);
    let law = isothermal_in_shock_state_law(&st, &mono(), 401).unwrap();
    assert!((law.endpoints.0 - 1.0).abs() < 1e-10 && (law.endpoints.1 - 1.0).abs() < 1e-10);
    assert!((law.law[0] - 1.0).abs() < 1e-10 && (law.law[400] - 1.0).abs() < 1e-10);
    // (1 + H)(1 − H/2) peaks at H = 1/2 with value 1.125.
    assert!((law.max_deviation - 0.125).abs() < 1e-8, "{}", law.max_deviation);
    assert!(law.max_deviation_xi.abs() < 1e-4);

    // Analytic vertex of the quadratic in H for another isotherm.
    let st = IsothermalStates::on_isotherm(2.5, 0.8, 3.1, 0.0, 0.0);
    let law = isothermal_in_shock_state_law(&st, &make_heaviside_profile(HeavisideKind::Power { n: 2 }).unwrap(), 257).unwrap();
    let (dp, dq) = (st.p_r - st.p_l, 1.0 / st.rho_r - 1.0 / st.rho_l);
    let hs = -(st.p_l * dq + dp / st.rho_l) / (2.0 * dp * dq);
    assert!((law.max_deviation - (st.law_at(hs) - 2.5)).abs() < 1e-8);

    let flat = isothermal_in_shock_state_law(&IsothermalStates::on_isotherm(3.0, 1.2, 1.2, 0.0, 0.0), &mono(), 50).unwrap();
    assert!(flat.law.iter().all(|c| (c - 3.0).abs() < 1e-12));
    assert!(flat.to_csv().starts_with("xi,H,C\n"));

    let bad = IsothermalStates { p_r: 2.5, ..IsothermalStates::on_isotherm(1.0, 1.0, 2.0, 0.0, 0.0) };
    assert!(matches!(isothermal_in_shock_state_law(&bad, &mono(), 50), Err(Error::InvalidInput(_))));
}

#[test]
fn strong_state_law_would_force_h_squared_equal_h() {
    let rep = strong_state_law_obstruction(&mono(), &default_ladder(), &AsymptoticOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Moderate { n: 0 });
    assert!(rep.fitted_order.abs() < 0.1);
}

#[test]
fn elastoplastic_product_is_the_pairing_identity() {
    let hs = heavisides();
    for hu in &hs {
        for hsig in &hs {
            let (ul, du, sl, ds) = (0.7, -1.3, 0.2, 2.4);
            let got = elastoplastic_product(
                &Wave { left: ul, jump: du, profile: hu.clone() },
                &Wave { left: sl, jump: ds, profile: hsig.clone() },
            )
            .unwrap();
            let a = pairing_coefficient(hu, hsig).unwrap();
            assert!((got - ds * (ul + du * a)).abs() < 1e-8, "{} / {}", hu.label, hsig.label);
        }
    }
    let w = |l, j| Wave { left: l, jump: j, profile: mono() };
    assert!((elastoplastic_product(&w(0.0, 1.0), &w(0.0, 1.0)).unwrap() - 0.5).abs() < 1e-10);
    assert!((elastoplastic_product(&w(1.0, 1.0), &w(0.0, 2.0)).unwrap() - 3.0).abs() < 1e-10);
}

#[test]
fn plastic_foot_hides_the_stress_jump() {
    let (hu, hs) = plastic_foot_profiles(0.5).unwrap();
    let r = elastoplastic_product(&Wave { left: 0.0, jump: 1.0, profile: hu }, &Wave { left: 0.0, jump: 1.0, profile: hs }).unwrap();
    assert!(r.abs() < 0.02, "{r}");
    let sum = elastoplastic_case(&ElastoplasticCase::default()).unwrap();
    assert!((sum.elastic_product - 0.5).abs() < 1e-10);
    assert!(sum.plastic_product.abs() < 0.02);
    assert_eq!(sum.pressures, (1.0, 1.5));
    assert!(plastic_foot_profiles(1.0).is_err());
}
