use shocklab_core::fdlab::*;
use shocklab_core::profiles::{make_heaviside_profile, HeavisideKind};
use shocklab_core::Error;

fn synthetic(c: f64, width: f64, sigma_jump: f64, fronts: &[f64]) -> Field {
    let h = make_heaviside_profile(HeavisideKind::Monotone).unwrap();
    let x: Vec<f64> = (0..4000).map(|i| -10.0 + 0.01 * (i as f64 + 0.5)).collect();
    let times: Vec<f64> = (0..=12).map(|i| i as f64 * 0.5).collect();
    let wave = |x: f64, t: f64| fronts.iter().map(|x0| h.value((x - x0 - c * t) / width)).sum::<f64>() / fronts.len() as f64;
    let u = times.iter().map(|&t| x.iter().map(|&x| 4.0 - 2.0 * wave(x, t)).collect()).collect();
    let sigma = times.iter().map(|&t| x.iter().map(|&x| sigma_jump * wave(x, t)).collect()).collect();
    Field {
        x,
        h: 0.01,
        dt: 0.5,
        times,
        u,
        sigma,
        initial: Riemann { u_left: 4.0, u_right: 2.0, sigma_left: 0.0, sigma_right: sigma_jump },
    }
}

#[test]
fn synthetic_wave_speed_and_pairing() {
    let f = synthetic(1.7, 0.4, 2.0, &[0.0]);
    let m = measure_shock(&f, (1.0, 6.0)).unwrap();
    assert!((m.speed / 1.7 - 1.0).abs() < 1e-3, "speed {}", m.speed);
    assert!((m.a_measured - 0.5).abs() < 1e-3);
    assert!(m.profile_sup_distance < 1e-12);
    assert_eq!(m.plateaus.u, (4.0, 2.0));
}

#[test]
fn two_fronts_and_flat_data_are_rejected() {
    let f = synthetic(1.0, 0.2, 2.0, &[-5.0, 15.0]);
    assert!(matches!(measure_shock(&f, (1.0, 6.0)), Err(Error::Measurement(_))));
    let mut flat = synthetic(1.0, 0.2, 2.0, &[0.0]);
    for row in flat.u.iter_mut() {
        row.iter_mut().for_each(|v| *v = 3.0);
    }
    assert!(matches!(measure_shock(&flat, (1.0, 6.0)), Err(Error::Measurement(_))));
    assert!(matches!(measure_shock(&f, (100.0, 200.0)), Err(Error::Measurement(_))));
}

#[test]
fn unstable_or_malformed_configs_are_rejected() {
    let (mut cfg, _) = default_config(Scheme::TwoScale, 1.0).unwrap();
    cfg.dt = Some(0.1);
    let err = run_two_scale(&cfg).unwrap_err();
    assert!(matches!(&err, Error::Configuration(m) if m.contains("CFL")), "{err}");
    cfg.dt = None;
    cfg.k_ratio = 2.5;
    assert!(matches!(run_two_scale(&cfg), Err(Error::Configuration(_))));

    let (mut v, _) = default_config(Scheme::TwoViscosity, 60.0).unwrap();
    v.dt = Some(1e-3);
    assert!(matches!(run_two_viscosity(&v), Err(Error::Configuration(_))));
    v.dt = None;
    v.eps_min = 0.0;
    assert!(matches!(run_two_viscosity(&v), Err(Error::Configuration(_))));
    assert!(matches!(run_two_scale(&v), Err(Error::Configuration(_))));
}

#[test]
fn sign_change_breaks_the_upwind_assumption() {
    let (mut cfg, _) = default_config(Scheme::TwoScale, 1.0).unwrap();
    cfg.initial.u_right = -1.0;
    assert!(matches!(run_two_scale(&cfg), Err(Error::SchemeAssumption { .. })));
}

#[test]
fn conservative_form_conserves_mass_up_to_boundary_flux() {
    let (mut cfg, _) = default_config(Scheme::TwoScale, 4.0).unwrap();
    let dt = time_step(&cfg).unwrap();
    cfg.dt = Some(dt);
    cfg.t_final = 5.0 * dt;
    cfg.snapshots = 1000;
    let f = run_two_scale(&cfg).unwrap();
    assert!(f.times.len() >= 6);
    let (m, h1) = (4usize, 4.0 * cfg.h);
    let r = cfg.initial;
    let q = |u: f64, s: f64| 0.5 * u * u - s;
    for n in 0..f.times.len() - 1 {
        let (u, s) = (&f.u[n], &f.sigma[n]);
        let len = u.len();
        let tail: f64 = (len - m..len).map(|j| q(u[j], s[j])).sum();
        let flux = (tail - m as f64 * q(r.u_left, r.sigma_left)) / h1;
        let predicted = -dt * flux * cfg.h;
        let actual = f.mass_u(n + 1) - f.mass_u(n);
        assert!((actual - predicted).abs() < 1e-8, "step {n}: {actual} vs {predicted}");
    }
}

#[test]
fn decoupled_first_equation_is_burgers() {
    let (mut cfg, _) = default_config(Scheme::TwoScale, 1.0).unwrap();
    cfg.coupling = 0.0;
    let f = run_two_scale(&cfg).unwrap();
    let m = measure_shock(&f, (6.0, 12.0)).unwrap();
    let burgers = 0.5 * (cfg.initial.u_left + cfg.initial.u_right);
    assert!((m.speed / burgers - 1.0).abs() < 5e-3, "speed {}", m.speed);
}

#[test]
fn two_scale_speeds_follow_the_statement_correspondence() {
    let ks = [1.0 / 16.0, 1.0, 16.0];
    let setups: Vec<_> = ks.iter().map(|&k| default_config(Scheme::TwoScale, k).unwrap()).collect();
    let cfgs: Vec<SchemeConfig> = setups.iter().map(|s| s.0.clone()).collect();
    let fields = run_sweep(&cfgs);
    let mut speeds = Vec::new();
    for ((field, (_, pred)), k) in fields.into_iter().zip(&setups).zip(ks) {
        let m = measure_shock(&field.unwrap(), (6.0, 12.0)).unwrap();
        assert!((m.speed / pred.speed - 1.0).abs() < 0.02, "k={k}: {} vs {}", m.speed, pred.speed);
        assert!(m.overshoot < 0.05);
        if k == 16.0 {
            assert!(closure_residual(&m) < 0.05, "closure residual {}", closure_residual(&m));
        }
        speeds.push(m.speed);
    }
    assert!(speeds[0] < speeds[1] && speeds[1] < speeds[2], "{speeds:?}");
    assert_eq!(expected_regime(Scheme::TwoScale, 16.0), Regime::WeakStrong);
    assert_eq!(expected_regime(Scheme::TwoScale, 1.0 / 16.0), Regime::StrongWeak);
}

#[test]
fn equal_viscosities_share_one_profile() {
    let (cfg, pred) = default_config(Scheme::TwoViscosity, 1.0).unwrap();
    assert_eq!(pred.regime, Regime::Shared);
    let m = measure_shock(&run_two_viscosity(&cfg).unwrap(), (6.0, 12.0)).unwrap();
    assert!((m.speed / pred.speed - 1.0).abs() < 0.02);
    assert!(m.profile_sup_distance < 0.05, "sup {}", m.profile_sup_distance);
    assert!((m.a_measured - 0.5).abs() < 0.05, "A {}", m.a_measured);
}

#[test]
fn refinement_leaves_the_speed_stable() {
    // The numerical front is self-similar in x/h, so the selected profile and
    // hence the speed do not drift as h shrinks.
    let (base, pred) = default_config(Scheme::TwoScale, 1.0).unwrap();
    let speeds: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|&h| {
            let cfg = SchemeConfig { h, ..base.clone() };
            measure_shock(&run_two_scale(&cfg).unwrap(), (6.0, 12.0)).unwrap().speed
        })
        .collect();
    for w in speeds.windows(2) {
        assert!((w[1] - w[0]).abs() < 1e-3 * pred.speed, "{speeds:?}");
    }
    assert!((speeds[2] / pred.speed - 1.0).abs() < 0.02);
}

#[test]
fn field_csv_layout() {
    let (mut cfg, _) = default_config(Scheme::TwoScale, 1.0).unwrap();
    cfg.domain = (-1.0, 1.0);
    cfg.t_final = 0.01;
    cfg.snapshots = 1;
    let f = run_two_scale(&cfg).unwrap();
    let csv = f.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# t="));
    assert_eq!(lines[1], "x,u,sigma");
    assert_eq!(lines.len(), f.times.len() * (f.x.len() + 2));
    let json = serde_json::to_string(&cfg).unwrap();
    let back: SchemeConfig = serde_json::from_str(&json).unwrap();
    assert_eq!(back, cfg);
}
