use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn shocklab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shocklab")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn association_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = shocklab(&["asymptotics", "associate", "--a", "Hpow:3", "--b", "H", "--expect", "associated"], &dir.path().join("a"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = read_json(&dir.path().join("a/report.json"));
    assert_eq!(rep["verdict"], "associated");

    // (√δ)² tends to δ, not to zero.
    let o = shocklab(&["asymptotics", "associate", "--a", "sqrtdelta2", "--b", "zero", "--expect", "associated"], &dir.path().join("b"));
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not_associated"));
}

#[test]
fn order_of_delta_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = shocklab(&["asymptotics", "order", "--a", "delta"], dir.path());
    assert_eq!(code(&o), 0);
    let rep = read_json(&dir.path().join("report.json"));
    assert_eq!(rep["report"]["verdict"]["kind"], "moderate");
    assert_eq!(rep["report"]["verdict"]["n"], 1);
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "").unwrap();
    let o = shocklab(&["asymptotics", "--config", cfg.to_str().unwrap()], &dir.path().join("x"));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no operation"));

    let o = shocklab(&["asymptotics", "order", "--a", "Q"], &dir.path().join("y"));
    assert_eq!(code(&o), 2);
    let o = shocklab(&["jump"], &dir.path().join("z"));
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 3\n[asymptotics]\nop = \"associate\"\na = \"H\"\nb = \"zero\"\nrandom_tests = 2\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = shocklab(&["asymptotics", "--config", c], &dir.path().join("f"));
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&dir.path().join("f/report.json"))["verdict"], "not_associated");
    let o = shocklab(&["asymptotics", "--config", c, "--b", "Hpow:2"], &dir.path().join("g"));
    assert_eq!(code(&o), 0);
    let rep = read_json(&dir.path().join("g/report.json"));
    assert_eq!(rep["verdict"], "associated");
    assert_eq!(rep["tests"].as_array().unwrap().len(), 5);
    assert_eq!(read_json(&dir.path().join("g/manifest.json"))["seed"], 3);
}

#[test]
fn elastic_jump_has_two_branches() {
    let dir = tempfile::tempdir().unwrap();
    let o = shocklab(&["jump", "--preset", "elastic", "--statements", "=,~", "--left", "2,0", "--right", "0,0", "--unknowns", "sigma"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("jump.json"));
    let branches = j["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 2);
    let want = 2.0 * (1.0f64 - 4.0 / 12.0).sqrt();
    for b in branches {
        let ds = b["jumps"][1].as_f64().unwrap();
        assert!((ds.abs() - want).abs() < 1e-6, "{ds}");
    }
    assert!(dir.path().join("branch0_u.csv").exists() && dir.path().join("branch1_sigma.csv").exists());
}

#[test]
fn all_strong_elastic_is_incompatible_and_burgers_is_not() {
    let dir = tempfile::tempdir().unwrap();
    let o = shocklab(&["jump", "--preset", "elastic", "--statements", "=,=", "--right", "0,1.633", "--expect", "incompatible"], &dir.path().join("e"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = shocklab(&["jump", "--preset", "burgers", "--left", "2", "--right", "0", "--expect", "compatible"], &dir.path().join("b"));
    assert_eq!(code(&o), 0);
    let j = read_json(&dir.path().join("b/jump.json"));
    assert!((j["rankine_hugoniot"][0]["speed"].as_f64().unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn short_two_scale_run_matches_the_weak_strong_speed() {
    let dir = tempfile::tempdir().unwrap();
    let o = shocklab(&["simulate", "--scheme", "two_scale", "--k", "16", "--t-final", "6", "--expect", "consistent"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&dir.path().join("summary.json"));
    let run = &s["runs"][0];
    assert_eq!(run["regime"], "weak_strong");
    assert!((run["measured_speed"].as_f64().unwrap() - 4.19968).abs() < 0.02 * 4.19968);
    assert!(dir.path().join("k_16/field.csv").exists());
}

#[test]
fn sweep_accepts_fractions_and_unstable_steps_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = shocklab(&["simulate", "--sweep", "k=1/16,1", "--t-final", "4", "--snapshots", "8"], &dir.path().join("s"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("s/k_0.0625/measurement.json").exists());
    let runs = read_json(&dir.path().join("s/summary.json"))["runs"].as_array().unwrap().len();
    assert_eq!(runs, 2);

    let o = shocklab(&["simulate", "--k", "16", "--dt", "0.5"], &dir.path().join("bad"));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("CFL"));
}

#[test]
fn cases_report_consistent_results() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["isothermal", "elastoplastic", "heaviside-powers"] {
        let o = shocklab(&["case", name, "--expect", "consistent"], &dir.path().join(name));
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let iso = read_json(&dir.path().join("isothermal/isothermal.json"));
    assert!((iso["max_deviation"].as_f64().unwrap() - 0.125).abs() < 1e-8);

    // Reversed states have no real amplitude.
    let o = shocklab(&["case", "kk", "--states", "-2,2,0,0"], &dir.path().join("kk_bad"));
    assert_eq!(code(&o), 2);
}

#[test]
fn kk_case_calibrates_the_demo_states() {
    let dir = tempfile::tempdir().unwrap();
    let o = shocklab(&["case", "kk", "--expect", "consistent"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("kk.json"));
    let a = j["calibration"]["a"].as_f64().unwrap();
    assert!((a * a - 4.0 / 3.0).abs() < 1e-5, "{a}");
    assert!(j["calibration"]["s"].as_f64().unwrap().abs() < 1e-5);
    let bare = &j["without_u_corrector"];
    assert!((bare["first_delta_prime"].as_f64().unwrap() - bare["minus_a_squared_t"].as_f64().unwrap()).abs() < 1e-5);
}

#[test]
fn outputs_are_byte_identical_and_carry_the_manifest_hash() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["jump", "--preset", "elastic", "--statements", "~,=", "--seed", "11"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&shocklab(&args, &a)), 0);
    assert_eq!(code(&shocklab(&args, &b)), 0);
    let hash = read_json(&a.join("manifest.json"))["hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 3);
    for n in names {
        let (x, y) = (std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
        assert_eq!(x, y, "{n:?} differs");
        let text = String::from_utf8(x).unwrap();
        let name = n.to_string_lossy();
        if name.ends_with(".csv") {
            assert!(text.starts_with(&format!("# manifest sha256:{hash}\n")), "{name}");
        } else if name != "manifest.json" {
            assert_eq!(read_json(&a.join(&n))["manifest_hash"], hash.as_str(), "{name}");
        }
    }
}
