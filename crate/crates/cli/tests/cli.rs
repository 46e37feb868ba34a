use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Scratch(PathBuf);

impl Scratch {
    fn new(name: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("legendrian-cli-{name}-{}", std::process::id()));
        std::fs::remove_dir_all(&dir).ok();
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, contents: &str) -> String {
        let p = self.0.join(name);
        std::fs::write(&p, contents).unwrap();
        p.to_str().unwrap().to_string()
    }

    fn out(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        std::fs::remove_dir_all(&self.0).ok();
    }
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_legendrian"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_SUITE: &str = r#"{"identities": {"samples": 500, "hamiltonians": 5, "quasi_triples": 1000}}"#;

#[test]
fn identity_report_lists_the_checks() {
    let s = Scratch::new("ids");
    let out = run(&["verify-identities"], &s.out("a"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(s.out("a").join("identities.json"));
    assert!(r["checks"].as_array().unwrap().len() >= 12);
    assert_eq!(r["passed"], true);
    assert_eq!(r["header"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["header"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn injected_jh_bug_fails_by_name() {
    let s = Scratch::new("bug");
    let cfg = s.file(
        "c.json",
        r#"{"identities": {"samples": 200, "hamiltonians": 2, "quasi_triples": 100, "inject_jh_bug": true}}"#,
    );
    let out = run(&["verify-identities", "--config", &cfg], &s.out("o"));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("jh_involution"));
    let r = json(s.out("o").join("identities.json"));
    assert_eq!(r["failed"], serde_json::json!(["jh_involution"]));
}

#[test]
fn identity_reports_repeat_byte_for_byte() {
    let s = Scratch::new("seed");
    let cfg = s.file("c.json", SMALL_SUITE);
    for d in ["a", "b", "c"] {
        let seed = if d == "c" { "8" } else { "7" };
        assert!(run(&["verify-identities", "--config", &cfg, "--seed", seed], &s.out(d)).status.success());
    }
    let read = |d: &str| std::fs::read(s.out(d).join("identities.json")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let s = Scratch::new("unknown");
    for text in [
        r#"{"sead": 3}"#,
        r#"{"energy": {"epsilon": 0.1, "eps": 0.2}}"#,
        r#"{"descent": {"epsilon_schedule": [0.2], "max_iter": 3}}"#,
        r#"{"mesh": {"corpus": {"family": "flat_patch", "resolution": 4, "colour": 1}}}"#,
        "not json",
    ] {
        let cfg = s.file("c.json", text);
        let out = run(&["energy", "--config", &cfg], &s.out("o"));
        assert_eq!(out.status.code(), Some(2), "{text}");
    }
    let out = run(&["energy", "--config", "/nonexistent/config.json"], &s.out("o"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn clifford_lift_reports_its_periods() {
    let s = Scratch::new("lift");
    let cfg = s.file("c.json", r#"{"lift": {"grid": {"clifford": 64}}}"#);
    let out = run(&["lift", "--config", &cfg], &s.out("o"));
    assert!(out.status.success());
    let r = json(s.out("o").join("lift.json"));
    for p in r["periods"].as_array().unwrap() {
        let p = p.as_f64().unwrap();
        assert!((p / (2.0 * PI) - 1.0).abs() < 2e-3, "{p}");
    }
    assert_eq!(r["mesh"]["genus"], 1);
    assert_eq!(r["mesh"]["vertices"].as_array().unwrap().len(), 64 * 64);
}

#[test]
fn constant_map_lifts_to_constant_phi() {
    let s = Scratch::new("const");
    let u = vec!["[0.3, -0.2, 0.5, 1.0]"; 9].join(",");
    let grid = s.file(
        "g.json",
        &format!(r#"{{"n1": 3, "n2": 3, "h1": 0.1, "h2": 0.1, "periodic": [false, false], "u": [{u}]}}"#),
    );
    let cfg = s.file("c.json", &format!(r#"{{"lift": {{"grid": {{"file": "{grid}"}}, "base_value": 0.25}}}}"#));
    let out = run(&["lift", "--config", &cfg], &s.out("o"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(s.out("o").join("lift.json"));
    assert!(r["lift"]["phi"].as_array().unwrap().iter().all(|x| x.as_f64() == Some(0.25)));
    assert!(r["mesh"].is_null());
    assert!(r["mesh_note"].as_str().unwrap().contains("degenerate"));
}

#[test]
fn non_lagrangian_grid_fails_with_the_worst_cell() {
    let s = Scratch::new("nonlag");
    let mut u = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            u.push(format!("[{}, {}, 0.0, 0.0]", i as f64 / 3.0, j as f64 / 3.0));
        }
    }
    let grid = s.file(
        "g.json",
        &format!(
            r#"{{"n1": 4, "n2": 4, "h1": 0.3333, "h2": 0.3333, "periodic": [false, false], "u": [{}]}}"#,
            u.join(",")
        ),
    );
    let cfg = s.file("c.json", &format!(r#"{{"lift": {{"grid": {{"file": "{grid}"}}}}}}"#));
    let out = run(&["lift", "--config", &cfg], &s.out("o"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("worst cell"));
}

#[test]
fn flat_patch_energy_is_its_area() {
    let s = Scratch::new("energy");
    let cfg = s.file(
        "c.json",
        r#"{"mesh": {"corpus": {"family": "flat_patch", "resolution": 8, "size": 2.0}}, "energy": {"epsilon": 0.5}}"#,
    );
    assert!(run(&["energy", "--config", &cfg], &s.out("o")).status.success());
    let r = json(s.out("o").join("energy.json"));
    assert!((r["energy"]["area"].as_f64().unwrap() - 4.0).abs() < 1e-13);
    assert!((r["energy"]["penalty"].as_f64().unwrap() - 0.0625 * 4.0).abs() < 1e-13);
    assert!(r["hamiltonian_grad_norm"].as_f64().unwrap() < 1e-12);
}

fn trajectory(path: PathBuf) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn flat_patch_descent_does_not_move() {
    let s = Scratch::new("flat");
    let cfg = s.file("c.json", r#"{"mesh": {"corpus": {"family": "flat_patch", "resolution": 6}}}"#);
    assert!(run(&["descend", "--config", &cfg], &s.out("o")).status.success());
    assert!(trajectory(s.out("o").join("trajectory.jsonl")).is_empty());
    let r = json(s.out("o").join("descent.json"));
    assert_eq!(r["stages"][0]["converged"], true);
    assert_eq!(r["accepted_steps"], 0);
}

#[test]
fn perturbed_clifford_descent_decreases_energy() {
    let s = Scratch::new("pert");
    let cfg = s.file(
        "c.json",
        r#"{"mesh": {"corpus": {"family": "perturbed_clifford", "resolution": 16, "amplitude": 0.01, "seed": 7}},
            "descent": {"epsilon_schedule": [0.2], "max_iters": 10}}"#,
    );
    let out = run(&["descend", "--config", &cfg], &s.out("o"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let steps = trajectory(s.out("o").join("trajectory.jsonl"));
    assert!(!steps.is_empty());
    for key in ["k", "iter", "area", "penalty", "grad_norm", "max_leg_residual", "entropy_indicator"] {
        assert!(steps[0].get(key).is_some(), "{key}");
    }
    let r = json(s.out("o").join("descent.json"));
    let mut prev = r["stages"][0]["initial"]["total"].as_f64().unwrap();
    for st in &steps {
        let e = st["total"].as_f64().unwrap();
        assert!(e <= prev);
        prev = e;
    }
    for key in ["area", "penalty", "grad_norm", "max_leg_residual"] {
        assert!(r["final"][key].is_number(), "{key}");
    }
    let mesh = json(s.out("o").join("final_mesh.json"));
    assert_eq!(mesh["vertices"].as_array().unwrap().len(), 256);
}

#[test]
fn epsilon_schedule_reports_entropy_per_stage() {
    let s = Scratch::new("sched");
    let cfg = s.file(
        "c.json",
        r#"{"mesh": {"corpus": {"family": "perturbed_clifford", "resolution": 16, "amplitude": 0.01, "seed": 7}},
            "descent": {"epsilon_schedule": [0.2, 0.1, 0.05, 0.025], "max_iters": 5}}"#,
    );
    let out = run(&["descend", "--config", &cfg], &s.out("o"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(s.out("o").join("descent.json"));
    let stages = r["stages"].as_array().unwrap();
    assert!(!stages.is_empty());
    let entropy: Vec<f64> = stages.iter().map(|s| s["entropy_indicator"].as_f64().unwrap()).collect();
    assert!(entropy.iter().all(|e| e.is_finite() && *e >= 0.0));
    for st in stages {
        assert!(st["almost_critical_target"].as_f64().unwrap() < st["tolerance"].as_f64().unwrap());
    }
}

#[test]
fn step_rejection_cascade_exits_with_abort() {
    let s = Scratch::new("abort");
    let cfg = s.file(
        "c.json",
        r#"{"mesh": {"corpus": {"family": "perturbed_clifford", "resolution": 16, "amplitude": 0.01}},
            "descent": {"epsilon_schedule": [0.2], "tau_init": 1.0, "tau_min": 1.0, "armijo": 0.9, "max_iters": 3}}"#,
    );
    let out = run(&["descend", "--config", &cfg], &s.out("o"));
    assert_eq!(out.status.code(), Some(4));
    let r = json(s.out("o").join("descent.json"));
    assert!(r["abort"].as_str().unwrap().contains("step size"));
    assert!(s.out("o").join("final_mesh.json").exists());
}

#[test]
fn invalid_schedule_is_a_validation_failure() {
    let s = Scratch::new("sched-bad");
    let cfg = s.file("c.json", r#"{"descent": {"epsilon_schedule": [0.1, 0.2]}}"#);
    assert_eq!(run(&["descend", "--config", &cfg], &s.out("o")).status.code(), Some(2));
}

#[test]
fn monotonicity_bundle_over_the_ladder() {
    let s = Scratch::new("mono");
    let out = run(&["monotonicity", "--resolution-ladder", "16,64,128"], &s.out("o"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(s.out("o").join("monotonicity_terms.csv")).unwrap();
    assert!(csv.starts_with("resolution,term,side,value\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 14);
    let r = json(s.out("o").join("monotonicity.json"));
    assert!(r["cutoff"].as_str().unwrap().contains("chi"));
    let rows = r["rows"].as_array().unwrap();
    assert!(rows[2]["residual"].as_f64().unwrap() < rows[1]["residual"].as_f64().unwrap());
    assert!(r["residual_decay"]["order"].as_f64().unwrap() > 1.0);
}

#[test]
fn density_bundle_over_the_ladder() {
    let s = Scratch::new("density");
    let out = run(&["density", "--resolution-ladder", "64,128"], &s.out("o"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(s.out("o").join("density.csv")).unwrap();
    assert!(csv.starts_with("resolution,s,ratio,n_components\n"));
    let theta = std::fs::read_to_string(s.out("o").join("theta0.csv")).unwrap();
    assert_eq!(theta.lines().count(), 1 + 2 * 2);
    let r = json(s.out("o").join("density.json"));
    assert!(r["levels"][1]["upper_constant"].as_f64().unwrap() > 0.0);
}

#[test]
fn clifford_demo_passes_its_refinement_checks() {
    let s = Scratch::new("demo");
    let out = run(&["clifford-demo", "--resolution-ladder", "16,32,64"], &s.out("o"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(s.out("o").join("clifford_demo.json"));
    assert_eq!(r["passed"], true);
    assert!(r["laplacian_beta"]["order"].as_f64().unwrap() > 1.5);
    let csv = std::fs::read_to_string(s.out("o").join("clifford_demo.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn failed_refinement_check_is_a_numerical_failure() {
    let s = Scratch::new("demo-fail");
    let cfg = s.file("c.json", r#"{"clifford_demo": {"min_order": 5.0}}"#);
    let out = run(&["clifford-demo", "--config", &cfg, "--resolution-ladder", "16,32"], &s.out("o"));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn odd_ladder_resolution_is_rejected() {
    let s = Scratch::new("odd");
    let out = run(&["clifford-demo", "--resolution-ladder", "15,32"], &s.out("o"));
    assert_eq!(out.status.code(), Some(2));
}
