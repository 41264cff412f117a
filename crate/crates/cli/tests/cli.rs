use elltau::nekrasov::{tau_cm_series, SeriesCutoff};
use elltau::specfun::TorusModulus;
use elltau::threept::MonodromyData;
use num_complex::Complex64;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elltau"))
}

fn write_config(dir: &TempDir, name: &str, v: Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string(&v).unwrap()).unwrap();
    p
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = bin();
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn cx(v: &Value) -> Complex64 {
    Complex64::new(v["re"].as_f64().unwrap(), v["im"].as_f64().unwrap())
}

fn small() -> Value {
    json!({ "taus": [{"re": 0.0, "im": 0.9}, {"re": 0.0, "im": 1.1}, {"re": 0.2, "im": 1.2}], "n_modes": 24, "max_charge": 2, "max_boxes": 6 })
}

#[test]
fn tau_cm_happy_path() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", small());
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = bin().args(["tau-cm", "--config"]).arg(&cfg).arg("--out").arg(&out).arg("--csv").arg(&csv).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read(&out);
    assert_eq!(doc["command"], "tau-cm");
    let recs = doc["records"].as_array().unwrap();
    assert_eq!(recs.len(), 3);
    for r in recs {
        assert!(r["det"].is_object() && r["series"].is_object() && r["q"].is_object());
        assert!(r["error"].is_null());
        assert!((cx(&r["upsilon"]) - 1.0).norm() < 1e-6);
    }
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn lower_half_plane_is_rejected_without_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", json!({ "taus": [{"re": 0.0, "im": 1.0}, {"re": 0.3, "im": -0.5}] }));
    let out = dir.path().join("r.json");
    let o = run(&["tau-cm"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let cfg = write_config(&dir, "d.json", json!({ "taus": [{"re": 0.0, "im": 0.0}] }));
    assert_eq!(run(&["solve-q"], Some(&cfg), &out).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn malformed_config_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", json!({ "not_a_field": 1 }));
    let out = dir.path().join("r.json");
    assert_eq!(run(&["tau-cm"], Some(&cfg), &out).status.code(), Some(2));
    let o = bin().args(["verify", "--filter", "nothing"]).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn only_det_leaves_series_null() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", small());
    let out = dir.path().join("r.json");
    let o = run(&["tau-cm", "--only", "det"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for r in read(&out)["records"].as_array().unwrap() {
        assert!(r["det"].is_object());
        assert!(r["series"].is_null() && r["det_from_series"].is_null() && r["upsilon"].is_null());
    }
}

#[test]
fn verify_filter_runs_one_module() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&["verify", "--filter", "specfun"], None, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = read(&out)["records"].as_array().unwrap().clone();
    assert!(!recs.is_empty());
    for r in &recs {
        assert_eq!(r["module"], "specfun");
        assert_eq!(r["pass"], true);
    }
}

#[test]
fn verify_is_deterministic_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let o = run(&["verify", "--filter", "nekrasov", "--seed", "5"], None, p);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn keep_going_records_the_failing_point() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", json!({ "taus": [{"re": 0.0, "im": 1.1}, {"re": 0.0, "im": 1e-5}], "n_modes": 16 }));
    let out = dir.path().join("r.json");
    let o = run(&["tau-cm", "--only", "det", "--keep-going"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(1));
    let doc = read(&out);
    let recs = doc["records"].as_array().unwrap();
    assert_eq!(recs.len(), 2);
    assert!(recs[0]["error"].is_null() && recs[0]["det"].is_object());
    assert!(recs[1]["error"].is_string());
    assert_eq!(doc["summary"]["errors"], 1);
}

#[test]
fn solve_q_free_motion() {
    let dir = TempDir::new().unwrap();
    let a = 0.27;
    let cfg = write_config(
        &dir,
        "c.json",
        json!({ "a": a, "m": 0.0, "nu": 0.11, "rho": 0.19, "taus": [{"re": 0.0, "im": 1.0}, {"re": 0.0, "im": 1.1}], "n_modes": 24 }),
    );
    let out = dir.path().join("r.json");
    let o = run(&["solve-q"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for r in read(&out)["records"].as_array().unwrap() {
        // P = 2πi dQ/dτ with Q = ν + aτ up to sign and lattice moves.
        let p = cx(&r["p"]);
        let free = Complex64::new(0.0, 2.0 * std::f64::consts::PI * a);
        assert!((p - free).norm().min((p + free).norm()) < 1e-6, "{p}");
    }
}

#[test]
fn garnier_single_puncture_matches_cm_series() {
    let dir = TempDir::new().unwrap();
    let (a, m, nu, rho) = (0.31, 0.17, 0.05, 0.21);
    let cfg = write_config(
        &dir,
        "c.json",
        json!({ "garnier": { "z": [0.0], "a": [a], "m": [m], "nu": [nu], "rho": rho, "taus": [{"re": 0.0, "im": 1.1}], "cutoffs": [[1, 3], [2, 5], [3, 6]] } }),
    );
    let out = dir.path().join("r.json");
    let o = run(&["garnier"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = read(&out)["records"].as_array().unwrap().clone();
    let tau = TorusModulus::new(Complex64::new(0.0, 1.1)).unwrap();
    let md = MonodromyData::real(a, m, nu, rho).unwrap();
    for r in &recs {
        let cut = SeriesCutoff::centered(r["max_charge"].as_i64().unwrap(), r["max_boxes"].as_u64().unwrap() as u32);
        let want = tau_cm_series(&md, &tau, &cut).unwrap().value;
        let got = cx(&r["series"]);
        assert!((got - want).norm() < 1e-12 * want.norm(), "{got} vs {want}");
    }
    assert!(recs[2]["tau_garnier"].is_object());
}

#[test]
fn garnier_coincident_punctures_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        json!({ "garnier": { "z": [0.0, 1.0], "a": [0.3, 0.22], "m": [0.1, 0.15], "nu": [0.05, 0.12], "rho": 0.21 } }),
    );
    let out = dir.path().join("r.json");
    assert_eq!(run(&["garnier"], Some(&cfg), &out).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn perturbed_conventions_fail_verification() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", json!({ "n_modes": 24 }));
    let out = dir.path().join("r.json");
    let o = run(&["verify", "--filter", "isomon", "--invert-delta-nu"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(1));
    let recs = read(&out)["records"].as_array().unwrap().clone();
    let det_series = recs.iter().find(|r| r["name"].as_str().unwrap().starts_with("det / series")).unwrap();
    assert_eq!(det_series["pass"], false);
    assert!(det_series["measured"].as_f64().unwrap() > 1e-2);

    // Swapping arm and leg in one product only is a milder perturbation.
    let o = run(&["verify", "--filter", "isomon", "--arm-leg", "half-swapped"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(1));
    let recs = read(&out)["records"].as_array().unwrap().clone();
    let det_series = recs.iter().find(|r| r["name"].as_str().unwrap().starts_with("det / series")).unwrap();
    assert_eq!(det_series["pass"], false);
}

#[test]
fn nekrasov_table_lists_summands() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", json!({ "max_charge": 1, "max_boxes": 2 }));
    let out = dir.path().join("r.json");
    let o = run(&["nekrasov-table"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = read(&out)["records"].as_array().unwrap().clone();
    // 3×3 charges times the 1 + 2 + 5 partition pairs of total size ≤ 2.
    assert_eq!(recs.len(), 9 * 8);
}

#[test]
fn invalid_thread_env_is_rejected() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = bin().env("ELLTAU_THREADS", "many").args(["verify", "--filter", "specfun"]).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
