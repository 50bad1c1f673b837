use std::process::{Command, Output};

use serde_json::Value;

fn singcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_singcert")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn close(v: &Value, want: f64) -> bool {
    (v.as_f64().unwrap() - want).abs() <= 1e-12 * want.abs().max(1.0)
}

#[test]
fn inverse_bounds_example() {
    let out = singcert(&["bounds", "inverse", "--fn", "x1 + x1^2/4", "--at", "0", "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema"], "singcert-report/1");
    assert_eq!(r["status"], "ok");
    let c = &r["result"]["certificate"];
    assert!(close(&c["delta"], 0.5));
    assert!(close(&c["rho1"], 1.0 / 18.0));
    assert_eq!(r["config"]["k"], 2);
    assert_eq!(r["config"]["expr"], "x1 + x1^2/4");
}

#[test]
fn split_bounds_example() {
    let out = singcert(&["bounds", "split", "--fn", "x1^2 + x2^3", "--at", "0,0", "--k", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let chart = &report(&out)["result"]["chart"];
    assert_eq!(chart["p"], 1);
    assert_eq!(chart["signs"], serde_json::json!([1.0]));
}

#[test]
fn catalog_entry_is_resolved() {
    let out = singcert(&["verify", "implicit", "--catalog", "imp-circle", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["config"]["m"], 1);
    assert_eq!(r["config"]["at"], serde_json::json!([0.6, 0.8]));
    assert!(r["verification"]["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(singcert(&["bounds", "inverse", "--catalog", "no-such-entry"]).status.code(), Some(1));
    assert_eq!(singcert(&["bounds", "inverse", "--fn", "x1 +* 2"]).status.code(), Some(1));
    assert_eq!(singcert(&["bounds", "inverse"]).status.code(), Some(1));
    assert_eq!(singcert(&["bounds", "sideways", "--fn", "x1"]).status.code(), Some(1));
    assert_eq!(singcert(&["bounds", "inverse", "--fn", "x1", "--at", "0,0"]).status.code(), Some(1));
}

#[test]
fn singular_jacobian_is_refused() {
    let out = singcert(&["bounds", "inverse", "--fn", "x1^2", "--at", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["status"], "refused");
    assert_eq!(r["error"]["kind"], "SingularJacobian");
}

#[test]
fn understated_norm_bound_fails_verification() {
    let out = singcert(&["verify", "inverse", "--fn", "x1 + x1^3", "--at", "0", "--K", "0.5", "--samples", "200"]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["status"], "verification_failed");
    let checks = r["verification"]["checks"].as_array().unwrap();
    let dv = checks.iter().find(|c| c["name"] == "derivative_variation").unwrap();
    assert_eq!(dv["passed"], false);
}

#[test]
fn morse_double_well() {
    let out = singcert(&["morse", "analyze", "--fn", "x1^4/4 - x1^2/2"]);
    assert_eq!(out.status.code(), Some(0));
    let cps = report(&out)["result"]["critical_points"].as_array().unwrap().clone();
    assert_eq!(cps.len(), 3);
    let out = singcert(&["morse", "certify", "--fn", "x1^4/4 - x1^2/2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["error"]["kind"], "DuplicateCriticalValues");
}

#[test]
fn morse_perturb_cubic() {
    let out = singcert(&["morse", "perturb", "--fn", "x1^3/3", "--eps", "0.5", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--c-entropy"));
    let r = report(&out);
    assert_eq!(r["config"]["eps"], 0.5);
    assert!(r["result"]["perturbation"]["tilt"].is_array());
}

#[test]
fn openness_rejects_large_perturbation() {
    let base = ["morse", "check-openness", "--catalog", "morse-tilted-cubic"];
    let ok = singcert(&[&base[..], &["--fbar", "x1^3/3 - x1/4 + 0.00001*x1"]].concat());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let big = singcert(&[&base[..], &["--fbar", "x1^3/3 + x1"]].concat());
    assert_eq!(big.status.code(), Some(2));
    assert_eq!(report(&big)["error"]["kind"], "PerturbationTooLarge");
}

#[test]
fn json_and_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let out = singcert(&[
        "bounds",
        "rank",
        "--catalog",
        "rank-parabola",
        "--json",
        json.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(file, report(&out));
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("field,value\n"));
    assert!(table.contains("result.certificate.p,1"));
    assert!(table.contains("status,ok"));
}

#[test]
fn catalog_lists_entries() {
    let out = singcert(&["catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.as_array().unwrap().len() >= 30);
}

#[test]
fn bad_thread_count_is_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_singcert"))
        .args(["catalog"])
        .env("SINGCERT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
