//! The `secrelay` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn secrelay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secrelay"))
        .args(args)
        .env_remove("SECRELAY_THREADS")
        .output()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const RHO2_ZERO: &str = r#"{
  "subchannels": [{"sigma2_relay": 1, "sigma2_dest": 1, "sigma2_eve": 1, "rho1": 4, "rho2": 0}],
  "budget": {"p1": 1, "p2": 1}
}"#;

const SYMMETRIC: &str = r#"{
  "subchannels": [
    {"sigma2_relay": 1, "sigma2_dest": 2, "sigma2_eve": 2, "rho1": 3, "rho2": 3},
    {"sigma2_relay": 0.5, "sigma2_dest": 1, "sigma2_eve": 1, "rho1": 0.5, "rho2": 0.5}
  ],
  "budget": {"p1": 4, "p2": 2}
}"#;

#[test]
fn fig3_prints_both_rates() {
    let a = secrelay(&["fig3"]);
    assert!(a.status.success());
    assert_eq!(String::from_utf8_lossy(&a.stdout), "across=4 separate=3\n");
    assert_eq!(a.stdout, secrelay(&["fig3"]).stdout);
}

#[test]
fn bounds_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", RHO2_ZERO);
    let out = secrelay(&["bounds", "--config", path_str(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let upper = v["upper"]["value"].as_f64().unwrap();
    assert!((upper - (1.0 + 2f64.sqrt()).log2()).abs() < 1e-7, "{upper}");
    assert!(v["lower"]["value"].as_f64().unwrap() <= upper);
    assert!(v["lower"]["allocation"]["p1"].is_array());
    // rho2 = 0: the relay-deaf bounds coincide and give the capacity
    let deaf = &v["deaf"];
    assert_eq!(deaf["upper"], deaf["lower"]);
    assert_eq!(deaf["capacity"], deaf["upper"]);
    assert_eq!(v["config"]["budget"]["p1"], 1.0);
    assert!(v["meta"]["version"].is_string());
}

#[test]
fn symmetric_channel_reports_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SYMMETRIC);
    let out_path = dir.path().join("r.json");
    let out = secrelay(&["bounds", "--config", path_str(&cfg), "--out", path_str(&out_path)]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["lower"]["value"], 0.0);
    assert_eq!(v["upper"]["value"], 0.0);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "broken.json", "{\"subchannels\": [");
    let out = secrelay(&["bounds", "--config", path_str(&broken)]);
    assert_eq!(out.status.code(), Some(2));

    let bad_field = write(dir.path(), "bad.json", &RHO2_ZERO.replace("\"sigma2_eve\": 1", "\"sigma2_eve\": -1"));
    let out = secrelay(&["bounds", "--config", path_str(&bad_field)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma2_eve"));

    let missing = dir.path().join("missing.json");
    assert_eq!(secrelay(&["bounds", "--config", path_str(&missing)]).status.code(), Some(2));
    assert_eq!(secrelay(&["sweep", "--d-step", "0"]).status.code(), Some(2));
    assert_eq!(secrelay(&["sweep", "--schemes", "DF_all,bogus"]).status.code(), Some(2));

    let threads = Command::new(env!("CARGO_BIN_EXE_secrelay"))
        .arg("fig3")
        .env("SECRELAY_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn oversized_oracle_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = SYMMETRIC.replace("\"budget\"", "\"solver\": {\"grid_resolution\": 5000}, \"budget\"");
    let cfg = write(dir.path(), "c.json", &text);
    assert_eq!(secrelay(&["oracle-check", "--config", path_str(&cfg)]).status.code(), Some(3));
}

#[test]
fn oracle_check_and_gradcheck() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", RHO2_ZERO);
    let out = secrelay(&["oracle-check", "--config", path_str(&cfg)]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for k in ["lower", "upper", "deaf", "deaf_constrained"] {
        let opt = v[k]["optimizer"].as_f64().unwrap();
        let orc = v[k]["oracle"].as_f64().unwrap();
        assert!(opt >= orc - 1e-9, "{k}: {opt} < {orc}");
    }
    let out = secrelay(&["gradcheck", "--config", path_str(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stdout.is_empty());
}

#[test]
fn sweep_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let out = secrelay(&["sweep", "--n-states", "2", "--out", path_str(&a)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,scheme,rate_bits");
    assert_eq!(lines.len(), 1 + 19 * 5);
    assert!(lines[1].starts_with("0.1,DF_all,"));
    assert!(lines.last().unwrap().starts_with("1.9,upper,"));
    assert!(!text.contains('\r'));

    // sidecar carries the resolved config and reproduces the file
    let sidecar = dir.path().join("a.csv.meta.json");
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(&sidecar).unwrap()).unwrap();
    assert_eq!(meta["scenario"]["n_states"], 2);
    assert_eq!(meta["scenario"]["seed"], 42);
    assert!(meta["meta"]["version"].is_string());
    let b = dir.path().join("b.csv");
    let out = secrelay(&["sweep", "--config", path_str(&sidecar), "--out", path_str(&b)]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let base = secrelay(&["sweep", "--n-states", "2", "--schemes", "no_relay"]);
    assert!(base.status.success());
    let text = String::from_utf8(base.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 19);
    assert_eq!(text, String::from_utf8(secrelay(&["sweep", "--n-states", "2", "--schemes", "no_relay"]).stdout).unwrap());
}
