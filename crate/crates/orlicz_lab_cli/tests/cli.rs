use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orlicz-lab"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn put(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_required(schema: &Value, doc: &Value) {
    for key in schema["required"].as_array().unwrap() {
        let key = key.as_str().unwrap();
        assert!(doc.get(key).is_some(), "missing {key}");
    }
}

/// Checks the keys and constants the schema fixes.
fn assert_matches_schema(doc: &Value) {
    let s = schema();
    assert_required(&s, doc);
    assert_eq!(doc["schema"], s["properties"]["schema"]["const"]);
    assert_eq!(doc["schema_version"], s["properties"]["schema_version"]["const"]);
    assert_required(&s["properties"]["config"], &doc["config"]);
    let item = &s["properties"]["checks"]["items"];
    for c in doc["checks"].as_array().unwrap() {
        assert_required(item, c);
        assert!(c["pass"].is_boolean());
    }
    assert_eq!(doc["passed"].as_bool().unwrap(), doc["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn analyze_power_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = put(dir.path(), "m.json", r#"{"kind":"power","p":2}"#);
    let out = dir.path().join("out");
    let o = run(&["analyze", "--spec", &spec], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_matches_schema(&r);
    for regime in ["at_zero", "at_infinity"] {
        for side in ["alpha", "beta"] {
            let v = r["result"]["indices"][regime][side]["point"].as_f64().unwrap();
            assert!((v - 2.0).abs() <= 1e-6, "{regime} {side} {v}");
        }
    }
    let d2 = r["result"]["delta2"]["global"]["constant"].as_f64().unwrap();
    assert!((d2 - 4.0).abs() <= 1e-9);
    assert!(out.join("conjugate.csv").exists());
}

#[test]
fn bad_specs_are_diagnosed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = put(dir.path(), "bad.json", r#"{"kind":"tabulated","grid":[0.5,1,2],"values":[1,0.5,8]}"#);
    let o = run(&["analyze", "--spec", &bad], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("decrease"));
    let broken = put(dir.path(), "broken.json", "{\"kind\": \"power\",\n  \"p\": }");
    let o = run(&["analyze", "--spec", &broken], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn check_rejects_function_outside_the_space() {
    let dir = tempfile::tempdir().unwrap();
    let m = put(dir.path(), "m.json", r#"{"kind":"power","p":2}"#);
    let f = put(dir.path(), "f.json", r#"{"form":"power-log","c":1,"r":0.6,"b":0}"#);
    let o = run(&["check", "--spec", &m, "--f-spec", &f], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not in"));
}

#[test]
fn indicator_gives_theta_and_the_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let m = put(dir.path(), "m.json", r#"{"kind":"power","p":1.5}"#);
    let f = put(dir.path(), "f.json", r#"{"form":"constant","c":1}"#);
    let out = dir.path().join("out");
    let o = run(&["build-psi", "--spec", &m, "--f-spec", &f], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_matches_schema(&r);
    assert_eq!(r["passed"], true);
    // θ is u² below 1, and that is all ψ sees
    let mut rdr = csv::Reader::from_path(out.join("psi.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["u", "psi"]);
    for row in rdr.records() {
        let row = row.unwrap();
        let u: f64 = row[0].parse().unwrap();
        let v: f64 = row[1].parse().unwrap();
        assert!((v / (u * u) - 1.0).abs() <= 1e-8, "{u} {v}");
    }
    let again = orlicz_lab::orlicz_core::OrliczSpec::from_json(&std::fs::read_to_string(out.join("psi.json")).unwrap()).unwrap();
    assert!((again.eval(0.25) - 0.0625).abs() <= 1e-10);
}

#[test]
fn fixed_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--preset", "rademacher", "--paths", "20000", "--seed", "11"];
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&args, &a).status.success());
    let o = bin().args(args).arg("--out").arg(&b).env("ORLICZ_LAB_THREADS", "2").output().unwrap();
    assert!(o.status.success());
    let ca = std::fs::read(a.join("rademacher.csv")).unwrap();
    assert_eq!(ca, std::fs::read(b.join("rademacher.csv")).unwrap());
    assert!(String::from_utf8_lossy(&ca).starts_with("profile,length,empirical,se,exact,ratio\n"));
    let r = report(&a);
    assert_matches_schema(&r);
    assert_eq!(r["config"]["seed"], 11);
    assert_eq!(r["result"]["generator"], orlicz_lab::mc_sim::GENERATOR_ID);
}

#[test]
fn unknown_reproduce_target_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["reproduce", "example3"], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn l2_theorem_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["reproduce", "l2-theorem", "--paths", "50000"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    assert_matches_schema(&r);
    assert_eq!(r["passed"], true);
}

#[test]
fn band_override_turns_into_exit_one() {
    // the fundamental ratio for the L² theorem is flat to three digits, so a
    // band below one cannot hold
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["reproduce", "l2-theorem", "--paths", "20000", "--band", "0.5"], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
}
