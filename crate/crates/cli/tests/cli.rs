use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cop(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cop")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

const TWO_UNIFORMS: &str = r#"{"n": 2, "dists": [{"kind": "uniform", "a": 0, "b": 1}, {"kind": "uniform", "a": 0, "b": 1}]}"#;
const ID2: &str = r#"{"n": 2, "perms": [[1, 2]]}"#;

fn setup() -> TempDir {
    let dir = TempDir::new().unwrap();
    write(&dir, "two.json", TWO_UNIFORMS);
    write(&dir, "id2.json", ID2);
    dir
}

#[test]
fn eval_two_uniforms_at_half() {
    let dir = setup();
    let o = cop(&["eval", "--instance", "two.json", "--family", "id2.json", "--threshold", "0.5"], dir.path());
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["gambler"].as_f64().unwrap(), 0.5625);
    assert_eq!(r["prophet"].as_f64().unwrap(), 0.666666666667);
}

#[test]
fn eval_golden_dispatch() {
    let dir = setup();
    let o = cop(&["eval", "--instance", "two.json", "--family", "id2.json", "--threshold", "golden"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["theta"].as_f64().unwrap(), 0.61803398875);
}

#[test]
fn threshold_spec_forms() {
    let dir = setup();
    for (spec, theta) in [("product-survival:0.25", 0.5), ("max-survival:0.75", 0.5), ("0.3,0.2", 0.3)] {
        let o = cop(&["eval", "--instance", "two.json", "--family", "id2.json", "--threshold", spec], dir.path());
        assert_eq!(code(&o), 0, "{spec}");
        assert!((json(&o)["theta"].as_f64().unwrap() - theta).abs() < 1e-11, "{spec}");
    }
    let o = cop(&["eval", "--instance", "two.json", "--family", "id2.json", "--threshold", "median"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_json_reports_location() {
    let dir = setup();
    write(&dir, "bad.json", "{\n  \"n\": 2,\n  \"dists\": [ {\"kind\": \"uniform\" \"a\": 0} ]\n}");
    let o = cop(&["eval", "--instance", "bad.json", "--family", "id2.json"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json:3:"));
}

#[test]
fn dimension_mismatch_is_semantic() {
    let dir = setup();
    write(&dir, "id3.json", r#"{"n": 3, "perms": [[1, 2, 3]]}"#);
    let o = cop(&["eval", "--instance", "two.json", "--family", "id3.json"], dir.path());
    assert_eq!(code(&o), 3);
    write(&dir, "mass.json", r#"{"n": 1, "dists": [{"kind": "atoms", "points": [[1, 0.4]]}]}"#);
    write(&dir, "id1.json", r#"{"n": 1, "perms": [[1]]}"#);
    let o = cop(&["eval", "--instance", "mass.json", "--family", "id1.json"], dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn sweep_golden_hard_instance() {
    let dir = setup();
    assert_eq!(code(&cop(&["hard-instance", "golden", "--delta", "1e-4", "--out", "g.json"], dir.path())), 0);
    assert_eq!(code(&cop(&["construct", "forward_reverse", "--n", "3", "--out", "fr.json"], dir.path())), 0);
    let o = cop(&["sweep", "--instance", "g.json", "--family", "fr.json"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "theta,tie,gambler,prophet,ratio");
    let best = lines.map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!((best - 0.6180).abs() <= 1e-3, "{best}");
}

#[test]
fn sweep_grid_sizes() {
    let dir = setup();
    write(&dir, "u.json", r#"{"n": 1, "dists": [{"kind": "uniform", "a": 0, "b": 1}]}"#);
    write(&dir, "id1.json", r#"{"n": 1, "perms": [[1]]}"#);
    let o = cop(&["sweep", "--instance", "u.json", "--family", "id1.json", "--grid", "10"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 11);
    let o = cop(&["sweep", "--instance", "u.json", "--family", "id1.json", "--grid", "0"], dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn construct_families() {
    let dir = setup();
    let o = cop(&["construct", "affine", "--n", "13", "--out", "a.json"], dir.path());
    assert_eq!(code(&o), 0);
    let summary = json(&o);
    assert_eq!(summary["m"], 156);
    assert_eq!(summary["verification"]["passed"], true);

    let o = cop(&["construct", "forward_reverse", "--n", "7"], dir.path());
    let fam = json(&o);
    assert_eq!(fam["perms"], serde_json::json!([[1, 2, 3, 4, 5, 6, 7], [7, 6, 5, 4, 3, 2, 1]]));

    let o = cop(&["construct", "padded", "--parent", "a.json", "--n", "9", "--dedup"], dir.path());
    assert_eq!(code(&o), 0);
    let fam = json(&o);
    assert_eq!(fam["n"], 9);
    assert!(fam["perms"].as_array().unwrap().len() <= 156);

    let o = cop(&["construct", "affine", "--n", "12"], dir.path());
    assert_eq!(code(&o), 3);
    let o = cop(&["construct", "padded", "--parent", "a.json", "--n", "20"], dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn construct_sampled_records_attempts_and_is_reproducible() {
    let dir = setup();
    let args = ["construct", "sampled", "--n", "20", "--epsilon", "0.25", "--delta", "0.4", "--seed", "11"];
    let a = cop(&args, dir.path());
    let b = cop(&args, dir.path());
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let fam = json(&a);
    assert_eq!(fam["perms"].as_array().unwrap().len(), 10785);
    assert_eq!(fam["provenance"]["kind"], "sampled");
    assert!(fam["provenance"]["attempts"].as_u64().unwrap() >= 1);
    // εn below 2/δ.
    let o = cop(&["construct", "sampled", "--n", "8", "--epsilon", "0.25", "--delta", "0.4"], dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn verify_exit_codes() {
    let dir = setup();
    cop(&["construct", "affine", "--n", "7", "--out", "a7.json"], dir.path());
    cop(&["construct", "forward_reverse", "--n", "7", "--out", "fr7.json"], dir.path());
    assert_eq!(code(&cop(&["verify", "--family", "a7.json"], dir.path())), 0);
    assert_eq!(code(&cop(&["verify", "--family", "fr7.json"], dir.path())), 4);
    cop(&["construct", "sampled", "--n", "20", "--epsilon", "0.25", "--delta", "0.4", "--out", "s.json"], dir.path());
    let o = cop(&["verify", "--family", "s.json", "--epsilon", "0.25", "--delta", "0.4"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(json(&o)["max_tv"].as_f64().unwrap() <= 0.4);
    let o = cop(&["verify", "--family", "s.json", "--epsilon", "0.3", "--delta", "0.4"], dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn center_commands() {
    let dir = setup();
    cop(&["construct", "forward_reverse", "--n", "5", "--out", "fr5.json"], dir.path());
    let o = cop(&["center", "--family", "fr5.json"], dir.path());
    assert_eq!(code(&o), 0);
    let doc = json(&o);
    assert_eq!(doc["epsilon"].as_f64().unwrap(), 0.0);
    assert!((2..=4).contains(&doc["best"].as_u64().unwrap()));

    let o = cop(&["center", "--family", "id2.json"], dir.path());
    let doc = json(&o);
    for c in doc["certificates"].as_array().unwrap() {
        assert!((c["epsilon"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }

    write(&dir, "one.json", r#"{"n": 1, "perms": [[1]]}"#);
    assert_eq!(code(&cop(&["center", "--family", "one.json"], dir.path())), 3);
}

#[test]
fn hard_instances_round_trip_through_files() {
    let dir = setup();
    cop(&["construct", "forward_reverse", "--n", "3", "--out", "fr3.json"], dir.path());
    assert_eq!(code(&cop(&["center", "--family", "fr3.json", "--index", "2", "--out", "c.json"], dir.path())), 0);
    let o = cop(
        &["hard-instance", "center", "--family", "fr3.json", "--certificate", "c.json", "--delta", "0.001", "--out", "h.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let inst: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("h.json")).unwrap()).unwrap();
    assert_eq!(inst["dists"][0]["kind"], "exp_capped");
    assert!((inst["dists"][0]["rate"].as_f64().unwrap() - 500.0).abs() < 1e-9);
    let o = cop(&["hard-instance", "center", "--family", "fr3.json", "--delta", "0.1"], dir.path());
    assert_eq!(code(&o), 3);

    let o = cop(&["hard-instance", "iid", "--n", "50", "--H", "50", "--out", "iid.json"], dir.path());
    assert_eq!(code(&o), 0);
    cop(&["construct", "forward_reverse", "--n", "50", "--out", "fr50.json"], dir.path());
    let o = cop(&["eval", "--instance", "iid.json", "--family", "fr50.json", "--threshold", "e"], dir.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn certify_modes() {
    let dir = setup();
    cop(&["hard-instance", "golden", "--delta", "1e-4", "--out", "g.json"], dir.path());
    cop(&["construct", "forward_reverse", "--n", "3", "--out", "fr.json"], dir.path());
    let o = cop(&["certify", "--instance", "g.json", "--family", "fr.json", "--mode", "golden"], dir.path());
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["passed"], true);
    let ratio = r["ratio"].as_f64().unwrap();
    assert!((0.618033988..=0.628033988).contains(&ratio));
    let o = cop(&["certify", "--instance", "g.json", "--family", "fr.json", "--mode", "e"], dir.path());
    assert_eq!(code(&o), 3);

    cop(&["construct", "affine", "--n", "2", "--out", "a2.json"], dir.path());
    let o = cop(&["certify", "--instance", "two.json", "--family", "a2.json", "--mode", "e"], dir.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn oracle_cross_checks() {
    let dir = setup();
    write(
        &dir,
        "atoms.json",
        r#"{"n": 3, "dists": [
            {"kind": "atoms", "points": [[0, 0.5], [1, 0.3], [2, 0.2]]},
            {"kind": "atoms", "points": [[1, 0.6], [3, 0.4]]},
            [{"kind": "atoms", "points": [[1, 0.5]]}, {"kind": "uniform", "a": 0, "b": 2, "w": 0.5}]
        ]}"#,
    );
    write(
        &dir,
        "atoms2.json",
        r#"{"n": 3, "dists": [
            {"kind": "atoms", "points": [[0, 0.5], [1, 0.3], [2, 0.2]]},
            {"kind": "atoms", "points": [[1, 0.6], [3, 0.4]]},
            {"kind": "atoms", "points": [[1, 1.0]]}
        ]}"#,
    );
    cop(&["construct", "forward_reverse", "--n", "3", "--out", "fr.json"], dir.path());
    let o = cop(&["oracle", "--instance", "atoms.json", "--family", "fr.json", "--samples", "100000"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(json(&o).get("enumeration").is_none());
    let o = cop(
        &["oracle", "--instance", "atoms2.json", "--family", "fr.json", "--threshold", "1,0.3", "--samples", "100000"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert!(r["enumeration"]["max_abs_error"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn run_record_and_determinism() {
    let dir = setup();
    cop(&["hard-instance", "golden", "--delta", "1e-3", "--out", "g.json"], dir.path());
    cop(&["construct", "forward_reverse", "--n", "3", "--out", "fr.json"], dir.path());
    let args = ["oracle", "--instance", "g.json", "--family", "fr.json", "--samples", "50000", "--seed", "9"];
    let a = cop(&[&args[..], &["--out", "a.json", "--record", "ra.json"]].concat(), dir.path());
    let b = cop(&[&args[..], &["--out", "b.json", "--record", "rb.json"]].concat(), dir.path());
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), fs::read(dir.path().join("b.json")).unwrap());
    let rec: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ra.json")).unwrap()).unwrap();
    assert_eq!(rec["seed"], 9);
    assert_eq!(rec["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(rec["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(rec["outputs"][0], "a.json");
}
