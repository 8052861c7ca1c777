use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewtorsion")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn temp_file(name: &str, body: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("skewtorsion-{}-{name}", std::process::id()));
    std::fs::write(&p, body).unwrap();
    p
}

fn identity<'a>(report: &'a Value, id: &str) -> &'a Value {
    report["geometries"][0]["identities"].as_array().unwrap().iter().find(|r| r["id"] == id).unwrap()
}

#[test]
fn check_su2_exact_passes() {
    let out = run(&["check", "--catalog", "su2_cs", "--mode", "exact"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(identity(&v, "RB")["exact_residual"], "0");
    let values = &v["geometries"][0]["quantities"][0]["values"];
    let max_r = values.as_array().unwrap().iter().find(|q| q["name"] == "max|R|").unwrap();
    assert_eq!(max_r["exact"], "0");
}

#[test]
fn false_verdicts_do_not_fail_the_run() {
    let out = run(&["check", "--catalog", "heis3_r3", "--identities", "RB,PAIR_SYM"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(identity(&v, "RB")["verdict"], false);
    assert_eq!(identity(&v, "PAIR_SYM")["verdict"], false);
}

#[test]
fn report_carries_anchor_tolerance_and_witness() {
    let out = run(&["check", "--catalog", "chart_phi", "--identities", "RB"]);
    let r = identity(&json(&out), "RB").clone();
    for key in ["id", "anchor", "residual", "tolerance", "verdict", "witness_point"] {
        assert!(!r[key].is_null(), "missing {key}");
    }
}

#[test]
fn malformed_input_exits_2() {
    let p = temp_file("bad.json", "{\"backend\": \"lie\", \"dim\": ");
    let out = run(&["check", "--input", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn invalid_geometry_exits_2() {
    // violates the Jacobi identity
    let body = r#"{"backend": "lie", "dim": 3, "c": [{"i":1,"j":2,"k":3,"v":"1"}, {"i":2,"j":3,"k":2,"v":"1"}]}"#;
    let p = temp_file("jacobi.json", body);
    assert_eq!(run(&["check", "--input", p.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["check", "--catalog", "no_such_entry"]).status.code(), Some(2));
}

#[test]
fn exact_mode_on_a_chart_exits_3() {
    let out = run(&["check", "--catalog", "chart_phi", "--mode", "exact"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("float"));
}

#[test]
fn potential_identities_are_skipped_or_rejected_without_f() {
    let body = r#"{"backend": "chart", "dim": 3, "box": [[-1,1],[-1,1],[-1,1]], "grid": [[0,0,0]],
        "g": [["1","0","0"],["0","1","0"],["0","0","1"]], "T": [{"i":1,"j":2,"k":3,"expr":"1 + 0.1*x1"}]}"#;
    let p = temp_file("nof.json", body);
    let path = p.to_str().unwrap();
    let out = run(&["check", "--input", path]);
    assert_eq!(out.status.code(), Some(0));
    let skipped = json(&out)["geometries"][0]["skipped"].as_array().unwrap().len();
    assert_eq!(skipped, 7);
    assert_eq!(run(&["check", "--input", path, "--identities", "GEIN1"]).status.code(), Some(3));
}

#[test]
fn classify_tables() {
    let v = json(&run(&["classify", "--catalog", "su2_cs"]));
    let t = &v["geometries"][0]["verdicts"];
    for k in ["first_bianchi", "pair_symmetry", "zz_flat", "nabla_einstein", "soliton"] {
        assert_eq!(t[k], true, "{k}");
    }
    let out = run(&["classify", "--catalog", "chart_phi"]);
    assert_eq!(out.status.code(), Some(0));
    let t = &json(&out)["geometries"][0]["verdicts"];
    assert_eq!(t["pair_symmetry"], false);
    assert_eq!(t["nabla_einstein"], false);
}

#[test]
fn two_dimensional_einstein_is_not_applicable() {
    let body = r#"{"backend": "lie", "dim": 2, "c": [{"i":1,"j":2,"k":2,"v":"1"}]}"#;
    let p = temp_file("dim2.json", body);
    let out = run(&["classify", "--input", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["geometries"][0]["nabla_einstein"]["not_applicable"].is_string());
    assert!(v["geometries"][0]["verdicts"]["nabla_einstein"].is_null());
}

#[test]
fn fuzz_exit_codes() {
    let out = run(&["fuzz", "--count", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
    assert_eq!(run(&["fuzz", "--seed", "3", "--count", "4", "--dims", "3..4"]).status.code(), Some(0));
    assert_eq!(run(&["fuzz", "--dims", "2..5", "--count", "1"]).status.code(), Some(2));
    let out = run(&["fuzz", "--seed", "2", "--count", "6", "--dims", "5,6", "--inject-mutation", "gen-sigma"]);
    assert_eq!(out.status.code(), Some(1));
    let failures = json(&out)["failures"].as_array().unwrap().clone();
    assert!(failures.iter().any(|f| f["check"] == "GEN" && f["geometry"]["backend"] == "lie"));
}

#[test]
fn catalog_export_feeds_check() {
    let list = run(&["catalog", "list", "--format", "json"]);
    let names: Vec<String> =
        json(&list).as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap().to_string()).collect();
    assert!(names.contains(&"flat_torus_6_zero_t".to_string()));
    let out = run(&["catalog", "export", "su2_family", "--lambda", "2", "--t", "1/2"]);
    let p = temp_file("export.json", &String::from_utf8(out.stdout).unwrap());
    let v = json(&run(&["check", "--input", p.to_str().unwrap(), "--identities", "ZZ"]));
    assert_eq!(identity(&v, "ZZ")["verdict"], false);
}

#[test]
fn seeded_grids_change_with_the_seed() {
    let a = run(&["check", "--catalog", "chart_phi", "--identities", "GEN", "--grid-points", "2", "--seed", "1"]);
    let b = run(&["check", "--catalog", "chart_phi", "--identities", "GEN", "--grid-points", "2", "--seed", "1"]);
    let c = run(&["check", "--catalog", "chart_phi", "--identities", "GEN", "--grid-points", "2", "--seed", "2"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(json(&a)["geometries"][0]["samples"], 2);
}
