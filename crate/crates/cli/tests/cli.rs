use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubetoric")).args(args).output().expect("binary runs")
}

fn json_out(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("one JSON document")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).expect("JSON line")).collect()
}

#[test]
fn classify_non_bott() {
    let v = json_out(&["classify", "--input", r#"{"n":2,"lambda_star":[[-1,-2],[-1,-1]]}"#]);
    assert_eq!(v["valid"], true);
    assert_eq!(v["bott"], false);
    assert_eq!(v["all_signs_positive"], false);
    assert_eq!(v["graded_ranks"], serde_json::json!([1, 2, 1]));
    assert!(v.get("elapsed_us").is_none());
}

#[test]
fn classify_bott_with_timing() {
    let v = json_out(&["classify", "--timing", "--input", r#"{"n":2,"a":[[-1,-2],[0,-1]]}"#]);
    assert_eq!(v["bott"], true);
    assert_eq!(v["strict_factorization"], true);
    assert_eq!(v["ring_iso_to_product"], true);
    assert!(v["elapsed_us"].is_u64());
}

#[test]
fn classify_invalid_lambda_is_data() {
    let v = json_out(&["classify", "--input", r#"{"n":1,"lambda_star":[[3]]}"#]);
    assert_eq!(v["valid"], false);
}

#[test]
fn semifree_factorization_verdicts() {
    let v = json_out(&["semifree", "--input", r#"{"n":3,"a":[[-1,-2,-2],[0,-1,0],[0,0,-1]]}"#]);
    assert_eq!(v["strict_factorization"], true);
    assert_eq!(v["relaxed_factorization"], true);
    assert!(!v["semifree_vectors"].as_array().unwrap().is_empty());
    let v = json_out(&["semifree", "--input", r#"{"n":3,"a":[[-1,0,-2],[0,-1,-2],[0,0,-1]]}"#]);
    assert_eq!(v["strict_factorization"], false);
    assert_eq!(v["semifree_vectors"], serde_json::json!([]));
}

#[test]
fn cohomology_hirzebruch_parity() {
    let v = json_out(&["cohomology", "--input", r#"{"n":2,"a":[[-1,3],[0,-1]]}"#]);
    assert_eq!(v["iso_to_product"], false);
    assert_eq!(v["graded_ranks"], serde_json::json!([1, 2, 1]));
    let v = json_out(&["cohomology", "--input", r#"{"n":2,"a":[[-1,-4],[0,-1]]}"#]);
    assert_eq!(v["iso_to_product"], true);
    assert_eq!(v["bq_algebra_mod2"], true);
}

#[test]
fn cohomology_ring_input_mod2() {
    let ring = r#"{"n":2,"coeffs":"Z","square_rules":[[],[[[0,1],1]]]}"#;
    let v = json_out(&["cohomology", "--coeffs", "z2", "--input", ring]);
    assert_eq!(v["graded_ranks"], serde_json::json!([1, 2, 1]));
    assert_eq!(v["engine"], "rewriting");
    assert_eq!(v["ring"]["coeffs"], "Z2");
}

#[test]
fn census_is_deterministic_across_jobs() {
    let args = |jobs: &'static str| ["census", "--rank", "2", "--entry-min", "-2", "--entry-max", "2", "--jobs", jobs];
    let a = run(&args("1"));
    let b = run(&args("3"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let ls = lines(&a);
    let summary = &ls.last().unwrap()["summary"];
    assert_eq!(summary["matrices"].as_u64().unwrap() as usize, ls.len() - 1);
    assert_eq!(summary["violations"], 0);
}

#[test]
fn census_pretty_and_output_file() {
    let dir = std::env::temp_dir().join(format!("cubetoric-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("census.txt");
    let out = run(&[
        "census",
        "--rank",
        "1",
        "--entry-min",
        "-1",
        "--entry-max",
        "1",
        "--pretty",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("lambda_star"));
    assert!(text.contains("violations"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn crosscomplex_recognizers() {
    let oct = r#"{"vertices":6,"facets":[[0,2,4],[0,2,5],[0,3,4],[0,3,5],[1,2,4],[1,2,5],[1,3,4],[1,3,5]]}"#;
    let v = json_out(&["crosscomplex", "--input", oct]);
    assert_eq!(v["crosscomplex"], true);
    assert_eq!(v["crosscomplex_recursive"], true);
    let simplex = r#"{"vertices":5,"facets":[[1,2,3,4],[0,2,3,4],[0,1,3,4],[0,1,2,4],[0,1,2,3]]}"#;
    assert_eq!(json_out(&["crosscomplex", "--input", simplex])["crosscomplex"], false);
    let square = r#"{"facets":4,"vertex_facets":[[0,1],[1,2],[2,3],[3,0]]}"#;
    assert_eq!(json_out(&["crosscomplex", "--input", square])["combinatorial_cube"], true);
}

#[test]
fn fan_single_and_sweep() {
    let v = json_out(&["fan2d", "--input", r#"{"rays":[[1,0],[0,1],[-1,2],[0,-1]]}"#]);
    assert_eq!(v["complete_smooth"], true);
    assert_eq!(v["classification_holds"], true);
    let nu = v["normalized"].as_array().unwrap();
    assert!(nu.iter().any(|n| n["rays"] == serde_json::json!([[1, 0], [0, 1], [-1, 0], [-2, -1]])));
    let out = run(&["fan2d", "--sweep", "--max-rays", "6", "--bound", "2"]);
    assert!(out.status.success());
    let ls = lines(&out);
    assert_eq!(ls.last().unwrap()["summary"]["violations"], 0);
}

#[test]
fn input_errors_exit_one() {
    for input in ["{", r#"{"n":2,"a":[[1,0],[0,-1]]}"#, r#"{"n":3,"a":[[-1]]}"#, r#"{"rows":[]}"#] {
        let out = run(&["classify", "--input", input]);
        assert_eq!(out.status.code(), Some(1), "{input}");
        let err: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(err["error"], "input");
    }
    assert_eq!(run(&["census", "--rank", "9"]).status.code(), Some(1));
    assert_eq!(run(&["classify", "--input", "/no/such/file.json"]).status.code(), Some(1));
}

#[test]
fn input_from_file() {
    let dir = std::env::temp_dir().join(format!("cubetoric-in-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.json");
    std::fs::write(&path, r#"{"n":2,"lambda_star":[[-1,0],[0,-1]]}"#).unwrap();
    let v = json_out(&["classify", "--input", path.to_str().unwrap()]);
    assert_eq!(v["bott"], true);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn selfcheck_passes() {
    let out = run(&["selfcheck"]);
    let ls = lines(&out);
    assert_eq!(ls.len(), 10);
    assert!(ls.iter().all(|l| l["passed"] == true), "{ls:?}");
    assert_eq!(out.status.code(), Some(0));
}
