//! End-to-end tests of the bilap binary: exit-code contract, output formats,
//! and byte-identical reruns.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bilap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bilap"))
        .args(args)
        .env_remove("BILAP_TIMESTAMP")
        .env_remove("BILAP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn repo_instance(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../instances")
        .join(name);
    path.display().to_string()
}

#[test]
fn stats_csv_matches_the_closed_forms() {
    let out = bilap(&[
        "stats",
        "--builder",
        "half_line_unit",
        "--n-max",
        "5",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,d_n,p_n,beta_n,dnpn_over_n");
    assert_eq!(lines.next().unwrap(), "1,2,1,2,2");
    assert_eq!(lines.next().unwrap(), "2,2,1,1,1");

    // Unbounded-degree family: d_n = n + 2 for kappa = 1.
    let out = bilap(&[
        "stats",
        "--builder",
        "radial_tree",
        "--kappa",
        "1",
        "--n-max",
        "4",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    for (i, line) in text.lines().skip(1).enumerate() {
        let n = i as u32 + 1;
        let d: u32 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(d, n + 2);
    }
}

#[test]
fn stats_single_row() {
    let out = bilap(&[
        "stats",
        "--builder",
        "half_line_sqrt",
        "--n-max",
        "1",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    let out = bilap(&["check", "--instance", &repo_instance("half_line_unit.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("\"verdict\": \"satisfied\""));

    let out = bilap(&[
        "check",
        "--instance",
        &repo_instance("radial_tree_k15_a0.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = bilap(&[
        "check",
        "--instance",
        &repo_instance("radial_tree_k05_a08.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_instance_exits_64() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, "{\"family\": {\"builder\": \"no_such_thing\"}}").unwrap();
    let out = bilap(&["check", "--instance", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
    assert!(!out.stderr.is_empty());
}

#[test]
fn verify_is_byte_identical_across_reruns() {
    let args = [
        "verify",
        "--suite",
        "all",
        "--seed",
        "7",
        "--trials",
        "30",
        "--n-max",
        "4",
        "--timestamp",
        "1700000000",
    ];
    let a = bilap(&args);
    let b = bilap(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "reports differ across identical runs");
    assert!(stdout(&a).contains("\"all_passed\": true"));
}

#[test]
fn verify_table_format() {
    let out = bilap(&[
        "verify",
        "--suite",
        "scalar_sum_square,young_inequality",
        "--seed",
        "5",
        "--trials",
        "20",
        "--format",
        "table",
        "--timestamp",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("check"));
    assert!(text.contains("scalar_sum_square"));
    assert!(text.lines().last().unwrap().starts_with("all passed: yes"));
}

#[test]
fn verify_named_suite_and_ci_seed_rule() {
    let out = bilap(&[
        "verify",
        "--suite",
        "product_rule,green_first_order",
        "--seed",
        "3",
        "--trials",
        "10",
        "--timestamp",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("product_rule"));
    assert!(text.contains("green_first_order"));
    assert!(!text.contains("expansion_identity"));

    let out = bilap(&["verify", "--ci", "--trials", "5", "--timestamp", "1"]);
    assert_eq!(out.status.code(), Some(1));

    let out = bilap(&["verify", "--suite", "no_such_check", "--trials", "5"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn apply_bilaplacian_on_the_unit_path() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("path.json");
    fs::write(
        &graph,
        r#"{
  "root": "0", "mu_floor": 1.0,
  "vertices": [
    {"id": "0", "mu": 1.0}, {"id": "1", "mu": 1.0}, {"id": "2", "mu": 1.0},
    {"id": "3", "mu": 1.0}, {"id": "4", "mu": 1.0}
  ],
  "edges": [
    {"u": "0", "v": "1", "b": 1.0, "theta": 0.0},
    {"u": "1", "v": "2", "b": 1.0, "theta": 0.0},
    {"u": "2", "v": "3", "b": 1.0, "theta": 0.0},
    {"u": "3", "v": "4", "b": 1.0, "theta": 0.0}
  ]
}"#,
    )
    .unwrap();
    let amp = dir.path().join("delta0.json");
    fs::write(&amp, r#"{"0": [1.0, 0.0]}"#).unwrap();
    let out = bilap(&[
        "apply",
        "--graph",
        graph.to_str().unwrap(),
        "--op",
        "bilaplacian",
        "--amplitudes",
        amp.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let result: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(result["0"][0], 2.0);
    assert_eq!(result["1"][0], -3.0);
    assert_eq!(result["2"][0], 1.0);
}

#[test]
fn export_writes_matrix_market_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bilap"))
        .args([
            "export",
            "--builder",
            "half_line_unit",
            "--n",
            "10",
            "--boundary",
            "dirichlet",
            "--out",
            "export/m.mtx",
            "--timestamp",
            "1",
        ])
        .env("BILAP_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let mtx = fs::read_to_string(dir.path().join("export/m.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket matrix coordinate complex general\n"));
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("export/m.mtx.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["hermitian"], true);
    assert_eq!(sidecar["col_ids"].as_array().unwrap().len(), 11);
    assert_eq!(sidecar["basis"], "sqrt_mu_normalized");
}

#[test]
fn probe_shooting_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bilap"))
        .args([
            "probe",
            "--builder",
            "half_line_unit",
            "--method",
            "shooting",
            "--nu",
            "1",
            "--horizon",
            "120",
            "--csv-dir",
            "csv",
            "--timestamp",
            "1",
        ])
        .env("BILAP_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["conclusion"], "consistent_with_delta_zero");
    assert!(!report["caveat"].as_str().unwrap().is_empty());
    let csv = fs::read_to_string(dir.path().join("csv/shooting_nu1_basis0.csv")).unwrap();
    assert!(csv.starts_with("k,abs_u,partial_norm\n"));
    assert_eq!(csv.lines().count(), 122);
}

#[test]
fn probe_nu_consistency_mode() {
    let out = bilap(&[
        "probe",
        "--builder",
        "half_line_unit",
        "--method",
        "nu_consistency",
        "--horizon",
        "120",
        "--timestamp",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["agreed"], true);
    assert_eq!(report["conclusion"], "consistent_with_delta_zero");
    assert_eq!(report["nus"].as_array().unwrap().len(), 3);
}
