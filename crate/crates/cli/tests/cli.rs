//! Behavior of the `superdiff` binary: exit codes, error lines, config
//! merging, manifest contents, and output shapes. The statistical and
//! numerical claims live in the acceptance suite; these tests pin the
//! plumbing contract.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_superdiff"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["sample-env", "simulate", "bounds", "scaling", "aw-check"] {
        assert!(text.contains(sub), "--help lists {sub}");
    }
    let out = bin().arg("--version").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unknown_flag_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["bounds", "--bogus", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("error[usage]"));
}

#[test]
fn missing_required_parameter_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["bounds", "--lambda-list", "1e-2", "--out", "b.csv"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(
        err.contains("error[usage]") && err.contains("model"),
        "{err}"
    );
}

#[test]
fn lambda_outside_domain_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "bounds",
            "--model",
            "dcgf",
            "--lambda-list",
            "2.0",
            "--out",
            "b.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("error[usage]"));
}

#[test]
fn malformed_input_is_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.csv"), "t,E_t,stderr\n1.0,oops,0.1\n").unwrap();
    let out = run_in(
        tmp.path(),
        &["scaling", "--input", "bad.csv", "--out", "s.json"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("error[io]"));
}

#[test]
fn instability_is_exit_four() {
    // A near-singular repulsion kernel on a tiny torus: the occupation drift
    // quickly exceeds the quarter-box step limit.
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "simulate",
            "--model",
            "srbp",
            "--dt",
            "0.1",
            "--t-max",
            "5",
            "--ensemble",
            "4",
            "--box",
            "11",
            "--grid",
            "32",
            "--sigma",
            "0.08",
            "--seed",
            "3",
            "--out",
            "blow.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_of(&out).contains("error[instability]"));
}

#[test]
fn invalid_threads_env_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(tmp.path())
        .env("SUPERDIFF_THREADS", "many")
        .args(["aw-check", "--d", "2", "--iso", "--out", "aw.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("SUPERDIFF_THREADS"));
}

#[test]
fn threads_env_caps_pool_and_preserves_output() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "bounds",
        "--model",
        "dcgf",
        "--lambda-list",
        "1e-2,1e-3",
        "--tol",
        "1e-8",
        "--out",
        "b.csv",
    ];
    let out = bin()
        .current_dir(tmp.path())
        .env("SUPERDIFF_THREADS", "2")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let with_pool = std::fs::read(tmp.path().join("b.csv")).unwrap();
    let out = run_in(tmp.path(), &args);
    assert_eq!(out.status.code(), Some(0));
    let without = std::fs::read(tmp.path().join("b.csv")).unwrap();
    assert_eq!(with_pool, without, "worker count must not change the rows");
}

#[test]
fn config_file_merges_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("run.toml"),
        r#"
seed = 5

[bounds]
model = "dcgf"
lambda_list = [1e-2]
tol = 1e-7
out = "from_file.csv"
"#,
    )
    .unwrap();
    let out = run_in(
        tmp.path(),
        &["bounds", "--config", "run.toml", "--tol", "1e-8"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(tmp.path().join("from_file.csv").is_file());
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("from_file.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["subcommand"], "bounds");
    assert_eq!(manifest["seed"], 5, "seed comes from the file");
    assert_eq!(manifest["params"]["model"], "dcgf");
    assert_eq!(manifest["params"]["tol"], 1e-8, "flag overrides the file");
    assert_eq!(manifest["outputs"][0], "from_file.csv");
}

#[test]
fn unknown_config_key_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("run.toml"), "[bounds]\ntypo_key = 1\n").unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "bounds",
            "--config",
            "run.toml",
            "--model",
            "dcgf",
            "--lambda-list",
            "1e-2",
            "--out",
            "b.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("error[usage]"));
}

#[test]
fn simulate_csv_has_contract_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "simulate",
            "--model",
            "dcgf",
            "--dt",
            "0.05",
            "--t-max",
            "10",
            "--ensemble",
            "8",
            "--box",
            "32",
            "--grid",
            "32",
            "--output-times",
            "1,5,10",
            "--seed",
            "2",
            "--out",
            "msd.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = std::fs::read_to_string(tmp.path().join("msd.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,E_t,stderr,E1_t,E2_t");
    assert_eq!(lines.len(), 4, "header plus one row per output time");
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 1.0);
    assert!(first[1] > 0.0 && first[2] > 0.0);
    assert!((first[3] + first[4] - first[1]).abs() < 1e-12 * first[1]);
}

#[test]
fn bounds_csv_has_contract_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "bounds",
            "--model",
            "srbp",
            "--lambda-list",
            "1e-2,1e-3",
            "--tol",
            "1e-7",
            "--out",
            "b.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = std::fs::read_to_string(tmp.path().join("b.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "lambda,lower_bound,upper_bound,j1,j2,j3_schwarz,j3_near_sup,err_estimate"
    );
    assert_eq!(lines.len(), 3);
    for (row, lambda) in lines[1..].iter().zip([1e-2, 1e-3]) {
        let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v[0], lambda, "rows follow input order");
        let (lower, upper) = (v[1], v[2]);
        assert!(lower > 0.0 && upper > lower, "bounds bracket: {row}");
        // The self-repelling bound is the maximized combination
        // 2 J1 - J2 - J31 - J32', and the J columns hold those terms at the
        // maximizer.
        let combo = 2.0 * v[3] - v[4] - v[5] - v[6];
        assert!(
            (combo - lower).abs() < 1e-9 * lower.abs() + 1e-12,
            "combination consistency: {row}"
        );
    }
}

#[test]
fn scaling_report_has_contract_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "simulate",
            "--model",
            "dcgf",
            "--dt",
            "0.05",
            "--t-max",
            "200",
            "--ensemble",
            "12",
            "--box",
            "64",
            "--grid",
            "64",
            "--seed",
            "7",
            "--out",
            "msd.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let out = run_in(
        tmp.path(),
        &[
            "scaling",
            "--input",
            "msd.csv",
            "--lambda-list",
            "0.1,0.05",
            "--fit",
            "--aw-check",
            "2",
            "iso",
            "--out",
            "report.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap())
            .unwrap();
    assert!(report["gamma_hat"].is_number());
    assert_eq!(report["ci"].as_array().unwrap().len(), 2);
    let laplace = report["laplace"].as_array().unwrap();
    assert_eq!(laplace.len(), 2);
    assert_eq!(laplace[0]["lambda"], 0.1, "laplace rows follow input order");
    assert_eq!(laplace[1]["lambda"], 0.05);
    assert!(laplace[0]["value"].as_f64().unwrap() > 0.0);
    let aw = report["aw_slope"].as_f64().unwrap();
    assert!(aw.abs() < 0.02, "table entry is self-consistent: {aw}");
}

#[test]
fn aw_check_report_matches_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["aw-check", "--d", "2", "--iso", "--out", "aw.json"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("aw.json")).unwrap())
            .unwrap();
    assert_eq!(report["nu"], 0.5);
    assert_eq!(report["gamma"], 0.25);
    assert!(report["slope"].as_f64().unwrap().abs() < 0.02);
    // The anisotropic sibling entry.
    let out = run_in(
        tmp.path(),
        &["aw-check", "--d", "2", "--aniso", "--out", "awa.json"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("awa.json")).unwrap())
            .unwrap();
    assert!((report["gamma"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!(report["slope"].as_f64().unwrap().abs() < 0.02);
}

#[test]
fn sample_env_writes_grid_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "sample-env",
            "--model",
            "scalar_aniso",
            "--box",
            "32",
            "--grid",
            "32",
            "--seed",
            "4",
            "--out",
            "field.csv",
            "--binary",
            "field.bin",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = std::fs::read_to_string(tmp.path().join("field.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,x2,omega1,omega2");
    assert_eq!(lines.len(), 1 + 32 * 32);
    // Component 2 of the scalar model is identically zero.
    for line in &lines[1..] {
        assert!(line.ends_with(",0.0000000000000000e0"), "{line}");
    }
    assert!(tmp.path().join("field.bin").is_file());
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("field.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}
