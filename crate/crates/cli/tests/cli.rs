use std::path::Path;
use std::process::{Command, Output};

use corrsamp::io::read_matrices_csv;
use corrsamp::special::{log_gamma, log_multivariate_gamma};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrsamp"))
        .args(args)
        .output()
        .expect("spawn corrsamp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn sample_two_by_two_has_one_column() {
    let o = run(&[
        "sample", "--method", "rw", "--dim", "2", "--dof", "3", "--n", "3", "--seed", "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sample_id,rho_2_1");
    assert_eq!(lines.len(), 4);
    for (i, l) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = l.split(',').collect();
        assert_eq!(fields.len(), 2);
        assert_eq!(fields[0], i.to_string());
        assert!(fields[1].parse::<f64>().unwrap().abs() < 1.0);
    }
}

#[test]
fn sample_is_deterministic_and_files_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = run(&[
            "sample",
            "--method",
            "riw",
            "-T",
            "4",
            "-m",
            "5.5",
            "--n",
            "20",
            "--seed",
            "3",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(x, y);
    assert_eq!(read_matrices_csv(x.as_slice(), Some(4)).unwrap().len(), 20);
}

#[test]
fn eta_and_dof_flags_agree() {
    let by_eta = run(&[
        "sample", "--dim", "5", "--eta", "1", "--n", "10", "--seed", "5", "--method", "onion",
    ]);
    let by_dof = run(&[
        "sample", "--dim", "5", "--dof", "6", "--n", "10", "--seed", "5", "--method", "onion",
    ]);
    assert_eq!(by_eta.status.code(), Some(0));
    assert_eq!(by_eta.stdout, by_dof.stdout);
    let by_eta = run(&[
        "sample", "--dim", "5", "--eta", "1", "--n", "10", "--seed", "5", "--format", "json",
    ]);
    let by_dof = run(&[
        "sample", "--dim", "5", "--dof", "6", "--n", "10", "--seed", "5", "--format", "json",
    ]);
    assert_eq!(by_eta.stdout, by_dof.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&by_eta.stdout).unwrap();
    assert_eq!(doc["method"], "rw");
    assert_eq!(doc["eta"], 1.0);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 10);
}

#[test]
fn parameter_errors_exit_two() {
    for args in [
        vec!["sample", "--dim", "3", "--dof", "1"],
        vec!["sample", "--dim", "3", "--dof", "4", "--eta", "1"],
        vec!["sample", "--dim", "3"],
        vec!["sample", "--dim", "3", "--eta", "-1"],
        vec!["sample", "--dim", "3", "--dof", "4", "--n", "0"],
        vec!["sample", "--dim", "3", "--dof", "4", "--method", "gibbs"],
        vec!["validate", "nonsense"],
        vec!["bench", "--dims", "", "--n", "1"],
        vec!["frobnicate"],
    ] {
        let o = run(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn io_errors_exit_three() {
    let o = run(&["sample", "--dim", "3", "--dof", "4", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["density", "/nonexistent-dir/in.csv", "--dof", "4"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn density_of_identity_is_the_rw_constant() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "id.csv", "sample_id,rho_2_1,rho_3_1,rho_3_2\n0,0,0,0\n");
    let o = run(&["density", &input, "--dof", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let value: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let want = 3.0 * log_gamma(2.5).unwrap() - log_multivariate_gamma(3, 2.5).unwrap();
    assert!((value - want).abs() < 1e-12, "{value} vs {want}");
}

#[test]
fn density_check_theorem_on_sampled_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let o = run(&[
        "sample",
        "--method",
        "onion",
        "-T",
        "6",
        "--eta",
        "2",
        "--n",
        "50",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&[
        "density",
        path.to_str().unwrap(),
        "--eta",
        "2",
        "--check-theorem",
        "--method",
        "lkj",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "sample_id,log_density,theorem_gap");
    assert_eq!(text.lines().count(), 51);
    for l in text.lines().skip(1) {
        let gap: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        assert!(gap < 1e-8, "{l}");
    }
}

#[test]
fn density_rejects_bad_rows_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "sample_id,rho_2_1\n0,0.2\n1,1.3\n");
    let o = run(&["density", &bad, "--dof", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");

    let malformed = write(dir.path(), "m.csv", "sample_id,rho_2_1\n0,abc\n");
    let o = run(&["density", &malformed, "--dof", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2, column 2"));

    let wrong_dim = write(dir.path(), "w.csv", "sample_id,rho_2_1\n0,0.1\n");
    let o = run(&["density", &wrong_dim, "--dof", "5", "--dim", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_all_passes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = run(&["validate", "all", "--seed", "1", "--out", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["seed"], 1);
    assert!(doc["checks"].as_array().unwrap().len() > 50);
}

#[test]
fn validate_perturbations_fail() {
    let o = run(&["validate", "theorem", "--seed", "1", "--perturb-constant", "1e-3"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&[
        "validate",
        "theorem",
        "--seed",
        "1",
        "--perturb-eta",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["passed"], false);
}

#[test]
fn bench_json_schema() {
    let o = run(&[
        "bench",
        "--dims",
        "3,6",
        "--n",
        "1",
        "--repetitions",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let obj = doc.as_object().unwrap();
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["environment", "rows", "seed"]);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    for r in rows {
        assert!(r["wall_seconds"].as_f64().unwrap() > 0.0);
        assert!(r["ratio_to_onion"].as_f64().unwrap() > 0.0);
        assert_eq!(r["n"], 1);
    }
}

#[test]
fn bench_csv_and_method_filter() {
    let o = run(&[
        "bench",
        "--dims",
        "4",
        "--n",
        "10",
        "--repetitions",
        "1",
        "--method",
        "rw,onion",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(
        text.lines().next().unwrap(),
        "dim,method,n,wall_seconds,seconds_per_matrix,ratio_to_onion"
    );
    assert_eq!(text.lines().count(), 3);
}
