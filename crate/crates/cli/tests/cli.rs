use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn ellmirror(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellmirror")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ellmirror-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn mirror_n2_four_identities() {
    let out = ellmirror(&["verify", "--n", "2", "--points", "1", "--suites", "mirror"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema"], 1);
    let suite = &r["suites"][0];
    assert_eq!(suite["name"], "mirror");
    assert_eq!(suite["checks"].as_array().unwrap().len(), 4);
    assert!(suite["max_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn mirror_n3_thirty_six_identities() {
    let out = ellmirror(&["verify", "--n", "3", "--points", "1", "--suites", "mirror"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let checks = r["suites"][0]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 36);
    for label in ["312,123", "321,123", "321,213"] {
        assert!(checks.iter().any(|c| c["label"] == label), "{label}");
    }
}

#[test]
fn matrix_n1_is_one_from_every_builder() {
    let out = ellmirror(&["matrix", "--n", "1", "--points", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let matrices = r["matrices"].as_array().unwrap();
    let provenance: Vec<&str> = matrices.iter().map(|m| m["provenance"].as_str().unwrap()).collect();
    assert_eq!(provenance, ["direct", "r_recursion", "dual_recursion"]);
    for m in matrices {
        assert_eq!(m["entries"], serde_json::json!([[[1.0, 0.0]]]));
    }
    assert_eq!(r["deviations"].as_array().unwrap().len(), 3);
}

#[test]
fn matrix_with_sigma_and_csv() {
    let csv = scratch("a.csv");
    let out = ellmirror(&["matrix", "--n", "3", "--points", "1", "--sigma", "2,3,1", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["matrices"][0]["sigma"], serde_json::json!([2, 3, 1]));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "I\\J,123,132,213,231,312,321");
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn report_to_file_is_identical_to_stdout() {
    let path = scratch("r.json");
    let args = ["verify", "--n", "3", "--points", "2", "--seed", "11", "--suites", "diagonal,pprop"];
    let to_stdout = ellmirror(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let to_file = ellmirror(&with_out);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), to_stdout.stdout);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["verify", "--n", "3", "--points", "2", "--seed", "5"];
    let a = ellmirror(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_ellmirror")).args(args).env("RAYON_NUM_THREADS", "1").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = ellmirror(&["verify", "--n", "3", "--points", "2", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn weights_from_input_file() {
    let input = scratch("point.json");
    let point = serde_json::json!({
        "point": {
            "log_z": [[0.1, 0.1], [-0.3, 0.9]],
            "log_mu": [[0.2, 0.5], [-0.6, 2.1]],
            "log_h": [0.45, -0.8]
        },
        "t": { "levels": [[[0.7, -0.2]]] }
    });
    std::fs::write(&input, point.to_string()).unwrap();
    let out = ellmirror(&["weights", "--n", "2", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["weights"].as_array().unwrap().len(), 2);
    assert_eq!(r["weights"][1]["perm"], serde_json::json!([2, 1]));
}

#[test]
fn configuration_errors_exit_2() {
    for args in [
        vec!["verify", "--n", "6"],
        vec!["verify", "--n", "0"],
        vec!["verify", "--q", "1.5"],
        vec!["verify", "--q", "0.2,0.3,0.4"],
        vec!["verify", "--tol", "-1"],
        vec!["verify", "--trunc", "many"],
        vec!["verify", "--suites", "mirror,nope"],
        vec!["matrix", "--n", "3", "--sigma", "1,1,2"],
        vec!["matrix", "--n", "3", "--sigma", "1,2"],
        vec!["weights", "--n", "2", "--input", "/nonexistent/point.json"],
        vec!["frobnicate"],
    ] {
        let out = ellmirror(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn large_n_needs_override() {
    let out = ellmirror(&["verify", "--n", "6", "--allow-large-n", "--suites", "theta", "--points", "0"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn failing_check_exits_1() {
    // a tolerance below rounding cannot be met
    let out = ellmirror(&["verify", "--n", "3", "--points", "1", "--suites", "mirror", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["passed"], false);
}

#[test]
fn complex_q_and_fixed_trunc() {
    let out = ellmirror(&["verify", "--n", "2", "--points", "1", "--q", "0.1,0.2", "--trunc", "60", "--suites", "theta,mirror"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["context"]["trunc"], 60);
    assert_eq!(r["context"]["q"], serde_json::json!([0.1, 0.2]));
}
