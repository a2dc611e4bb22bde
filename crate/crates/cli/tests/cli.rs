use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qpredict(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpredict"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn machine(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.extend(["--format", "machine"]);
    let out = qpredict(&full);
    let json = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    });
    (code(&out), json)
}

fn labeled(v: &Value, label: &str) -> f64 {
    v.as_array()
        .unwrap()
        .iter()
        .find(|x| x["label"] == label)
        .unwrap_or_else(|| panic!("no {label}"))["value"]
        .as_f64()
        .unwrap()
}

#[test]
fn epr_shorthand_amplitudes() {
    let (status, r) = machine(&["scenario", "epr", "--a2", "0.3"]);
    assert_eq!(status, 0);
    let p = labeled(&r["analytic"]["observation_probabilities"], "second=-1");
    assert!((p - 0.3).abs() < 1e-12);
    let cond = r["analytic"]["conditional_probabilities"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["given"] == "second=-1" && c["outcome"] == "first=+1")
        .unwrap()["probability"]
        .as_f64()
        .unwrap();
    assert_eq!(cond, 1.0);
}

#[test]
fn symmetric_destructive_double_slit_is_dark() {
    let h = 0.5f64.sqrt().to_string();
    let mh = (-0.5f64.sqrt()).to_string();
    let (status, r) = machine(&[
        "scenario",
        "double-slit",
        "--mode",
        "particle",
        "--t",
        "1",
        "--a-re",
        &h,
        "--b-re",
        &mh,
        "--x-plus",
        "0,0,1",
        "--x-minus",
        "0,0,-1",
        "--x-detect",
        "0,0,0",
    ]);
    assert_eq!(status, 0);
    assert_eq!(r["analytic"]["unconditional_intensity"].as_f64(), Some(0.0));
}

#[test]
fn malformed_amplitudes_exit_2() {
    let out = qpredict(&["scenario", "cat", "--a-re", "0.5", "--b-re", "0.5"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("|a|^2 + |b|^2"), "{err}");
}

#[test]
fn other_invalid_inputs_exit_2() {
    for args in [
        vec!["scenario"],
        vec!["scenario", "cat", "--a2", "1.5"],
        vec!["scenario", "cat", "--observe", "plus"],
        vec!["scenario", "double-slit", "--t", "0"],
        vec!["scenario", "double-slit", "--x-plus", "0,0"],
        vec!["scenario", "cat", "--a2", "0.4", "--a-re", "1"],
        vec!["sample", "cat", "--shots", "0"],
        vec!["verify", "--dims", "1"],
        vec!["verify", "--dims", "17"],
        vec!["bogus"],
    ] {
        assert_eq!(code(&qpredict(&args)), 2, "{args:?}");
    }
}

#[test]
fn config_file_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("scenario.json");
    std::fs::write(
        &cfg_path,
        r#"{"kind": "double-slit", "a": [0.6, 0.0], "b": [0.0, 0.8], "mode": "wave",
            "energy": 2.0, "x_plus": [0.0, 0.0, 1.0], "x_minus": [0.0, 0.0, -2.0], "observe": "plus"}"#,
    )
    .unwrap();
    let (status, first) = machine(&["scenario", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(status, 0);
    let coeffs = &first["analytic"]["conditioned_coefficients"];
    assert_eq!(labeled(coeffs, "plus"), 1.0);
    assert_eq!(labeled(coeffs, "minus"), 0.25);
    assert_eq!(first["analytic"]["observed_intensity"].as_f64(), Some(1.0));

    // The echoed config re-runs to identical analytic values.
    let echo_path = dir.path().join("echo.json");
    std::fs::write(&echo_path, first["config"].to_string()).unwrap();
    let (status, second) = machine(&["scenario", "--config", echo_path.to_str().unwrap()]);
    assert_eq!(status, 0);
    assert_eq!(first["analytic"], second["analytic"]);
    assert_eq!(first["config"], second["config"]);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("epr.json");
    std::fs::write(
        &cfg_path,
        r#"{"kind": "epr", "a": [1.0, 0.0], "b": [0.0, 0.0]}"#,
    )
    .unwrap();
    let (status, r) = machine(&[
        "scenario",
        "--config",
        cfg_path.to_str().unwrap(),
        "--a2",
        "0.3",
    ]);
    assert_eq!(status, 0);
    assert!(
        (labeled(&r["analytic"]["observation_probabilities"], "second=-1") - 0.3).abs() < 1e-12
    );
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    std::fs::write(
        &cfg_path,
        r#"{"kind": "cat", "a": [1.0, 0.0], "b": [0.0, 0.0], "shots": 5}"#,
    )
    .unwrap();
    assert_eq!(
        code(&qpredict(&[
            "scenario",
            "--config",
            cfg_path.to_str().unwrap()
        ])),
        2
    );
    assert_eq!(
        code(&qpredict(&[
            "scenario",
            "--config",
            "/nonexistent/cfg.json"
        ])),
        2
    );
}

#[test]
fn cat_sample_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    let run = |path: &Path| {
        qpredict(&[
            "sample",
            "cat",
            "--a2",
            "0.6",
            "--shots",
            "100000",
            "--seed",
            "42",
            "--out",
            path.to_str().unwrap(),
        ])
    };
    let first = run(&out_a);
    let second = run(&out_b);
    assert_eq!(
        code(&first),
        0,
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    assert_eq!(first.stdout, second.stdout);
    let bytes = std::fs::read(&out_a).unwrap();
    assert_eq!(bytes, std::fs::read(&out_b).unwrap());

    let report: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(report["deviation"]["within_bound"], true);
    let photon = labeled(&report["analytic"]["observation_probabilities"], "photon");
    assert!((photon - 0.4).abs() < 1e-12);
    let certain: Vec<&Value> = report["sample"]["conditionals"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["certain"] == true)
        .collect();
    assert!(!certain.is_empty());
    assert!(certain.iter().all(|c| c["counterexamples"] == 0));
}

#[test]
fn single_shot_sample_is_reported() {
    let (status, r) = machine(&[
        "sample", "epr", "--a2", "0.3", "--shots", "1", "--seed", "9",
    ]);
    assert_eq!(status, 0);
    assert_eq!(r["sample"]["shots"], 1);
    assert_eq!(r["deviation"]["within_bound"], true);
}

#[test]
fn verify_default_passes() {
    let out = qpredict(&["verify"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("result: PASS"));
}

#[test]
fn verify_zero_tolerance_fails_deterministically() {
    let args = ["verify", "--tol", "0", "--trials", "20", "--seed", "3"];
    let first = qpredict(&args);
    let second = qpredict(&args);
    assert_eq!(code(&first), 1);
    assert_eq!(first.stdout, second.stdout);
    let transcript = String::from_utf8_lossy(&first.stdout);
    assert!(
        transcript.contains("first failing property:"),
        "{transcript}"
    );
}

#[test]
fn table_output_names_the_result() {
    let out = qpredict(&["scenario", "cat", "--a2", "0.6"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("P(atom-ground | photon)"));
    assert!(text.contains("result: PASS"));
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&qpredict(&["--help"])), 0);
    assert_eq!(code(&qpredict(&["sample", "--help"])), 0);
}
