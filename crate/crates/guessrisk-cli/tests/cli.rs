//! End-to-end tests of the binary: known outputs, exit codes, determinism,
//! and strategy JSON round-trips.

use std::path::PathBuf;
use std::process::{Command, Output};

use guessrisk::dist::Pmf;
use guessrisk::entropy::smooth_renyi_entropy;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_guessrisk"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("guessrisk-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn entropy_reports_smooth_value_and_boundary() {
    let out = run(&[
        "entropy",
        "--dist",
        r#"{"p":[0.5,0.3,0.2]}"#,
        "--alpha",
        "0.5",
        "--eps",
        "0.2",
        "--oracle",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let smooth = v["smooth"].as_f64().unwrap();
    assert!((smooth - 0.6549823315947212).abs() < 1e-9);
    assert!((smooth - 0.6547).abs() < 1e-3);
    assert_eq!(v["i_star"].as_u64(), Some(2));
    assert!(v["oracle_delta"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn entropy_at_eps_zero_prints_equal_fields() {
    let out = run(&[
        "entropy",
        "--dist",
        r#"{"p":[0.5,0.3,0.2]}"#,
        "--alpha",
        "0.5",
        "--eps",
        "0",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["renyi"], v["smooth"]);
    assert_eq!(v["i_star"].as_u64(), Some(3));
}

#[test]
fn entropy_rejects_order_one_with_exit_2() {
    let out = run(&[
        "entropy",
        "--dist",
        r#"{"p":[0.5,0.5]}"#,
        "--alpha",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn build_emits_calibrated_stop_probabilities() {
    let out = run(&[
        "strategy",
        "build",
        "--dist",
        r#"{"p":[0.4,0.3,0.2,0.1]}"#,
        "--D",
        "1",
        "--eps",
        "0.15",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let pis = v["strategy"]["stop_probs"].as_array().unwrap();
    assert_eq!(pis[0].as_f64(), Some(0.0));
    assert!((pis[1].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(pis[2].as_f64(), Some(1.0));
    assert!((v["evaluation"]["error_prob"].as_f64().unwrap() - 0.15).abs() < 1e-9);
    assert!((v["evaluation"]["expected_cost"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn eval_identity_strategy_gives_classical_guesswork_mean() {
    let path = temp_path("identity.json");
    std::fs::write(
        &path,
        r#"{"reconstructions":[[1,0,0],[0,1,0],[0,0,1]],"stop_probs":[0,0,0]}"#,
    )
    .unwrap();
    let out = run(&[
        "strategy",
        "eval",
        "--dist",
        r#"{"p":[0.5,0.3,0.2]}"#,
        "--strategy",
        path.to_str().unwrap(),
        "--D",
        "0",
        "--rho",
        "1",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let mean = 0.5 + 0.3 * 2.0 + 0.2 * 3.0;
    assert!((v["expected_cost"].as_f64().unwrap() - mean).abs() < 1e-12);
    assert_eq!(v["error_prob"].as_f64(), Some(0.0));
    std::fs::remove_file(&path).ok();
}

#[test]
fn simulate_same_seed_gives_identical_bytes() {
    let strategy = temp_path("sim-strategy.json");
    let build = run(&[
        "strategy",
        "build",
        "--dist",
        r#"{"p":[0.4,0.3,0.2,0.1]}"#,
        "--D",
        "1",
        "--eps",
        "0.1",
        "--out",
        strategy.to_str().unwrap(),
    ]);
    assert!(build.status.success());
    let args = [
        "strategy",
        "simulate",
        "--dist",
        r#"{"p":[0.4,0.3,0.2,0.1]}"#,
        "--strategy",
        strategy.to_str().unwrap(),
        "--D",
        "1",
        "--rho",
        "1",
        "--trials",
        "20000",
        "--seed",
        "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = bin()
        .args(args)
        .arg("--format")
        .arg("csv")
        .output()
        .unwrap();
    assert!(stdout_str(&c).starts_with("trials,"));
    std::fs::remove_file(&strategy).ok();
}

#[test]
fn strategy_json_round_trip_reproduces_numbers() {
    let report_path = temp_path("build-report.json");
    let build = run(&[
        "strategy",
        "build",
        "--dist",
        r#"{"p":[0.35,0.3,0.2,0.15]}"#,
        "--D",
        "1",
        "--eps",
        "0.2",
        "--rho",
        "2",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(build.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();

    // evaluating the emitted strategy file reproduces identical numbers
    let eval = run(&[
        "strategy",
        "eval",
        "--dist",
        r#"{"p":[0.35,0.3,0.2,0.15]}"#,
        "--strategy",
        report_path.to_str().unwrap(),
        "--D",
        "1",
        "--rho",
        "2",
    ]);
    assert!(eval.status.success());
    let evaluation: serde_json::Value = serde_json::from_str(&stdout_str(&eval)).unwrap();
    assert_eq!(report["evaluation"], evaluation);
    std::fs::remove_file(&report_path).ok();
}

#[test]
fn verify_single_row_matches_known_values() {
    let out = run(&[
        "verify",
        "--dist",
        r#"{"p":[0.25,0.25,0.25,0.25]}"#,
        "--d-grid",
        "1",
        "--rho-grid",
        "1",
        "--eps-grid",
        "0",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert!((fields[5].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-9); // lower
    assert_eq!(fields[6], "1.5"); // c_star
    assert_eq!(fields[7], "1.5"); // constructed
    assert_eq!(fields[8], "5"); // upper
    assert_eq!(fields[9], "pass");
}

#[test]
fn verify_default_sweep_passes() {
    let out = run(&["verify", "--instances", "40", "--seed", "11"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert_eq!(text.lines().count(), 41);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",pass")));
}

#[test]
fn verify_rejects_eps_one_with_exit_2() {
    let out = run(&[
        "verify",
        "--dist",
        r#"{"p":[0.5,0.5]}"#,
        "--eps-grid",
        "0,1.0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // extreme-but-valid levels are allowed
    let ok = run(&[
        "verify",
        "--dist",
        r#"{"p":[0.5,0.5]}"#,
        "--d-grid",
        "0",
        "--rho-grid",
        "1",
        "--eps-grid",
        "0.999",
    ]);
    assert!(ok.status.success());
}

#[test]
fn asymptotics_first_row_matches_single_letter_entropy() {
    let out = run(&[
        "asymptotics",
        "--dist",
        r#"{"p":[0.75,0.25]}"#,
        "--rho",
        "2",
        "--eps",
        "0.1",
        "--n-list",
        "1,8",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let first = text.lines().nth(1).unwrap();
    let exact: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
    let p = Pmf::from_weights(&[0.75, 0.25]).unwrap();
    let single = smooth_renyi_entropy(&p, 1.0 / 3.0, 0.1).unwrap();
    assert!((exact - single).abs() < 1e-9);
}

#[test]
fn asymptotics_rejects_zero_varentropy_naming_the_hypothesis() {
    let out = run(&[
        "asymptotics",
        "--dist",
        r#"{"p":[0.5,0.5]}"#,
        "--alpha",
        "0.5",
        "--eps",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("V(X) > 0"), "stderr: {stderr}");
}

#[test]
fn atom_cap_env_var_turns_into_resource_exit() {
    let out = bin()
        .args([
            "asymptotics",
            "--dist",
            r#"{"p":[0.75,0.25]}"#,
            "--alpha",
            "0.4",
            "--eps",
            "0.1",
            "--n-list",
            "512",
        ])
        .env("GUESSRISK_ATOM_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}
