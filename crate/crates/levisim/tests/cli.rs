//! End-to-end checks of the installed binary: exit codes, report shapes,
//! config echoes, sidecar manifests, and determinism across thread counts.

use std::path::PathBuf;
use std::process::{Command, Output};

use levisim::params::{parse_config, ExperimentConfig};
use serde_json::Value;

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/silica40.toml");

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levisim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("levisim-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn help_and_version_exit_zero() {
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("levisim"));
    let version = run(&["--version"]);
    assert_eq!(version.status.code(), Some(0));
}

#[test]
fn unknown_flag_fails_with_usage() {
    let out = run(&["derive", "--config", FIXTURE, "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_config_is_a_validation_error() {
    let out = run(&["derive", "--config", "/nonexistent/levisim.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn derive_reports_cavity_linewidth_and_echoes_config() {
    let out = run(&["derive", "--config", FIXTURE]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);

    let kappa_2pi = report["kappa_over_2pi"].as_f64().unwrap();
    assert!(
        (kappa_2pi / 2.885e8 - 1.0).abs() < 0.10,
        "kappa/2pi = {kappa_2pi:e}"
    );

    // The echoed config deserializes back to exactly the parsed input.
    let echoed: ExperimentConfig = serde_json::from_value(report["config"].clone()).unwrap();
    let expected = parse_config(&std::fs::read_to_string(FIXTURE).unwrap()).unwrap();
    assert_eq!(echoed, expected);

    let sha = report["manifest"]["config_sha256"].as_str().unwrap();
    assert_eq!(sha.len(), 64);
    assert!(sha.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(report["manifest"]["tool"], "levisim");
    assert!(report["manifest"]["interpretation"]["trap_frequency"].is_string());
}

#[test]
fn rates_report_pairs_every_value_with_its_formula() {
    let out = run(&["rates", "--config", FIXTURE]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    for section in ["coupling", "cavity", "localization"] {
        let map = report[section].as_object().unwrap();
        assert!(!map.is_empty());
        for (name, entry) in map {
            let value = entry["value"].as_f64().unwrap();
            assert!(value.is_finite(), "{section}.{name} = {value}");
            assert!(
                !entry["formula"].as_str().unwrap().is_empty(),
                "{section}.{name} lacks a formula"
            );
        }
    }
    let lambda_sd = report["localization"]["lambda_sd"]["value"].as_f64().unwrap();
    assert!(
        (lambda_sd / 8.742e15 - 1.0).abs() < 0.10,
        "lambda_sd = {lambda_sd:e}"
    );
    assert!(report["cooling"]["resolved_sideband"].is_boolean());
}

#[test]
fn rates_rejects_nonpositive_overrides() {
    let out = run(&["rates", "--config", FIXTURE, "--nph", "-3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn expand_emits_the_requested_rows() {
    let out = run(&["expand", "--config", FIXTURE, "--t", "3.3e-3", "--points", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,vx,vp,cxp,xi_l");
    assert_eq!(lines.len(), 12);
    let mut last_vx = 0.0;
    for row in &lines[1..] {
        let fields: Vec<f64> = row.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 5);
        assert!(fields.iter().all(|v| v.is_finite()));
        assert!(fields[1] >= last_vx, "vx must grow during expansion");
        last_vx = fields[1];
    }
    let final_t: f64 = lines[11].split(',').next().unwrap().parse().unwrap();
    assert!((final_t / 3.3e-3 - 1.0).abs() < 1e-12);
}

#[test]
fn scan_is_deterministic_across_thread_counts() {
    let one = run(&["scan", "--config", FIXTURE, "--points", "12", "--jobs", "1"]);
    let four = run(&["scan", "--config", FIXTURE, "--points", "12", "--jobs", "4"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(four.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout, "scan must be byte-deterministic");

    let env = Command::new(env!("CARGO_BIN_EXE_levisim"))
        .args(["scan", "--config", FIXTURE, "--points", "12"])
        .env("LEVISIM_JOBS", "3")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(0));
    assert_eq!(env.stdout, one.stdout);

    let text = String::from_utf8(one.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "D,d_min,d_max_a,d_max_b,d_max_c,d_max_d,d_max_csl,operational,n_ph,t1,t2,chi,error"
    );
    assert_eq!(lines.len(), 13);
}

#[test]
fn simulate_rejects_out_of_window_slit_without_force() {
    let refused = run(&["simulate", "--config", FIXTURE, "--d-over-D", "4.0"]);
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("--force"));

    let forced = run(&["simulate", "--config", FIXTURE, "--d-over-D", "4.0", "--force"]);
    assert_eq!(forced.status.code(), Some(0), "{}", String::from_utf8_lossy(&forced.stderr));
}

#[test]
fn out_flag_writes_csv_with_manifest_sidecar() {
    let dir = temp_dir("out");
    let csv_path = dir.join("pattern.csv");
    let out = run(&[
        "simulate",
        "--config",
        FIXTURE,
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x,q_ideal,q_standard,q_csl");
    assert!(lines.count() >= 1024);

    let sidecar = std::fs::read_to_string(dir.join("pattern.csv.manifest.json")).unwrap();
    let manifest: Value = serde_json::from_str(&sidecar).unwrap();
    assert_eq!(manifest["manifest"]["tool"], "levisim");
    assert!(manifest["fringes"]["standard"]["visibility"].as_f64().unwrap() > 0.0);

    // The same report also lands on stdout.
    let report = stdout_json(&out);
    assert_eq!(report["manifest"]["config_sha256"], manifest["manifest"]["config_sha256"]);

    let _ = std::fs::remove_dir_all(&dir);
}
