use std::path::Path;

use besovlab_cli::config::ExperimentConfig;
use besovlab_cli::{main_with, EXIT_ERROR, EXIT_PASS};

fn besovlab(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = main_with(std::iter::once("besovlab").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn printed_defaults_round_trip() {
    let (code, out, _) = besovlab(&["print-defaults", "--kind", "sandwich"]);
    assert_eq!(code, EXIT_PASS);
    let cfg = ExperimentConfig::from_toml(&out).unwrap();
    assert_eq!(cfg.kind.name(), "sandwich");
    assert_eq!(cfg.to_toml(), out);
}

#[test]
fn out_of_range_exponent_is_rejected_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"jump_chain\"\n[params]\nr = 1.5\n");
    let (code, _, err) = besovlab(&["experiment", "--config", &cfg]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("params.r"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[budget]\nmax_evals = 10\n");
    let (code, _, err) = besovlab(&["seminorm", "--functional", "jump-variation", "--config", &cfg]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("max_evals"), "{err}");
}

#[test]
fn seminorm_prints_one_json_record() {
    let (code, out, _) = besovlab(&["seminorm", "--functional", "jump-variation"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["functional"], "jump_variation");
    assert_eq!(v["value"].as_f64(), Some(2.0));
    assert_eq!(v["error"].as_f64(), Some(0.0));

    let (code, out, _) = besovlab(&["seminorm", "--functional", "directional-variation", "--epsilon", "1e-3"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-2, "{out}");
}

#[test]
fn epsilon_dependent_functionals_need_an_epsilon() {
    let (code, _, err) = besovlab(&["seminorm", "--functional", "spherical-variation"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("--epsilon"), "{err}");
    let (code, _, _) = besovlab(&["sweep", "--functional", "gagliardo-seminorm"]);
    assert_eq!(code, EXIT_ERROR);
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let (code, _, _) = besovlab(&["sweep", "--functional", "besov-constant", "--out", &out, "--threads", "1"]);
    assert_eq!(code, EXIT_PASS);
    let text = std::fs::read_to_string(dir.path().join("sweep_besov_constant.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epsilon,value,error,flag");
    assert_eq!(lines.len(), 11);
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")), "{text}");
}

#[test]
fn constants_and_kernel_check_print_tables() {
    let (code, out, _) = besovlab(&["constants", "--dim", "2"]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.starts_with("N = 2\n"), "{out}");
    assert!(out.contains("moment1"));

    let (code, out, _) = besovlab(&["kernel-check"]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.starts_with("kernel,dim,epsilon,mass,mass_err,tail_delta,moment_alpha\n"), "{out}");
}

#[test]
fn experiment_writes_report_and_reports_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = write_config(dir.path(), "kind = \"interpolation\"\n[params]\nq = 2.0\np = 3.0\n");
    let (code, stdout, stderr) = besovlab(&["experiment", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code, EXIT_PASS, "{stderr}");
    assert_eq!(stdout.trim(), out.join("report.json").to_str().unwrap());
    assert!(stderr.contains("interpolation_equality"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "interpolation");
    assert_eq!(report["seed"], 3);
    assert_eq!(report["pass"], true);
}
