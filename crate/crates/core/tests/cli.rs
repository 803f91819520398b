//! End-to-end runs of the binary on a coarse mesh.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_twisted-trace");

const SMALL: &str = r#"
l_max = 4.5
mesh_level = 2
eigen_count = 15
representation = { character = [[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]] }
test_functions = [{ family = "mollifier", T = 4.0, k = 3 }]
"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("exp.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(BIN)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn example_config_parses() {
    let out = Command::new(BIN).arg("example-config").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    twisted_trace::workbench::ExperimentConfig::parse(&text).unwrap();
}

#[test]
fn enumerate_then_geomside_without_recompute() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), SMALL, &["geomside", "--no-compute"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("IncompleteLengthSpectrum"));
    assert!(run(dir.path(), SMALL, &["enumerate"]).status.success());
    let csv = std::fs::read(dir.path().join("out/length_spectrum.csv")).unwrap();
    let again = run(dir.path(), SMALL, &["enumerate"]);
    assert!(String::from_utf8_lossy(&again.stdout).contains("from cache"));
    assert_eq!(std::fs::read(dir.path().join("out/length_spectrum.csv")).unwrap(), csv);
    assert!(run(dir.path(), SMALL, &["geomside", "--no-compute"]).status.success());
}

#[test]
fn spectrum_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), SMALL, &["--threads", "1", "spectrum"]).status.success());
    let one = std::fs::read(dir.path().join("out/spectrum.json")).unwrap();
    assert!(run(dir.path(), SMALL, &["--threads", "3", "spectrum"]).status.success());
    assert_eq!(std::fs::read(dir.path().join("out/spectrum.json")).unwrap(), one);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // residual above threshold on a very coarse mesh
    let strict = SMALL.replace("l_max = 4.5", "l_max = 4.5\nresidual_threshold = 1e-6");
    let out = run(dir.path(), &strict, &["verify"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    // validation: cutoff out of range
    let bad = SMALL.replace("l_max = 4.5", "l_max = 50.0");
    assert_eq!(run(dir.path(), &bad, &["enumerate"]).status.code(), Some(2));
    // numerical: strict truncation on a spectrum that is visibly cut off
    let trunc = SMALL.replace("l_max = 4.5", "l_max = 4.5\nstrict_truncation = true");
    assert_eq!(run(dir.path(), &trunc, &["--refresh", "verify"]).status.code(), Some(3));
    // unknown subcommand is a usage error
    assert_eq!(Command::new(BIN).arg("frobnicate").output().unwrap().status.code(), Some(2));
}

#[test]
fn verify_passes_and_weyl_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
l_max = 6.0
mesh_level = 3
eigen_count = 63
representation = { character = [[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]] }
test_functions = [{ family = "mollifier", T = 4.0, k = 3 }, { family = "mollifier", T = 5.5, k = 2 }]
"#;
    let out = run(dir.path(), cfg, &["verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/trace_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["spectrum_real"], true);
    assert_eq!(report["entries"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("out/trace_report.txt").exists());

    let out = run(dir.path(), cfg, &["weyl"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/weyl.csv")).unwrap();
    assert!(csv.starts_with("r,count,prediction,ratio\n"));
    assert_eq!(csv.lines().count(), 13);
}
