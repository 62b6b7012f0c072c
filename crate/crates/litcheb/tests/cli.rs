//! End-to-end checks of the command-line binary against the bundled
//! fixture: exit codes, output files, and manifest contents.

use std::path::Path;
use std::process::Command;

fn data_dir() -> String {
    format!("{}/data", env!("CARGO_MANIFEST_DIR"))
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let data = data_dir();
    let body = format!(
        "[files]\n\
         basis = {data}/sd_shell_basis.txt\n\
         monomials = {data}/sd_fixture_monomials.txt\n\
         source = {data}/omega_source.txt\n\
         [system]\na = 3\n\
         [moments]\nk_max = 1600\n\
         [spectrum]\nsigma_i = 0.1\nsigma_r_min = -17.6\nsigma_r_max = -13.4\nsigma_r_step = 0.04\n\
         [threshold]\nsigma_r_min = -14.2\nsigma_r_max = -12.2\n\
         [response]\nmodel_max = -11.1\nfit_sigma_i = 0.068\nfit_step = 0.02\nbeta = 0.3\n\
         [output]\ndir = out\n\
         {extra}"
    );
    let path = dir.join("run.conf");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(config: &Path, subcommand: &str) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_litcheb"))
        .arg("--config")
        .arg(config)
        .arg(subcommand)
        .output()
        .unwrap()
}

#[test]
fn validate_passes_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = run(&config, "validate");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("all checks passed"), "{stdout}");
    assert!(!stdout.contains("FAIL"), "{stdout}");
}

#[test]
fn spectrum_writes_level_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = run(&config, "spectrum");
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    assert!(csv.starts_with("energy,2J,parity\n"));
    assert_eq!(csv.lines().count(), 5, "four levels plus header: {csv}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "spectrum");
    assert!(manifest["config_echo"].as_str().unwrap().contains("[files]"));
}

#[test]
fn response_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = run(&config, "response");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("round-trip"), "{stdout}");
    for file in ["li_curve.csv", "response.csv", "reconstruction.csv", "bound_amplitudes.csv"] {
        assert!(dir.path().join("out").join(file).is_file(), "{file} missing");
    }
}

#[test]
fn moments_schema_and_determinism_under_noise() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[moments]\nsource = walk+noise\nk_max = 40\nshots = 10000\nseed = 5\n",
    );
    assert!(run(&config, "moments").status.success());
    let first = std::fs::read_to_string(dir.path().join("out/moments.json")).unwrap();
    assert!(run(&config, "moments").status.success());
    let second = std::fs::read_to_string(dir.path().join("out/moments.json")).unwrap();
    assert_eq!(first, second, "same seed must reproduce the same file");
    let parsed: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(parsed["shots"], 10000);
    assert_eq!(parsed["seed"], 5);
}

#[test]
fn missing_input_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let body = std::fs::read_to_string(&config)
        .unwrap()
        .replace("sd_fixture_monomials.txt", "absent_monomials.txt");
    std::fs::write(&config, body).unwrap();
    let out = run(&config, "spectrum");
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("absent_monomials.txt"), "{stderr}");
}

#[test]
fn zero_particles_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[system]\na = 0\n");
    let out = run(&config, "spectrum");
    assert_eq!(out.status.code(), Some(2));
}
