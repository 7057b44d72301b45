use std::path::Path;
use std::process::Command as Process;

use andersonlab::output::sha256_hex;
use andersonlab::{run_command, Command, ExperimentConfig, RunManifest};

const SMALL: &str = r#"
[model]
dimension = 1
half_side = 60
hopping = "laplacian_offdiag"
coupling = 3.0

[distribution]
kind = "uniform"
a = -0.5
b = 0.5

[window]
energy = 0.0
interval = [-2.0, 2.0]

[run]
realizations = 150
seed = 99

[partition]
mode = "scaled"
blocks_per_side = 3
interior_margin = 2

[localization]
window = [-0.2, 0.2]
distances = [2, 4, 6, 8, 10]
real_points = 2
imag_parts = [0.1, 0.01]

[verify]
wegner_realizations = 150
minami_realizations = 1000
green_realizations = 20
identity_samples = 4
"#;

fn config(out: &Path) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SMALL)
        .unwrap()
        .with_overrides(None, Some(out.to_path_buf()), Some(2))
        .unwrap()
}

fn read_manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn counts_outputs_and_checksums() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_command(Command::Counts, &config(dir.path())).unwrap();
    for name in ["counts.csv", "pmf.csv", "report.json"] {
        let bytes = std::fs::read(dir.path().join(name)).unwrap();
        assert_eq!(m.outputs[name], sha256_hex(&bytes), "{name}");
        assert_eq!(*bytes.last().unwrap(), b'\n');
    }
    let counts = std::fs::read_to_string(dir.path().join("counts.csv")).unwrap();
    let mut lines = counts.lines();
    assert_eq!(lines.next(), Some("half_side,realization,xi"));
    assert_eq!(lines.count(), 150);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["entries"][0]["fit"]["tv_vs_hat"].as_f64().unwrap() <= 1.0);
    assert_eq!(read_manifest(dir.path()), m);
}

#[test]
fn manifest_echo_recreates_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    run_command(Command::Counts, &config(&first)).unwrap();
    let echoed = read_manifest(&first).config;
    let second = dir.path().join("second");
    let cfg = echoed.with_overrides(None, Some(second.clone()), Some(1)).unwrap();
    let m2 = run_command(Command::Counts, &cfg).unwrap();
    assert_eq!(
        std::fs::read(first.join("counts.csv")).unwrap(),
        std::fs::read(second.join("counts.csv")).unwrap()
    );
    assert_eq!(read_manifest(&first).config_sha256, m2.config_sha256);
}

#[test]
fn json_key_order_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_command(Command::Compare, &config(&a)).unwrap();
    run_command(Command::Compare, &config(&b)).unwrap();
    assert_eq!(
        std::fs::read(a.join("report.json")).unwrap(),
        std::fs::read(b.join("report.json")).unwrap()
    );
    let text = std::fs::read_to_string(a.join("manifest.json")).unwrap();
    let keys: Vec<&str> = ["\"subcommand\"", "\"version\"", "\"config\"", "\"config_sha256\"", "\"outputs\""]
        .into_iter()
        .collect();
    let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn verify_passes_on_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    run_command(Command::Verify, &config(dir.path())).unwrap();
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("inequalities.json")).unwrap()).unwrap();
    let list = reports.as_array().unwrap();
    assert!(list.len() >= 6);
    for r in list {
        assert_eq!(r["pass"], true, "{r}");
    }
}

#[test]
fn ids_without_hopping_matches_cdf() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace("hopping = \"laplacian_offdiag\"", "hopping = \"none\"")
        .replace("coupling = 3.0", "coupling = 1.0")
        + "\n[ids]\ngrid = [-0.6, 0.6]\npoints = 13\neps_min = 1e-4\neps_max = 0.2\n";
    let cfg = ExperimentConfig::from_toml_str(&text)
        .unwrap()
        .with_overrides(None, Some(dir.path().to_path_buf()), None)
        .unwrap();
    run_command(Command::Ids, &cfg).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("ids.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("energy,ids,stderr,exact"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - v[3]).abs() <= 3.0 * v[2] + 1e-12, "{line}");
    }
    let derivative = std::fs::read_to_string(dir.path().join("derivative.csv")).unwrap();
    assert!(derivative.starts_with("epsilon,ratio\n"));
}

#[test]
fn localize_writes_decay_table() {
    let dir = tempfile::tempdir().unwrap();
    run_command(Command::Localize, &config(dir.path())).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("decay.csv")).unwrap();
    assert!(csv.starts_with("distance,mean_moment,stderr\n"));
    assert_eq!(csv.lines().count(), 6);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["outcome"]["outcome"], "fit");
    assert_eq!(report["z_grid"].as_array().unwrap().len(), 4);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_andersonlab");
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, SMALL).unwrap();
    let out = dir.path().join("out");
    let status = Process::new(exe)
        .args(["counts", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "5", "--workers", "1"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(read_manifest(&out).seed, 5);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, SMALL.replace("coupling = 3.0", "coupling = 0.0")).unwrap();
    let status = Process::new(exe).args(["counts", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("model.coupling"));

    // interiors empty at the asymptotic scales
    let asymptotic = dir.path().join("asymptotic.toml");
    let text = SMALL.replace(
        "mode = \"scaled\"\nblocks_per_side = 3\ninterior_margin = 2",
        "mode = \"asymptotic\"\nepsilon = 0.2\ngamma = 0.5",
    );
    std::fs::write(&asymptotic, text).unwrap();
    let status = Process::new(exe)
        .args(["compare", "--config"])
        .arg(&asymptotic)
        .arg("--out")
        .arg(dir.path().join("p"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("must exceed"));
}
