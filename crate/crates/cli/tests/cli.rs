use std::path::Path;
use std::process::Command;

use sha2::{Digest, Sha256};

use loblab_cli::io::decode_books;
use loblab_cli::manifest::{RunManifest, Status};
use loblab_cli::{run_experiment, ExperimentConfig, Mode};

const SMALL: &str = r#"
[run]
n_list = [16]
horizon = 0.5
snapshot_times = [0.25, 0.5]
replications = 2
seed = 7

[limit]
grid_lo = -5.0
grid_hi = 5.0
spacing = 0.02
dt = 0.0078125

[[test_functions]]
side = "bid"
kernel = { kind = "gaussian-bump", center = -1.75, width = 0.4, radius = 0.8, amplitude = 1.0 }

[[test_functions]]
side = "ask"
kernel = { kind = "gaussian-bump", center = 1.25, width = 0.4, radius = 0.8, amplitude = 1.0 }
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_loblab"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn check_inventory(root: &Path, m: &RunManifest) {
    for f in m.inventory() {
        let data = std::fs::read(root.join(&f.path)).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&data)), f.sha256, "{}", f.path);
        assert_eq!(data.len() as u64, f.bytes);
    }
}

#[test]
fn simulate_writes_two_bundles_and_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let out = run_experiment(&cfg, Mode::Simulate, tmp.path(), Some(1)).unwrap();
    let m = RunManifest::load(&out.out_dir).unwrap();
    assert_eq!(m, out.manifest);
    assert_eq!(m.status, Status::Complete);
    assert_eq!(m.tasks.len(), 2);
    assert!(m.tasks.iter().all(|t| t.files.len() == 3));
    assert_ne!(m.tasks[0].seed, m.tasks[1].seed);
    check_inventory(&out.out_dir, &m);

    let books = std::fs::read(out.out_dir.join("n16/rep000000/books.bin")).unwrap();
    let (n, recs) = decode_books(&books).unwrap();
    assert_eq!(n, 16);
    assert_eq!(recs.iter().map(|r| r.t).collect::<Vec<_>>(), vec![0.0, 0.25, 0.5]);
    let series = std::fs::read_to_string(out.out_dir.join("n16/rep000000/series.csv")).unwrap();
    assert!(series.starts_with("# schema: loblab.series v1\nt,bid_tick,"));
}

fn data_checksums(m: &RunManifest) -> Vec<(String, String)> {
    m.inventory().into_iter().map(|f| (f.path.clone(), f.sha256.clone())).collect()
}

#[test]
fn reruns_reproduce_checksums_regardless_of_jobs() {
    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run_experiment(&cfg, Mode::Simulate, a.path(), Some(1)).unwrap().manifest;
    let mb = run_experiment(&cfg, Mode::Simulate, b.path(), Some(3)).unwrap().manifest;
    assert_eq!(ma.config_hash, mb.config_hash);
    assert_eq!(data_checksums(&ma), data_checksums(&mb));

    let mut other = cfg.clone();
    other.run.seed = 8;
    let c = tempfile::tempdir().unwrap();
    let mc = run_experiment(&other, Mode::Simulate, c.path(), None).unwrap().manifest;
    assert_ne!(ma.config_hash, mc.config_hash);
    assert_ne!(ma.tasks[0].files[0].sha256, mc.tasks[0].files[0].sha256);
}

#[test]
fn decompose_and_limit_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let d = run_experiment(&cfg, Mode::Decompose, tmp.path(), None).unwrap();
    check_inventory(&d.out_dir, &d.manifest);
    let snaps = std::fs::read_to_string(d.out_dir.join("n16/rep000001/snapshots.csv")).unwrap();
    assert_eq!(snaps.lines().count(), 2 + 3);
    // decompositions replay the simulated paths
    let s = run_experiment(&cfg, Mode::Simulate, tmp.path(), None).unwrap();
    assert_eq!(s.manifest.tasks[1].seed, d.manifest.tasks[1].seed);

    let l = run_experiment(&cfg, Mode::Limit, tmp.path(), None).unwrap();
    assert_eq!(l.manifest.tasks.len(), 2);
    check_inventory(&l.out_dir, &l.manifest);
    let vol = std::fs::read_to_string(l.out_dir.join("rep000000/volume.csv")).unwrap();
    assert_eq!(vol.lines().count(), 2 + 501);
}

#[test]
fn failed_run_is_marked_in_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    cfg.limit.grid_lo = -2.0;
    cfg.limit.grid_hi = 2.0;
    let err = run_experiment(&cfg, Mode::Limit, tmp.path(), Some(1)).err().unwrap();
    assert!(format!("{err:#}").contains("boundary"), "{err:#}");
    let m = RunManifest::load(&tmp.path().join("limit")).unwrap();
    assert_eq!(m.status, Status::Failed);
    assert!(m.error.is_some());
}

#[test]
fn sweep_exit_code_follows_the_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("n_list = [16]", "n_list = [16, 32]").replace("replications = 2", "replications = 10");
    let cfg = write_config(tmp.path(), &format!("{text}\n[sweep]\nbootstrap_resamples = 100\nalpha = 0.01\n"));
    let out = tmp.path().join("out");
    let status = bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("sweep/report.json")).unwrap()).unwrap();
    let passed = report["passed"].as_bool().unwrap();
    assert_eq!(status.code(), Some(if passed { 0 } else { 1 }));
    assert_eq!(report["replications"], 10);
    let m = RunManifest::load(&out.join("sweep")).unwrap();
    assert_eq!(m.status, Status::Complete);
    assert_eq!(m.tasks.len(), 2 * 10 + 10);
    check_inventory(&out.join("sweep"), &m);
}

#[test]
fn validate_names_the_offending_field() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_config(tmp.path(), "[run]\nn_list = [16]\nhorizon = 1.0\n");
    assert!(bin().args(["validate", "--config"]).arg(&good).status().unwrap().success());

    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.toml")).unwrap();
    let bad = text.replacen("family = \"beta\"\nalpha = 2.0\nbeta = 2.0", "family = \"uniform\"\nlo = 0.0\nhi = 1.5", 1);
    let bad = write_config(tmp.path(), &bad);
    let out = bin().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("model.flow.bid.cancel.size"), "{err}");

    let zero = write_config(tmp.path(), "[run]\nn_list = [0]\nhorizon = 1.0\n");
    let out = bin().args(["validate", "--config"]).arg(&zero).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("run.n_list[0]"));
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("replications = 2", "replications = 1"));
    let env_out = tmp.path().join("from-env");
    let status = bin()
        .args(["simulate", "--seed", "3", "--jobs", "1", "--config"])
        .arg(&cfg)
        .env("LOBLAB_OUT", &env_out)
        .current_dir(tmp.path())
        .status()
        .unwrap();
    assert!(status.success());
    let m = RunManifest::load(&env_out.join("simulate")).unwrap();
    assert_eq!(m.master_seed, 3);
}
