//! CLI behavior: exit codes, stage idempotence, determinism, and the
//! hidden-label leak check, all on a micro configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn detaux() -> Command {
    Command::new(env!("CARGO_BIN_EXE_detaux"))
}

fn micro_config(out_dir: &Path, seed: u64) -> String {
    format!(
        r#"{{
  "seed": {seed},
  "out_dir": {out:?},
  "dataset": {{
    "factors": [
      {{"name": "scale", "cardinality": 2}},
      {{"name": "hue", "cardinality": 2}},
      {{"name": "pos_x", "cardinality": 2}}
    ],
    "width": 12,
    "height": 12,
    "channels": 3,
    "principal": "scale",
    "noise_fraction": 0.1,
    "replicas": 4,
    "holdout_factors": ["pos_x"],
    "holdout_fraction": 0.5
  }},
  "subspace": {{
    "num_subspaces": 3,
    "latent_dim": 8,
    "hidden_dims": [32, 16],
    "epochs": 3,
    "warmup_epochs": 1,
    "batch_pairs": 8,
    "pairs_per_epoch": 32
  }},
  "mining": {{"min_cluster_fraction": 0.2, "score_pairs": 128, "separation_pairs": 64}},
  "mtl": {{"epochs": 3, "batch_size": 8, "hidden_dims": [32, 16], "replicates": 1}}
}}"#,
        seed = seed,
        out = out_dir.display().to_string(),
    )
}

fn write_config(dir: &Path, seed: u64) -> PathBuf {
    let out = dir.join("out");
    let path = dir.join("config.json");
    fs::write(&path, micro_config(&out, seed)).unwrap();
    path
}

#[test]
fn bad_config_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    fs::write(&path, r#"{"subspace": {"alpha": 99}}"#).unwrap();
    let status = detaux()
        .args(["full-run", "--config"])
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    fs::write(&path, "not json").unwrap();
    let status = detaux()
        .args(["gen-data", "--config"])
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // unknown keys are config errors too
    fs::write(&path, r#"{"no_such_key": 1}"#).unwrap();
    let status = detaux()
        .args(["gen-data", "--config"])
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn missing_upstream_artifact_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 3);
    let out = detaux()
        .args(["train-dis", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("gen-data"), "should name the stage: {}", stderr);
}

#[test]
fn gen_data_is_idempotent_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 5);
    let data = dir.path().join("out").join("data.dtxd");
    assert!(detaux().args(["gen-data", "--config"]).arg(&config).status().unwrap().success());
    let first = fs::read(&data).unwrap();
    assert!(detaux().args(["gen-data", "--config"]).arg(&config).status().unwrap().success());
    assert_eq!(first, fs::read(&data).unwrap());
}

#[test]
fn seed_override_changes_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 5);
    let data = dir.path().join("out").join("data.dtxd");
    assert!(detaux().args(["gen-data", "--config"]).arg(&config).status().unwrap().success());
    let first = fs::read(&data).unwrap();
    assert!(detaux()
        .args(["gen-data", "--seed", "6", "--config"])
        .arg(&config)
        .status()
        .unwrap()
        .success());
    assert_ne!(first, fs::read(&data).unwrap());
}

#[test]
fn full_run_completes_and_degrades_gracefully_without_a_task() {
    // the micro model is too small/undertrained to cluster; the run must
    // still exit 0 with an STL-only report
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 7);
    let status = detaux().args(["full-run", "--config"]).arg(&config).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out").join("report.json")).unwrap())
            .unwrap();
    assert!(report["stl_acc"].is_number());
    assert_eq!(report["mode"], "full");
    let status = report["status"].as_str().unwrap();
    assert!(status == "ok" || status == "no auxiliary task");
    if status == "no auxiliary task" {
        assert!(report["mtl_acc"].is_null());
    }
}

#[test]
fn full_run_is_deterministic_across_invocations() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let config_a = write_config(dir_a.path(), 11);
    let config_b = write_config(dir_b.path(), 11);
    for config in [&config_a, &config_b] {
        assert!(detaux().args(["full-run", "--config"]).arg(config).status().unwrap().success());
    }
    let report_a = fs::read(dir_a.path().join("out").join("report.json")).unwrap();
    let report_b = fs::read(dir_b.path().join("out").join("report.json")).unwrap();
    assert_eq!(report_a, report_b);

    // manifest hashes agree even though wall-clock entries differ
    let hashes = |dir: &Path| -> Vec<(String, String)> {
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("out").join("manifest.json")).unwrap())
                .unwrap();
        manifest["stages"]
            .as_array()
            .unwrap()
            .iter()
            .flat_map(|s| s["artifacts"].as_array().unwrap().clone())
            .map(|a| {
                (
                    a["path"].as_str().unwrap().to_string(),
                    a["sha256"].as_str().unwrap().to_string(),
                )
            })
            .collect()
    };
    assert_eq!(hashes(dir_a.path()), hashes(dir_b.path()));
}

#[test]
fn ablate_entangled_trains_reconstruction_only() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 13);
    let status = detaux()
        .args(["ablate-entangled", "--config"])
        .arg(&config)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let history = fs::read_to_string(dir.path().join("out").join("dis_history.csv")).unwrap();
    for line in history.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        // distance, sparsity, consistency, balance all stay zero
        for col in &cols[2..6] {
            assert_eq!(*col, "0", "structural term active in ablation: {}", line);
        }
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out").join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mode"], "entangled-ablation");
}

/// Training stages must never read hidden factor columns: corrupting them in
/// the data file leaves every trained artifact byte-identical. (Evaluation
/// reports legitimately differ, since NMI scores use the hidden labels.)
#[test]
fn corrupting_hidden_factors_does_not_change_trained_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 17);
    let out = dir.path().join("out");
    assert!(detaux().args(["gen-data", "--config"]).arg(&config).status().unwrap().success());

    let run_training = || {
        for cmd in ["train-dis", "discover", "train-stl"] {
            let status = detaux().args([cmd, "--config"]).arg(&config).status().unwrap();
            assert!(status.success(), "{} failed", cmd);
        }
    };
    run_training();
    let artifact_names = ["dis_model.dtxm", "pca.csv", "pca.svg", "discover.json", "stl_model_rep0.dtxm"];
    let baseline: Vec<Vec<u8>> = artifact_names
        .iter()
        .map(|n| fs::read(out.join(n)).unwrap())
        .collect();

    corrupt_hidden_columns(&out.join("data.dtxd"), 0);
    run_training();
    for (name, before) in artifact_names.iter().zip(&baseline) {
        let after = fs::read(out.join(name)).unwrap();
        assert_eq!(&after, before, "{} changed after hidden-label corruption", name);
    }
}

/// Rewrite every non-principal tuple entry in a DTXD file to 0, leaving the
/// pixels and the principal column alone.
fn corrupt_hidden_columns(path: &Path, principal_factor: usize) {
    let mut bytes = fs::read(path).unwrap();
    let n = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let w = u16::from_le_bytes(bytes[10..12].try_into().unwrap()) as usize;
    let h = u16::from_le_bytes(bytes[12..14].try_into().unwrap()) as usize;
    let c = u16::from_le_bytes(bytes[14..16].try_into().unwrap()) as usize;
    let num_factors = u16::from_le_bytes(bytes[16..18].try_into().unwrap()) as usize;
    let mut off = 18 + 2 * num_factors;
    for _ in 0..n {
        for f in 0..num_factors {
            if f != principal_factor {
                bytes[off + 2 * f] = 0;
                bytes[off + 2 * f + 1] = 0;
            }
        }
        off += 2 * num_factors + 4 * w * h * c;
    }
    fs::write(path, bytes).unwrap();
}
