//! Run manifest: per-stage artifacts with content hashes.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::PipelineError;

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub wall_ms: u128,
    pub artifacts: Vec<ArtifactRecord>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub pipeline_version: String,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn new(config: &PipelineConfig) -> Self {
        Self {
            pipeline_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: sha256_hex(config.canonical_json().as_bytes()),
            config: config.clone(),
            stages: Vec::new(),
        }
    }

    /// Record a finished stage with the hashes of the files it produced.
    pub fn record(
        &mut self,
        stage: &str,
        started: Instant,
        artifacts: &[&Path],
    ) -> Result<(), PipelineError> {
        let mut records = Vec::with_capacity(artifacts.len());
        for path in artifacts {
            let bytes = fs::read(path).map_err(|e| {
                PipelineError::Run(format!("hashing {}: {}", path.display(), e))
            })?;
            records.push(ArtifactRecord {
                path: path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string()),
                sha256: sha256_hex(&bytes),
            });
        }
        self.stages.push(StageRecord {
            stage: stage.to_string(),
            wall_ms: started.elapsed().as_millis(),
            artifacts: records,
        });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), PipelineError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| PipelineError::Run(e.to_string()))?;
        fs::write(path, json + "\n").map_err(|e| PipelineError::Run(e.to_string()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{:02x}", b));
    }
    out
}
