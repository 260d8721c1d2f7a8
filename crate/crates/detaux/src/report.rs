//! Final comparison report. Field order is the serialization order, so two
//! identical runs emit identical bytes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationSummary {
    pub mean_differing: f64,
    pub mean_same: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub seed: u64,
    pub stl_acc: f64,
    pub mtl_acc: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalReport {
    pub mode: String,
    /// "ok", or "no auxiliary task" when the stopping rule fired and the
    /// run degraded to the single-task baseline.
    pub status: String,
    pub seed: u64,
    /// Mean over replicates.
    pub stl_acc: f64,
    pub mtl_acc: Option<f64>,
    pub delta: Option<f64>,
    pub aux_classes: Option<usize>,
    pub aux_nmi: Option<f64>,
    pub aux_noise_fraction: Option<f64>,
    pub covariance_diag: Option<f64>,
    pub separation: Option<SeparationSummary>,
    /// 1-based index of the mined subspace, matching the alpha convention.
    pub mined_subspace: Option<usize>,
    pub replicates: usize,
    pub per_replicate: Vec<ReplicateOutcome>,
}

impl FinalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}
