//! Self-contained record of one STL/MTL training run.

use serde::{Deserialize, Serialize};

use super::train::MtlConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub total: f64,
    pub main: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux: Option<f64>,
}

/// Serialized as JSON with the field order below, so identical runs produce
/// identical bytes. The mining-related fields are filled in by the caller
/// when auxiliary labels and hidden factors are available.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: String,
    pub seed: u64,
    pub train_accuracy_main: f64,
    pub test_accuracy_main: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_accuracy_aux: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux_classes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux_noise_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux_nmi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance_diag: Option<f64>,
    pub epoch_losses: Vec<EpochLoss>,
    pub config: MtlConfig,
}
