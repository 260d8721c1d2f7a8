//! Disentanglement hyperparameters.

use serde::{Deserialize, Serialize};

use super::DisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    /// Euclidean norm (default).
    L2,
    /// Manhattan norm.
    L1,
}

/// Configuration of the subspace model and its training run. The forced
/// subspace index is 0-based here; user-facing configuration is 1-based and
/// converted at the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceConfig {
    /// Number of latent subspaces (k).
    pub num_subspaces: usize,
    /// Latent width (d); each projector maps d -> d.
    pub latent_dim: usize,
    /// 0-based index of the subspace reserved for principal-label variation.
    pub forced_subspace: usize,
    /// Encoder hidden widths; the decoder mirrors them.
    pub hidden_dims: Vec<usize>,
    pub epochs: usize,
    /// Reconstruction-only epochs before the structural terms switch on.
    pub warmup_epochs: usize,
    pub batch_pairs: usize,
    pub pairs_per_epoch: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Weight on the contrastive distance + sparsity pair of terms.
    pub contrast_weight: f64,
    /// Weight on the swap-consistency term.
    pub consistency_weight: f64,
    /// Weight on the subspace-usage balance term.
    pub balance_weight: f64,
    /// Target separation for the selected subspace's distance.
    pub margin: f64,
    /// Softmax temperature of the balance term.
    pub temperature: f64,
    pub distance: DistanceMetric,
}

impl Default for SubspaceConfig {
    fn default() -> Self {
        Self {
            num_subspaces: 10,
            latent_dim: 64,
            forced_subspace: 0,
            hidden_dims: vec![256, 128],
            epochs: 40,
            warmup_epochs: 4,
            batch_pairs: 32,
            pairs_per_epoch: 512,
            learning_rate: 0.0005,
            weight_decay: 0.01,
            contrast_weight: 1.0,
            consistency_weight: 1.0,
            balance_weight: 0.1,
            margin: 1.0,
            temperature: 0.5,
            distance: DistanceMetric::L2,
        }
    }
}

impl SubspaceConfig {
    pub fn validate(&self) -> Result<(), DisError> {
        let fail = |msg: String| Err(DisError::Config(msg));
        if self.num_subspaces == 0 {
            return fail("num_subspaces must be >= 1".into());
        }
        if self.forced_subspace >= self.num_subspaces {
            return fail(format!(
                "forced_subspace {} out of range for {} subspaces",
                self.forced_subspace, self.num_subspaces
            ));
        }
        if self.latent_dim < self.num_subspaces {
            return fail(format!(
                "latent_dim {} must be >= num_subspaces {}",
                self.latent_dim, self.num_subspaces
            ));
        }
        if self.hidden_dims.is_empty() {
            return fail("hidden_dims must not be empty".into());
        }
        for (name, v) in [
            ("contrast_weight", self.contrast_weight),
            ("consistency_weight", self.consistency_weight),
            ("balance_weight", self.balance_weight),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return fail(format!("{} must be finite and >= 0, got {}", name, v));
            }
        }
        if !(self.margin > 0.0) {
            return fail(format!("margin must be > 0, got {}", self.margin));
        }
        if !(self.temperature > 0.0) {
            return fail(format!("temperature must be > 0, got {}", self.temperature));
        }
        if self.epochs == 0 || self.warmup_epochs > self.epochs {
            return fail(format!(
                "need 0 < warmup_epochs <= epochs, got {}/{}",
                self.warmup_epochs, self.epochs
            ));
        }
        if self.batch_pairs == 0 || self.pairs_per_epoch < self.batch_pairs {
            return fail("pairs_per_epoch must cover at least one batch".into());
        }
        if !(self.learning_rate > 0.0) {
            return fail(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SubspaceConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = SubspaceConfig::default();
        cfg.forced_subspace = 10;
        assert!(cfg.validate().is_err());

        let mut cfg = SubspaceConfig::default();
        cfg.latent_dim = 5;
        assert!(cfg.validate().is_err());

        let mut cfg = SubspaceConfig::default();
        cfg.margin = 0.0;
        assert!(cfg.validate().is_err());
    }
}
