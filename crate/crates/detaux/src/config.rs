//! Pipeline configuration.
//!
//! Loaded from JSON; every field has an explicit default, and the fully
//! materialized configuration is written into the run manifest so that no
//! hidden default can silently change a result. The forced-subspace index is
//! 1-based here (user-facing) and converted to the 0-based internal form at
//! this boundary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use detaux_core::subspace::{DistanceMetric, SubspaceConfig};
use detaux_core::synthgen::{Factor, FactorSpec};
use detaux_core::taskmine::{MiningOptions, SelectionMethod};
use detaux_core::mtlearn::{MtlConfig, TaskWeights};

use crate::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Disentangle, mine, then compare MTL against STL.
    Full,
    /// Reconstruction-only autoencoder, clustering on the raw latent code.
    NoDisentangle,
    /// Train and report the single-task baseline only.
    StlOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorCfg {
    pub name: String,
    pub cardinality: u16,
}

impl Default for FactorCfg {
    fn default() -> Self {
        Self {
            name: String::new(),
            cardinality: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub factors: Vec<FactorCfg>,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub principal: String,
    pub noise_fraction: f64,
    pub per_channel_noise: bool,
    /// Samples rendered per factor tuple (fresh noise each).
    pub replicas: usize,
    pub holdout_factors: Vec<String>,
    pub holdout_fraction: f64,
    /// Hidden factor the mined labels are scored against (evaluation only).
    /// Defaults to a factor named "hue" when one exists.
    pub reference_factor: Option<String>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            factors: vec![
                FactorCfg { name: "shape".into(), cardinality: 4 },
                FactorCfg { name: "scale".into(), cardinality: 4 },
                FactorCfg { name: "hue".into(), cardinality: 8 },
                FactorCfg { name: "pos_x".into(), cardinality: 4 },
                FactorCfg { name: "pos_y".into(), cardinality: 4 },
            ],
            width: 32,
            height: 32,
            channels: 3,
            principal: "scale".into(),
            noise_fraction: 0.15,
            per_channel_noise: false,
            replicas: 1,
            holdout_factors: vec!["pos_x".into(), "pos_y".into()],
            holdout_fraction: 0.5,
            reference_factor: None,
        }
    }
}

impl DatasetSection {
    pub fn factor_spec(&self) -> FactorSpec {
        FactorSpec {
            factors: self
                .factors
                .iter()
                .map(|f| Factor::new(&f.name, f.cardinality))
                .collect(),
            width: self.width,
            height: self.height,
            channels: self.channels,
            principal: self.principal.clone(),
        }
    }

    /// The factor used for the NMI diagnostic, when one applies.
    pub fn resolved_reference_factor(&self) -> Option<String> {
        match &self.reference_factor {
            Some(name) => Some(name.clone()),
            None => self
                .factors
                .iter()
                .find(|f| f.name == "hue" && f.name != self.principal)
                .map(|f| f.name.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubspaceSection {
    pub num_subspaces: usize,
    pub latent_dim: usize,
    /// 1-based index of the forced subspace.
    pub alpha: usize,
    pub hidden_dims: Vec<usize>,
    pub epochs: usize,
    pub warmup_epochs: usize,
    pub batch_pairs: usize,
    pub pairs_per_epoch: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub contrast_weight: f64,
    pub consistency_weight: f64,
    pub balance_weight: f64,
    pub margin: f64,
    pub temperature: f64,
    pub distance: DistanceMetric,
}

impl Default for SubspaceSection {
    fn default() -> Self {
        let core = SubspaceConfig::default();
        Self {
            num_subspaces: core.num_subspaces,
            latent_dim: core.latent_dim,
            alpha: core.forced_subspace + 1,
            hidden_dims: core.hidden_dims,
            epochs: core.epochs,
            warmup_epochs: core.warmup_epochs,
            batch_pairs: core.batch_pairs,
            pairs_per_epoch: core.pairs_per_epoch,
            learning_rate: core.learning_rate,
            weight_decay: core.weight_decay,
            contrast_weight: core.contrast_weight,
            consistency_weight: core.consistency_weight,
            balance_weight: core.balance_weight,
            margin: core.margin,
            temperature: core.temperature,
            distance: core.distance,
        }
    }
}

impl SubspaceSection {
    pub fn to_core(&self) -> Result<SubspaceConfig, PipelineError> {
        if self.alpha == 0 || self.alpha > self.num_subspaces {
            return Err(PipelineError::Config(format!(
                "alpha must be in 1..={}, got {}",
                self.num_subspaces, self.alpha
            )));
        }
        let cfg = SubspaceConfig {
            num_subspaces: self.num_subspaces,
            latent_dim: self.latent_dim,
            forced_subspace: self.alpha - 1,
            hidden_dims: self.hidden_dims.clone(),
            epochs: self.epochs,
            warmup_epochs: self.warmup_epochs,
            batch_pairs: self.batch_pairs,
            pairs_per_epoch: self.pairs_per_epoch,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            contrast_weight: self.contrast_weight,
            consistency_weight: self.consistency_weight,
            balance_weight: self.balance_weight,
            margin: self.margin,
            temperature: self.temperature,
            distance: self.distance,
        };
        cfg.validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningSection {
    pub min_cluster_fraction: f64,
    pub min_samples: Option<usize>,
    pub selection: SelectionMethod,
    pub score_pairs: usize,
    /// Pairs used for the post-hoc separation diagnostic.
    pub separation_pairs: usize,
}

impl Default for MiningSection {
    fn default() -> Self {
        let core = MiningOptions::default();
        Self {
            min_cluster_fraction: core.min_cluster_fraction,
            min_samples: core.min_samples,
            selection: core.selection,
            score_pairs: core.score_pairs,
            separation_pairs: 512,
        }
    }
}

impl MiningSection {
    pub fn to_core(&self) -> MiningOptions {
        MiningOptions {
            min_cluster_fraction: self.min_cluster_fraction,
            min_samples: self.min_samples,
            selection: self.selection,
            score_pairs: self.score_pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MtlSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub hidden_dims: Vec<usize>,
    pub main_weight: f64,
    pub aux_weight: f64,
    pub uncertainty_weighting: bool,
    /// Seed replicates of the MTL/STL comparison; reported accuracies are
    /// means over the replicates.
    pub replicates: usize,
}

impl Default for MtlSection {
    fn default() -> Self {
        let core = MtlConfig::default();
        Self {
            epochs: core.epochs,
            batch_size: core.batch_size,
            learning_rate: core.learning_rate,
            weight_decay: core.weight_decay,
            hidden_dims: core.hidden_dims,
            main_weight: core.weights.main,
            aux_weight: core.weights.aux,
            uncertainty_weighting: core.uncertainty_weighting,
            replicates: 1,
        }
    }
}

impl MtlSection {
    pub fn to_core(&self) -> Result<MtlConfig, PipelineError> {
        let cfg = MtlConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            hidden_dims: self.hidden_dims.clone(),
            weights: TaskWeights {
                main: self.main_weight,
                aux: self.aux_weight,
            },
            uncertainty_weighting: self.uncertainty_weighting,
        };
        cfg.validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.replicates == 0 {
            return Err(PipelineError::Config("replicates must be >= 1".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub precision: Precision,
    pub mode: RunMode,
    pub out_dir: PathBuf,
    pub dataset: DatasetSection,
    pub subspace: SubspaceSection,
    pub mining: MiningSection,
    pub mtl: MtlSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            precision: Precision::F32,
            mode: RunMode::Full,
            out_dir: PathBuf::from("detaux-out"),
            dataset: DatasetSection::default(),
            subspace: SubspaceSection::default(),
            mining: MiningSection::default(),
            mtl: MtlSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| {
            PipelineError::Config(format!("cannot read {}: {}", path.display(), e))
        })?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {}", path.display(), e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.dataset
            .factor_spec()
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.dataset.noise_fraction) {
            return Err(PipelineError::Config(format!(
                "noise_fraction {} outside [0, 1]",
                self.dataset.noise_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.dataset.holdout_fraction) {
            return Err(PipelineError::Config(format!(
                "holdout_fraction {} outside [0, 1]",
                self.dataset.holdout_fraction
            )));
        }
        if self.dataset.replicas == 0 {
            return Err(PipelineError::Config("replicas must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mining.min_cluster_fraction) {
            return Err(PipelineError::Config(format!(
                "min_cluster_fraction {} outside [0, 1]",
                self.mining.min_cluster_fraction
            )));
        }
        self.subspace.to_core()?;
        self.mtl.to_core()?;
        Ok(())
    }

    /// Canonical serialized form, also used for the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
