//! Product-space disentanglement: an autoencoder whose latent code is split
//! across `k` learned linear projectors, trained so that principal-label
//! variation is pinned to one designated subspace and the remaining
//! variation spreads over the others.

mod config;
mod losses;
mod model;
mod oracle;
mod train;

pub use config::{DistanceMetric, SubspaceConfig};
pub use losses::{
    balance, consistency, distance_contrast, pair_distances, reconstruction, sparsity,
    PairDistances,
};
pub use model::{DisModel, StagedDisModel};
pub use oracle::{oracle_principal, oracle_unsupervised};
pub use train::{separation_stats, train, EpochStats, SeparationStats, TrainHistory};

use thiserror::Error;

use crate::checkpoint::CheckpointError;
use crate::gradcore::GradError;
use crate::synthgen::DataError;

#[derive(Debug, Error)]
pub enum DisError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("loss term {term} became non-finite at epoch {epoch}")]
    NanLoss { term: &'static str, epoch: usize },
    #[error("cannot pick a non-forced subspace when k = 1")]
    NoFreeSubspace,
    #[error(transparent)]
    Grad(#[from] GradError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
