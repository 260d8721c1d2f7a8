//! Auxiliary-task discovery: subspace scoring, density clustering of the
//! winning subspace, the stopping rule, and the orthogonality / PCA
//! diagnostics.

mod covariance;
mod discover;
mod hdbscan;
pub mod naive;
mod pca;
mod score;

pub use covariance::{cross_covariance_diag, cross_subspace_covariance};
pub use discover::{discover_aux_task, mine_clusters, AuxTask, Discovery, MiningOptions};
pub use hdbscan::{
    build_mst, condense_tree, core_distances, extract_clusters, hdbscan, mutual_reachability,
    single_linkage_hierarchy, ClusterAssignment, CondensedCluster, CondensedTree, HdbscanParams,
    MstEdge, SelectionMethod, SlNode,
};
pub use pca::{pca_project, PcaResult};
pub use score::{score_subspaces, SubspaceScore};

use thiserror::Error;

use crate::subspace::DisError;
use crate::synthgen::DataError;

#[derive(Debug, Error)]
pub enum MineError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("cannot mine auxiliary structure with a single subspace")]
    SingleSubspace,
    #[error("cross-subspace diagnostics need two distinct subspaces")]
    SameSubspace,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Dis(#[from] DisError),
}
