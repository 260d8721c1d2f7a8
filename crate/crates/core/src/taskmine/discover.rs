//! Auxiliary task mining and the stopping rule.

use crate::scalar::Scalar;
use crate::subspace::{DisModel, DistanceMetric};
use crate::synthgen::TrainView;

use super::hdbscan::{hdbscan, ClusterAssignment, HdbscanParams, SelectionMethod};
use super::score::{score_subspaces, SubspaceScore};
use super::MineError;

/// A mined classification task: one label per training sample, `-1` marking
/// noise points that the auxiliary loss must ignore.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxTask {
    pub labels: Vec<i64>,
    pub num_classes: usize,
    /// Which subspace the labels were mined from.
    pub subspace: usize,
}

/// Everything the discovery stage produces, whether or not a task exists.
#[derive(Debug, Clone)]
pub struct Discovery {
    pub scores: Vec<SubspaceScore>,
    pub subspace: usize,
    pub assignment: ClusterAssignment,
    /// `None` when clustering found at most one cluster: no auxiliary task
    /// exists and the procedure stops.
    pub task: Option<AuxTask>,
}

/// Cluster a point set into an auxiliary task. Returns `None` when at most
/// one cluster emerges.
pub fn mine_clusters(
    points: &[Vec<f64>],
    params: &HdbscanParams,
    subspace: usize,
) -> Result<(ClusterAssignment, Option<AuxTask>), MineError> {
    let assignment = hdbscan(points, params)?;
    let task = if assignment.num_clusters >= 2 {
        Some(AuxTask {
            labels: assignment.labels.clone(),
            num_classes: assignment.num_clusters,
            subspace,
        })
    } else {
        None
    };
    Ok((assignment, task))
}

/// Knobs for the discovery stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiningOptions {
    /// Cluster-size floor as a fraction of the training set.
    pub min_cluster_fraction: f64,
    /// Defaults to the resolved cluster-size floor when absent.
    pub min_samples: Option<usize>,
    pub selection: SelectionMethod,
    /// Same-label pairs sampled when ranking subspaces.
    pub score_pairs: usize,
}

impl Default for MiningOptions {
    fn default() -> Self {
        Self {
            min_cluster_fraction: 0.02,
            min_samples: None,
            selection: SelectionMethod::ExcessOfMass,
            score_pairs: 512,
        }
    }
}

impl MiningOptions {
    /// Resolve the clustering parameters for a training set of `n` samples.
    pub fn hdbscan_params(&self, n: usize) -> HdbscanParams {
        let min_cluster_size =
            ((self.min_cluster_fraction * n as f64).round() as usize).max(2);
        HdbscanParams {
            min_cluster_size,
            min_samples: self.min_samples.unwrap_or(min_cluster_size),
            selection: self.selection,
        }
    }
}

/// Full discovery: score subspaces, project every training sample into the
/// winner, and cluster with `min_cluster_size = round(fraction * N)`.
pub fn discover_aux_task<S: Scalar>(
    model: &DisModel<S>,
    view: &TrainView,
    forced: usize,
    metric: DistanceMetric,
    options: &MiningOptions,
    seed: u64,
) -> Result<Discovery, MineError> {
    if !(0.0..=1.0).contains(&options.min_cluster_fraction) {
        return Err(MineError::BadParams(format!(
            "min_cluster_fraction {} outside [0, 1]",
            options.min_cluster_fraction
        )));
    }
    let (scores, subspace) =
        score_subspaces(model, view, forced, metric, options.score_pairs, seed)?;
    let points = model.project_view(view, subspace, 256);
    let params = options.hdbscan_params(view.len());
    let (assignment, task) = mine_clusters(&points, &params, subspace)?;
    Ok(Discovery {
        scores,
        subspace,
        assignment,
        task,
    })
}
