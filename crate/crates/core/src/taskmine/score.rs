//! Rank non-forced subspaces by how much same-label pair distance they
//! carry after training.

use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;
use crate::subspace::{DisModel, DistanceMetric};
use crate::synthgen::{sample_pairs, TrainView};

use super::MineError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceScore {
    pub subspace: usize,
    /// Mean over sampled same-label pairs of this subspace's share of the
    /// pair's total distance.
    pub mean_share: f64,
    pub pairs: usize,
}

/// Score every subspace except the forced one over `num_pairs` sampled
/// same-label pairs and return the scores plus the winning index. Pairs with
/// zero total distance contribute a uniform share. Deterministic given the
/// seed; the winner is never the forced subspace.
pub fn score_subspaces<S: Scalar>(
    model: &DisModel<S>,
    view: &TrainView,
    forced: usize,
    metric: DistanceMetric,
    num_pairs: usize,
    seed: u64,
) -> Result<(Vec<SubspaceScore>, usize), MineError> {
    let k = model.num_subspaces();
    if k < 2 {
        return Err(MineError::SingleSubspace);
    }
    if forced >= k {
        return Err(MineError::BadParams(format!(
            "forced subspace {} out of range for k={}",
            forced, k
        )));
    }
    if num_pairs < 100 {
        return Err(MineError::BadParams(format!(
            "need at least 100 scoring pairs, got {}",
            num_pairs
        )));
    }
    let per_subspace: Vec<Vec<Vec<f64>>> =
        (0..k).map(|i| model.project_view(view, i, 256)).collect();
    let mut rng = stream_rng(seed, Stream::Mining, 0);
    let pairs = sample_pairs(view, num_pairs, 1.0, &mut rng)?;

    let mut share_sums = vec![0.0f64; k];
    for p in &pairs.pairs {
        let dists: Vec<f64> = (0..k)
            .map(|i| distance(&per_subspace[i][p.a], &per_subspace[i][p.b], metric))
            .collect();
        let total: f64 = dists.iter().sum();
        if total > 0.0 {
            for i in 0..k {
                share_sums[i] += dists[i] / total;
            }
        } else {
            for s in share_sums.iter_mut() {
                *s += 1.0 / k as f64;
            }
        }
    }

    let mut scores = Vec::with_capacity(k - 1);
    let mut winner = None;
    for i in 0..k {
        if i == forced {
            continue;
        }
        let mean_share = share_sums[i] / pairs.pairs.len() as f64;
        scores.push(SubspaceScore {
            subspace: i,
            mean_share,
            pairs: pairs.pairs.len(),
        });
        match winner {
            Some(w) if share_sums[w] >= share_sums[i] => {}
            _ => winner = Some(i),
        }
    }
    Ok((scores, winner.expect("k >= 2 leaves a candidate")))
}

fn distance(a: &[f64], b: &[f64], metric: DistanceMetric) -> f64 {
    match metric {
        DistanceMetric::L2 => crate::linalg::euclidean(a, b),
        DistanceMetric::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
    }
}
