//! Cross-subspace covariance diagnostic.
//!
//! Orthogonal subspaces put their information on non-overlapping directions,
//! so the coordinate-wise covariance between two subspaces' centered codes
//! vanishes. The diagnostic is the mean absolute entry of that coordinate
//! covariance vector (the diagonal of the cross-covariance matrix, whose sum
//! is the centered inner product of the two code sets). Reported, never
//! asserted: it is a training outcome.

use crate::scalar::Scalar;
use crate::subspace::DisModel;
use crate::synthgen::TrainView;

use super::MineError;

/// Mean absolute coordinate-wise covariance between two centered point
/// sets of equal shape.
pub fn cross_covariance_diag(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let d = a[0].len();
    let mut mean_a = vec![0.0; d];
    let mut mean_b = vec![0.0; d];
    for i in 0..n {
        for c in 0..d {
            mean_a[c] += a[i][c];
            mean_b[c] += b[i][c];
        }
    }
    for c in 0..d {
        mean_a[c] /= n as f64;
        mean_b[c] /= n as f64;
    }
    let mut acc = 0.0;
    for c in 0..d {
        let mut cov = 0.0;
        for i in 0..n {
            cov += (a[i][c] - mean_a[c]) * (b[i][c] - mean_b[c]);
        }
        acc += (cov / n as f64).abs();
    }
    acc / d as f64
}

/// Diagnostic between two of a model's subspaces over a view.
pub fn cross_subspace_covariance<S: Scalar>(
    model: &DisModel<S>,
    view: &TrainView,
    i: usize,
    j: usize,
) -> Result<f64, MineError> {
    if i == j {
        return Err(MineError::SameSubspace);
    }
    let k = model.num_subspaces();
    if i >= k || j >= k {
        return Err(MineError::BadParams(format!(
            "subspace pair ({}, {}) out of range for k={}",
            i, j, k
        )));
    }
    let a = model.project_view(view, i, 256);
    let b = model.project_view(view, j, 256);
    Ok(cross_covariance_diag(&a, &b))
}
