//! The five training terms.
//!
//! All of them are built from tape primitives, so one `backward` call at the
//! weighted total differentiates everything end to end. Per-pair terms are
//! averaged over the batch.

use crate::gradcore::{GradError, Tape, Tensor, Var};
use crate::scalar::Scalar;

use super::{DistanceMetric, StagedDisModel};

/// Per-pair projected rows and distances for one batch.
///
/// `projections[i]` is the `[2B, d]` code of subspace `i`, rows `0..B`
/// holding the first pair members and rows `B..2B` the second.
pub struct PairDistances {
    /// `[k][B]` member-1 rows, each `[1, d]`.
    pub rows_a: Vec<Vec<Var>>,
    /// `[k][B]` member-2 rows.
    pub rows_b: Vec<Vec<Var>>,
    /// `[B][k]` scalar distances.
    pub dist: Vec<Vec<Var>>,
    /// `[B][k]` scalar squared distances.
    pub dist_sq: Vec<Vec<Var>>,
    /// `[B][k]` detached distance values, for oracle decisions.
    pub values: Vec<Vec<f64>>,
}

pub fn pair_distances<S: Scalar>(
    tape: &mut Tape<S>,
    projections: &[Var],
    batch: usize,
    metric: DistanceMetric,
) -> Result<PairDistances, GradError> {
    let k = projections.len();
    let mut rows_a = vec![Vec::with_capacity(batch); k];
    let mut rows_b = vec![Vec::with_capacity(batch); k];
    let mut dist = vec![Vec::with_capacity(k); batch];
    let mut dist_sq = vec![Vec::with_capacity(k); batch];
    let mut values = vec![Vec::with_capacity(k); batch];
    for (i, &proj) in projections.iter().enumerate() {
        for j in 0..batch {
            let ra = tape.row(proj, j)?;
            let rb = tape.row(proj, batch + j)?;
            let diff = tape.sub(ra, rb)?;
            let (d, d_sq) = match metric {
                DistanceMetric::L2 => {
                    let sq = tape.l2sq(diff);
                    (tape.sqrt(sq)?, sq)
                }
                DistanceMetric::L1 => {
                    let d = tape.l1(diff);
                    (d, tape.mul(d, d)?)
                }
            };
            rows_a[i].push(ra);
            rows_b[i].push(rb);
            dist[j].push(d);
            dist_sq[j].push(d_sq);
            values[j].push(tape.value(d).item().as_f64());
        }
    }
    Ok(PairDistances {
        rows_a,
        rows_b,
        dist,
        dist_sq,
        values,
    })
}

/// Mean squared error between an input batch and its reconstruction.
pub fn reconstruction<S: Scalar>(tape: &mut Tape<S>, x: Var, recon: Var) -> Result<Var, GradError> {
    let diff = tape.sub(recon, x)?;
    let sq = tape.mul(diff, diff)?;
    Ok(tape.mean(sq))
}

/// Mean absolute value over every coordinate of every projected code.
pub fn sparsity<S: Scalar>(tape: &mut Tape<S>, projections: &[Var]) -> Result<Var, GradError> {
    let mut total_coords = 0usize;
    let mut acc: Option<Var> = None;
    for &p in projections {
        total_coords += tape.value(p).numel();
        let part = tape.l1(p);
        acc = Some(match acc {
            Some(a) => tape.add(a, part)?,
            None => part,
        });
    }
    let acc = acc.expect("at least one projection");
    Ok(tape.scale(acc, S::from_f64(1.0 / total_coords as f64)))
}

/// Contrastive term, averaged over pairs: the squared distances of every
/// non-selected subspace pull the pair together, and a squared hinge pushes
/// the selected subspace's distance up to the margin.
pub fn distance_contrast<S: Scalar>(
    tape: &mut Tape<S>,
    pd: &PairDistances,
    selected: &[usize],
    margin: f64,
) -> Result<Var, GradError> {
    let batch = selected.len();
    let m = S::from_f64(margin);
    let mut acc: Option<Var> = None;
    for (j, &o) in selected.iter().enumerate() {
        for i in 0..pd.dist[j].len() {
            if i == o {
                continue;
            }
            let term = pd.dist_sq[j][i];
            acc = Some(match acc {
                Some(a) => tape.add(a, term)?,
                None => term,
            });
        }
        let neg = tape.scale(pd.dist[j][o], -S::one());
        let gap = tape.add_scalar(neg, m);
        let hinge = tape.relu(gap);
        let hinge_sq = tape.mul(hinge, hinge)?;
        acc = Some(match acc {
            Some(a) => tape.add(a, hinge_sq)?,
            None => hinge_sq,
        });
    }
    let acc = acc.expect("non-empty batch");
    Ok(tape.scale(acc, S::from_f64(1.0 / batch as f64)))
}

/// Swap consistency, averaged over pairs: replace the selected subspace's
/// code of member 1 by member 2's, decode the hybrid, re-encode and
/// re-project it, and penalize movement in every non-selected subspace.
/// Differentiable through the decode/encode round trip.
pub fn consistency<S: Scalar>(
    tape: &mut Tape<S>,
    staged: &StagedDisModel,
    pd: &PairDistances,
    selected: &[usize],
) -> Result<Var, GradError> {
    let batch = selected.len();
    let k = staged.num_subspaces();
    let mut hybrid_rows = Vec::with_capacity(batch);
    for (j, &o) in selected.iter().enumerate() {
        let mut acc = pd.rows_b[o][j];
        for i in 0..k {
            if i == o {
                continue;
            }
            acc = tape.add(acc, pd.rows_a[i][j])?;
        }
        hybrid_rows.push(acc);
    }
    let hybrid = tape.concat(&hybrid_rows, 0)?;
    let decoded = staged.decode(tape, hybrid)?;
    let re_encoded = staged.encode(tape, decoded)?;
    let re_projected = staged.project_all(tape, re_encoded)?;

    let mut acc: Option<Var> = None;
    for (j, &o) in selected.iter().enumerate() {
        for (i, &rp) in re_projected.iter().enumerate() {
            if i == o {
                continue;
            }
            let row = tape.row(rp, j)?;
            let diff = tape.sub(row, pd.rows_a[i][j])?;
            let term = tape.l2sq(diff);
            acc = Some(match acc {
                Some(a) => tape.add(a, term)?,
                None => term,
            });
        }
    }
    let acc = acc.expect("k >= 2 and non-empty batch");
    Ok(tape.scale(acc, S::from_f64(1.0 / batch as f64)))
}

/// Usage-balance penalty over same-label pairs: soft-assign each pair to a
/// non-forced subspace by a temperature softmax over its distances, average
/// the assignments, and take the KL divergence to the uniform distribution.
/// Zero when usage is even, `ln(k-1)` when one subspace takes everything.
/// An empty batch contributes zero.
pub fn balance<S: Scalar>(
    tape: &mut Tape<S>,
    pd: &PairDistances,
    same_label: &[bool],
    forced: usize,
    temperature: f64,
) -> Result<Var, GradError> {
    let k = pd.dist.first().map_or(0, |d| d.len());
    let mut soft = Vec::new();
    for (j, &same) in same_label.iter().enumerate() {
        if !same {
            continue;
        }
        let mut parts = Vec::with_capacity(k - 1);
        for i in 0..k {
            if i == forced {
                continue;
            }
            parts.push(tape.reshape(pd.dist[j][i], vec![1])?);
        }
        let stacked = tape.concat(&parts, 0)?;
        let scaled = tape.scale(stacked, S::from_f64(1.0 / temperature));
        soft.push(tape.softmax(scaled)?);
    }
    if soft.is_empty() {
        return Ok(tape.leaf(Tensor::scalar(S::zero())));
    }
    let count = soft.len();
    let mut acc = soft[0];
    for &q in &soft[1..] {
        acc = tape.add(acc, q)?;
    }
    let mean_q = tape.scale(acc, S::from_f64(1.0 / count as f64));
    // `q * ln(q + eps)`: the floor keeps ln defined when a component of the
    // mean underflows to zero; at such points q itself is 0, so the product
    // is exact.
    let floored = tape.add_scalar(mean_q, S::from_f64(1e-12));
    let log_q = tape.ln(floored)?;
    let prod = tape.mul(mean_q, log_q)?;
    let neg_entropy = tape.sum(prod);
    Ok(tape.add_scalar(neg_entropy, S::from_f64(((k - 1) as f64).ln())))
}
