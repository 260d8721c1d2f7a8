//! Per-pair subspace selection rules.
//!
//! Given per-subspace distances between a pair's projected codes, the
//! unsupervised rule picks the subspace where the pair differs the most.
//! The task-aware rule overrides it: whenever the pair's principal labels
//! differ, the forced subspace is selected unconditionally, so all
//! label-driven variation accumulates there; same-label pairs pick the
//! most-differing subspace among the remaining ones. Only the fact that the
//! labels differ is used, never the label values.

use crate::scalar::Scalar;

use super::DisError;

/// Index of the largest distance; ties resolve to the lowest index.
pub fn oracle_unsupervised<S: Scalar>(distances: &[S]) -> usize {
    let mut best = 0;
    for (i, &d) in distances.iter().enumerate().skip(1) {
        if d > distances[best] {
            best = i;
        }
    }
    best
}

/// Task-aware selection: `forced` when the labels differ, otherwise the
/// argmax over every other subspace (ties to the lowest index). Invariant to
/// any strictly monotone rescaling of the distances.
pub fn oracle_principal<S: Scalar>(
    distances: &[S],
    y1: usize,
    y2: usize,
    forced: usize,
) -> Result<usize, DisError> {
    debug_assert!(forced < distances.len());
    if y1 != y2 {
        return Ok(forced);
    }
    if distances.len() < 2 {
        return Err(DisError::NoFreeSubspace);
    }
    let mut best: Option<usize> = None;
    for (i, &d) in distances.iter().enumerate() {
        if i == forced {
            continue;
        }
        match best {
            Some(b) if distances[b] >= d => {}
            _ => best = Some(i),
        }
    }
    Ok(best.expect("at least one non-forced subspace"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unsupervised_picks_the_largest_distance() {
        assert_eq!(oracle_unsupervised(&[0.1, 5.0, 0.3]), 1);
    }

    #[test]
    fn unsupervised_breaks_ties_to_the_lowest_index() {
        assert_eq!(oracle_unsupervised(&[2.0, 2.0, 2.0]), 0);
    }

    #[test]
    fn differing_labels_always_select_the_forced_subspace() {
        assert_eq!(oracle_principal(&[9.0, 0.1, 3.0], 0, 1, 0).unwrap(), 0);
        assert_eq!(oracle_principal(&[0.0, 0.0, 0.0], 2, 3, 2).unwrap(), 2);
    }

    #[test]
    fn same_labels_pick_the_argmax_excluding_forced() {
        // forced subspace carries the largest distance but must be skipped
        assert_eq!(oracle_principal(&[9.0, 0.1, 3.0], 1, 1, 0).unwrap(), 2);
        // tie among the rest goes to the lowest index
        assert_eq!(oracle_principal(&[9.0, 3.0, 3.0], 1, 1, 0).unwrap(), 1);
    }

    #[test]
    fn single_subspace_with_same_labels_is_an_error() {
        assert!(matches!(
            oracle_principal(&[1.0], 0, 0, 0),
            Err(DisError::NoFreeSubspace)
        ));
        assert_eq!(oracle_principal(&[1.0], 0, 1, 0).unwrap(), 0);
    }
}
