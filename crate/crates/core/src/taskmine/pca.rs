//! Principal component projection via Jacobi eigendecomposition of the
//! covariance matrix. The component count is small (3 for the scatter
//! export), dimensions stay below ~100, and determinism matters more than
//! speed, so a dependency-free cyclic Jacobi sweep is plenty.

use super::MineError;

#[derive(Debug, Clone)]
pub struct PcaResult {
    /// `[n][out_dims]` coordinates of the centered data on the components.
    pub projected: Vec<Vec<f64>>,
    /// `[out_dims][d]` component directions; orthonormal up to the data's
    /// rank, zero-filled beyond it.
    pub components: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Eigenvalue per kept component, non-increasing.
    pub explained_variance: Vec<f64>,
    /// Kept eigenvalue over the total variance, non-increasing.
    pub explained_ratio: Vec<f64>,
    /// True when the requested components exceed the covariance rank.
    pub rank_deficient: bool,
}

pub fn pca_project(points: &[Vec<f64>], out_dims: usize) -> Result<PcaResult, MineError> {
    let n = points.len();
    if n == 0 {
        return Err(MineError::BadParams("no points".into()));
    }
    let d = points[0].len();
    if out_dims == 0 || out_dims > d {
        return Err(MineError::BadParams(format!(
            "out_dims {} outside 1..={}",
            out_dims, d
        )));
    }
    if points.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite())) {
        return Err(MineError::BadParams(
            "points must share a dimension and be finite".into(),
        ));
    }

    let mut mean = vec![0.0; d];
    for p in points {
        for c in 0..d {
            mean[c] += p[c];
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    // population covariance
    let mut cov = vec![vec![0.0; d]; d];
    for p in points {
        for i in 0..d {
            let di = p[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (p[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= n as f64;
            cov[j][i] = cov[i][j];
        }
    }

    let (mut eigenvalues, vectors) = jacobi_eigen(cov);
    // covariance is positive semidefinite; clear numeric negatives
    for e in eigenvalues.iter_mut() {
        if *e < 0.0 {
            *e = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigenvalues[b]
            .partial_cmp(&eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let total: f64 = eigenvalues.iter().sum();
    let max_eig = eigenvalues[order[0]];
    let rank_tol = max_eig * 1e-12;

    let mut components = Vec::with_capacity(out_dims);
    let mut explained_variance = Vec::with_capacity(out_dims);
    let mut explained_ratio = Vec::with_capacity(out_dims);
    let mut rank_deficient = false;
    for &idx in order.iter().take(out_dims) {
        let eig = eigenvalues[idx];
        if eig <= rank_tol || max_eig == 0.0 {
            rank_deficient = true;
            components.push(vec![0.0; d]);
            explained_variance.push(0.0);
            explained_ratio.push(0.0);
            continue;
        }
        let mut comp: Vec<f64> = (0..d).map(|r| vectors[r][idx]).collect();
        // canonical sign: the entry of largest magnitude is positive
        let pivot = comp
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if comp[pivot] < 0.0 {
            for v in comp.iter_mut() {
                *v = -*v;
            }
        }
        components.push(comp);
        explained_variance.push(eig);
        explained_ratio.push(if total > 0.0 { eig / total } else { 0.0 });
    }

    let projected = points
        .iter()
        .map(|p| {
            components
                .iter()
                .map(|comp| {
                    comp.iter()
                        .enumerate()
                        .map(|(c, &w)| w * (p[c] - mean[c]))
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(PcaResult {
        projected,
        components,
        mean,
        explained_variance,
        explained_ratio,
        rank_deficient,
    })
}

/// Cyclic Jacobi sweeps for a symmetric matrix; returns (eigenvalues,
/// column eigenvectors).
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.len();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a
        .iter()
        .enumerate()
        .map(|(i, row)| row[i].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let tol = 1e-14 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..d {
            for q in p + 1..d {
                off += a[p][q].abs();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..d - 1 {
            for q in p + 1..d {
                if a[p][q].abs() <= tol * 1e-2 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..d {
                    let (arp, arq) = (a[r][p], a[r][q]);
                    a[r][p] = c * arp - s * arq;
                    a[r][q] = s * arp + c * arq;
                }
                for col in 0..d {
                    let (apc, aqc) = (a[p][col], a[q][col]);
                    a[p][col] = c * apc - s * aqc;
                    a[q][col] = s * apc + c * aqc;
                }
                for r in 0..d {
                    let (vrp, vrq) = (v[r][p], v[r][q]);
                    v[r][p] = c * vrp - s * vrq;
                    v[r][q] = s * vrp + c * vrq;
                }
            }
        }
    }
    let eigenvalues = (0..d).map(|i| a[i][i]).collect();
    (eigenvalues, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_on_a_line_explain_everything_with_one_component() {
        let points: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = i as f64 * 0.3 - 3.0;
                vec![2.0 * t, -t, 0.5 * t]
            })
            .collect();
        let pca = pca_project(&points, 3).unwrap();
        assert!((pca.explained_ratio[0] - 1.0).abs() < 1e-12);
        assert!(pca.rank_deficient);
        assert_eq!(pca.components[1], vec![0.0; 3]);
    }

    #[test]
    fn full_dimensional_projection_is_lossless() {
        let points = vec![
            vec![1.0, 2.0, -1.0],
            vec![0.5, -0.3, 2.0],
            vec![-1.5, 0.8, 0.1],
            vec![2.2, 1.1, -0.7],
            vec![0.1, -1.9, 1.4],
        ];
        let pca = pca_project(&points, 3).unwrap();
        for (orig, proj) in points.iter().zip(&pca.projected) {
            for c in 0..3 {
                let mut rec = pca.mean[c];
                for (k, comp) in pca.components.iter().enumerate() {
                    rec += proj[k] * comp[c];
                }
                assert!((rec - orig[c]).abs() < 1e-9, "{} vs {}", rec, orig[c]);
            }
        }
    }

    #[test]
    fn explained_ratios_are_non_increasing() {
        let points: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.77).sin() * 3.0, (t * 0.31).cos(), (t * 1.3).sin() * 0.2, t % 2.0]
            })
            .collect();
        let pca = pca_project(&points, 4).unwrap();
        for w in pca.explained_ratio.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }

    #[test]
    fn out_dims_above_the_dimension_is_rejected() {
        assert!(pca_project(&[vec![1.0, 2.0]], 3).is_err());
    }
}
