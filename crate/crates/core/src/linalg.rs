//! Dense row-major matrix kernels shared by the tape operations and the
//! plain (inference) forward paths.
//!
//! Everything here is sequential with a fixed accumulation order, so results
//! are bit-reproducible across runs.

use crate::scalar::Scalar;

/// c[m,n] += a[m,k] @ b[k,n]
pub fn matmul_acc<S: Scalar>(a: &[S], b: &[S], c: &mut [S], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let c_row = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == S::zero() {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for j in 0..n {
                c_row[j] += aip * b_row[j];
            }
        }
    }
}

/// a[m,k] @ b[k,n] -> [m,n]
pub fn matmul<S: Scalar>(a: &[S], b: &[S], m: usize, k: usize, n: usize) -> Vec<S> {
    let mut c = vec![S::zero(); m * n];
    matmul_acc(a, b, &mut c, m, k, n);
    c
}

/// a[m,k] @ b[n,k]^T -> [m,n] (rows of both operands are contiguous)
pub fn matmul_bt<S: Scalar>(a: &[S], b: &[S], m: usize, k: usize, n: usize) -> Vec<S> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    let mut c = vec![S::zero(); m * n];
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let b_row = &b[j * k..(j + 1) * k];
            let mut acc = S::zero();
            for p in 0..k {
                acc += a_row[p] * b_row[p];
            }
            c[i * n + j] = acc;
        }
    }
    c
}

/// a[k,m]^T @ b[k,n] -> [m,n]
pub fn matmul_at<S: Scalar>(a: &[S], b: &[S], m: usize, k: usize, n: usize) -> Vec<S> {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    let mut c = vec![S::zero(); m * n];
    for p in 0..k {
        let a_row = &a[p * m..(p + 1) * m];
        let b_row = &b[p * n..(p + 1) * n];
        for i in 0..m {
            let api = a_row[i];
            if api == S::zero() {
                continue;
            }
            let c_row = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                c_row[j] += api * b_row[j];
            }
        }
    }
    c
}

/// Squared Euclidean distance between two equal-length slices.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc
}

/// Euclidean distance between two equal-length slices.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_against_naive() {
        let a: Vec<f64> = (0..6).map(|x| x as f64 + 0.5).collect(); // 2x3
        let b: Vec<f64> = (0..12).map(|x| (x as f64) * 0.25 - 1.0).collect(); // 3x4
        let c = matmul(&a, &b, 2, 3, 4);
        for i in 0..2 {
            for j in 0..4 {
                let mut want = 0.0;
                for p in 0..3 {
                    want += a[i * 3 + p] * b[p * 4 + j];
                }
                assert!((c[i * 4 + j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transposed_variants_agree() {
        let a: Vec<f64> = (0..6).map(|x| x as f64).collect(); // 2x3
        let b: Vec<f64> = (0..6).map(|x| 1.0 - x as f64).collect(); // 2x3
        // a^T @ b : [3,3]
        let c = matmul_at(&a, &b, 3, 2, 3);
        for i in 0..3 {
            for j in 0..3 {
                let want = a[i] * b[j] + a[3 + i] * b[3 + j];
                assert!((c[i * 3 + j] - want).abs() < 1e-12);
            }
        }
        // a @ b^T : [2,2]
        let d = matmul_bt(&a, &b, 2, 3, 2);
        for i in 0..2 {
            for j in 0..2 {
                let mut want = 0.0;
                for p in 0..3 {
                    want += a[i * 3 + p] * b[j * 3 + p];
                }
                assert!((d[i * 2 + j] - want).abs() < 1e-12);
            }
        }
    }
}
