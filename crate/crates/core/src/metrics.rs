//! Label-agreement metrics used by evaluation and reporting.

use std::collections::HashMap;

/// Normalized mutual information with arithmetic-mean normalization:
/// `2 * I(A; B) / (H(A) + H(B))`. Returns 1 when both labelings are
/// constant, 0 when only one of them is.
pub fn normalized_mutual_information(a: &[i64], b: &[i64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let mut count_a: HashMap<i64, f64> = HashMap::new();
    let mut count_b: HashMap<i64, f64> = HashMap::new();
    let mut joint: HashMap<(i64, i64), f64> = HashMap::new();
    for i in 0..n {
        *count_a.entry(a[i]).or_default() += 1.0;
        *count_b.entry(b[i]).or_default() += 1.0;
        *joint.entry((a[i], b[i])).or_default() += 1.0;
    }
    let nf = n as f64;
    let entropy = |counts: &HashMap<i64, f64>| -> f64 {
        counts
            .values()
            .map(|&c| {
                let p = c / nf;
                -p * p.ln()
            })
            .sum()
    };
    let (ha, hb) = (entropy(&count_a), entropy(&count_b));
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for (&(la, lb), &c) in &joint {
        let p = c / nf;
        let pa = count_a[&la] / nf;
        let pb = count_b[&lb] / nf;
        mi += p * (p / (pa * pb)).ln();
    }
    (2.0 * mi / (ha + hb)).clamp(0.0, 1.0)
}

/// NMI between mined labels and a reference factor, restricted to samples
/// the mining did not mark as noise. Returns the score and the fraction of
/// noise samples that were excluded.
pub fn nmi_excluding_noise(mined: &[i64], reference: &[i64]) -> (f64, f64) {
    assert_eq!(mined.len(), reference.len());
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..mined.len() {
        if mined[i] >= 0 {
            a.push(mined[i]);
            b.push(reference[i]);
        }
    }
    let noise_fraction = 1.0 - a.len() as f64 / mined.len().max(1) as f64;
    (normalized_mutual_information(&a, &b), noise_fraction)
}
