//! Oracle tests for clustering and discovery: the naive reference, Kruskal
//! MST oracle, power-iteration PCA oracle, and constructed fixtures for
//! scoring and the stopping rule.

use detaux_core::gradcore::Tensor;
use detaux_core::nn::{Activation, Dense, Mlp};
use detaux_core::subspace::{DisModel, DistanceMetric};
use detaux_core::synthgen::TrainView;
use detaux_core::taskmine::{
    build_mst, core_distances, discover_aux_task, hdbscan, mine_clusters, naive::naive_hdbscan,
    pca_project, score_subspaces, ClusterAssignment, HdbscanParams, MineError,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian_blob(rng: &mut ChaCha8Rng, center: &[f64], sigma: f64, count: usize) -> Vec<Vec<f64>> {
    // Box-Muller pairs
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    (0..count)
        .map(|_| center.iter().map(|&c| c + sigma * normal(rng)).collect())
        .collect()
}

/// Noise sets identical and cluster labels equal up to a bijection.
fn equivalent_labelings(a: &ClusterAssignment, b: &ClusterAssignment) -> bool {
    if a.labels.len() != b.labels.len() || a.num_clusters != b.num_clusters {
        return false;
    }
    let mut fwd = std::collections::HashMap::new();
    let mut back = std::collections::HashMap::new();
    for (&la, &lb) in a.labels.iter().zip(&b.labels) {
        if (la < 0) != (lb < 0) {
            return false;
        }
        if la < 0 {
            continue;
        }
        if *fwd.entry(la).or_insert(lb) != lb || *back.entry(lb).or_insert(la) != la {
            return false;
        }
    }
    true
}

#[test]
fn two_well_separated_blobs_form_two_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut points = gaussian_blob(&mut rng, &[0.0, 0.0], 0.1, 100);
    points.extend(gaussian_blob(&mut rng, &[10.0, 0.0], 0.1, 100));
    let got = hdbscan(&points, &HdbscanParams::new(10)).unwrap();
    assert_eq!(got.num_clusters, 2);
    let non_noise = got.labels.iter().filter(|&&l| l >= 0).count();
    assert!(non_noise as f64 >= 0.95 * points.len() as f64, "{} noise", points.len() - non_noise);
    // members of each blob agree with each other
    let first = got.labels[0];
    assert!(got.labels[..100].iter().all(|&l| l == first));
    let second = got.labels[100];
    assert!(got.labels[100..].iter().all(|&l| l == second));
    assert_ne!(first, second);
    // and the naive reference agrees exactly
    let reference = naive_hdbscan(&points, &HdbscanParams::new(10));
    assert!(equivalent_labelings(&got, &reference));
}

#[test]
fn one_uniform_blob_is_a_single_cluster() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let points: Vec<Vec<f64>> = (0..120)
        .map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
        .collect();
    let got = hdbscan(&points, &HdbscanParams::new(12)).unwrap();
    assert_eq!(got.num_clusters, 1);
    let reference = naive_hdbscan(&points, &HdbscanParams::new(12));
    assert!(equivalent_labelings(&got, &reference));
}

#[test]
fn identical_points_collapse_to_one_cluster() {
    let points = vec![vec![0.5, -0.5]; 16];
    let got = hdbscan(&points, &HdbscanParams::new(2)).unwrap();
    assert_eq!(got.num_clusters, 1, "labels {:?}", got.labels);
    assert_eq!(got.noise_count(), 0);
}

#[test]
fn fast_and_naive_agree_on_seeded_random_instances() {
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let dims = rng.gen_range(2..=6);
        let blobs = rng.gen_range(1..=3);
        let mut points = Vec::new();
        for _ in 0..blobs {
            let center: Vec<f64> = (0..dims).map(|_| rng.gen_range(-8.0..8.0)).collect();
            let count = rng.gen_range(20..=50);
            let sigma = rng.gen_range(0.05..0.6);
            points.extend(gaussian_blob(&mut rng, &center, sigma, count));
        }
        let params = HdbscanParams::new(rng.gen_range(5..=12));
        let fast = hdbscan(&points, &params).unwrap();
        let reference = naive_hdbscan(&points, &params);
        assert!(
            equivalent_labelings(&fast, &reference),
            "seed {}: {:?} vs {:?}",
            seed,
            fast.labels,
            reference.labels
        );
    }
}

#[test]
fn prim_mst_weight_matches_exhaustive_kruskal() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let points: Vec<Vec<f64>> = (0..20)
        .map(|_| vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
        .collect();
    let core = core_distances(&points, 3);
    let prim: f64 = build_mst(&points, &core).iter().map(|e| e.weight).sum();

    // independent Kruskal over the full edge list
    let n = points.len();
    let mreach = |a: usize, b: usize| -> f64 {
        let d = detaux_core::linalg::euclidean(&points[a], &points[b]);
        core[a].max(core[b]).max(d)
    };
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            edges.push((mreach(a, b), a, b));
        }
    }
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut comp: Vec<usize> = (0..n).collect();
    let mut kruskal = 0.0;
    for (w, a, b) in edges {
        if comp[a] == comp[b] {
            continue;
        }
        kruskal += w;
        let (from, to) = (comp[b], comp[a]);
        for c in comp.iter_mut() {
            if *c == from {
                *c = to;
            }
        }
    }
    assert!((prim - kruskal).abs() < 1e-9, "{} vs {}", prim, kruskal);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn permuting_points_permutes_labels_consistently(seed in 0u64..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = gaussian_blob(&mut rng, &[0.0, 0.0], 0.3, 40);
        points.extend(gaussian_blob(&mut rng, &[6.0, 6.0], 0.3, 40));
        let params = HdbscanParams::new(8);
        let base = hdbscan(&points, &params).unwrap();

        // deterministic shuffle
        let n = points.len();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let j = rng.gen_range(i..n);
            perm.swap(i, j);
        }
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| points[i].clone()).collect();
        let moved = hdbscan(&shuffled, &params).unwrap();
        // pull the shuffled labels back into the original order
        let mut pulled = vec![0i64; n];
        for (new_pos, &old_pos) in perm.iter().enumerate() {
            pulled[old_pos] = moved.labels[new_pos];
        }
        let pulled = ClusterAssignment {
            labels: pulled,
            num_clusters: moved.num_clusters,
            cluster_sizes: moved.cluster_sizes.clone(),
            stabilities: moved.stabilities.clone(),
        };
        prop_assert!(equivalent_labelings(&base, &pulled));
    }

    #[test]
    fn every_cluster_meets_the_minimum_size(seed in 0u64..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(20..80);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])
            .collect();
        let mcs = rng.gen_range(3..10);
        let got = hdbscan(&points, &HdbscanParams::new(mcs)).unwrap();
        for (label, &size) in got.cluster_sizes.iter().enumerate() {
            prop_assert!(size >= mcs, "cluster {} has {} < {}", label, size, mcs);
        }
        let labeled: usize = got.cluster_sizes.iter().sum();
        prop_assert_eq!(labeled + got.noise_count(), n);
    }
}

// ── subspace scoring on constructed models ──────────────────────────

fn identity_mlp(d: usize) -> Mlp<f64> {
    let mut w = vec![0.0; d * d];
    for i in 0..d {
        w[i * d + i] = 1.0;
    }
    Mlp::from_layers(
        vec![Dense {
            weight: Tensor::matrix(d, d, w).unwrap(),
            bias: Tensor::zeros(&[d]),
        }],
        vec![Activation::Linear],
    )
}

fn coordinate_projector_model(d: usize) -> DisModel<f64> {
    let projectors = (0..d)
        .map(|i| {
            let mut p = vec![0.0; d * d];
            p[i * d + i] = 1.0;
            Tensor::matrix(d, d, p).unwrap()
        })
        .collect();
    DisModel::from_parts(identity_mlp(d), identity_mlp(d), projectors).unwrap()
}

fn view_from(pixels: &[Vec<f32>], labels: Vec<usize>, classes: usize) -> TrainView<'_> {
    let refs: Vec<&[f32]> = pixels.iter().map(|p| p.as_slice()).collect();
    TrainView::from_parts(refs, labels, classes).unwrap()
}

#[test]
fn scoring_selects_the_subspace_carrying_the_variation() {
    let model = coordinate_projector_model(4);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 0..40 {
        let label = i % 2;
        // same-label pairs differ only in coordinate 2
        pixels.push(vec![label as f32, 0.3, rng.gen_range(-1.0f64..1.0) as f32, 0.7]);
        labels.push(label);
    }
    let view = view_from(&pixels, labels, 2);
    let (scores, winner) =
        score_subspaces(&model, &view, 0, DistanceMetric::L2, 200, 5).unwrap();
    assert_eq!(winner, 2);
    assert_eq!(scores.len(), 3);
    assert!(scores.iter().all(|s| s.subspace != 0));
    let winning = scores.iter().find(|s| s.subspace == 2).unwrap();
    assert!(winning.mean_share > 0.9, "share {}", winning.mean_share);
}

#[test]
fn scoring_ties_resolve_to_the_lowest_non_forced_subspace() {
    let model = coordinate_projector_model(4);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 0..40 {
        let t = rng.gen_range(-1.0f64..1.0) as f32;
        pixels.push(vec![(i % 2) as f32, t, t, t]);
        labels.push(i % 2);
    }
    let view = view_from(&pixels, labels, 2);
    let (_, winner) = score_subspaces(&model, &view, 0, DistanceMetric::L2, 150, 6).unwrap();
    assert_eq!(winner, 1);
}

#[test]
fn scoring_requires_enough_pairs_and_multiple_subspaces() {
    let model = coordinate_projector_model(4);
    let pixels: Vec<Vec<f32>> = (0..8).map(|i| vec![i as f32, 0.0, 0.0, 0.0]).collect();
    let view = view_from(&pixels, vec![0, 0, 0, 0, 1, 1, 1, 1], 2);
    assert!(matches!(
        score_subspaces(&model, &view, 0, DistanceMetric::L2, 50, 1),
        Err(MineError::BadParams(_))
    ));
}

// ── stopping rule ───────────────────────────────────────────────────

#[test]
fn two_planted_clusters_give_a_two_class_task() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut points = gaussian_blob(&mut rng, &[0.0, 0.0, 0.0], 0.2, 60);
    points.extend(gaussian_blob(&mut rng, &[8.0, 0.0, 0.0], 0.2, 60));
    let (assignment, task) = mine_clusters(&points, &HdbscanParams::new(10), 3).unwrap();
    let task = task.expect("two blobs should produce a task");
    assert_eq!(task.num_classes, 2);
    assert_eq!(task.subspace, 3);
    assert_eq!(task.labels, assignment.labels);
}

#[test]
fn a_single_cluster_embedding_stops_the_procedure() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let points = gaussian_blob(&mut rng, &[1.0, 1.0], 0.3, 80);
    let (assignment, task) = mine_clusters(&points, &HdbscanParams::new(10), 1).unwrap();
    assert_eq!(assignment.num_clusters, 1);
    assert!(task.is_none());
}

#[test]
fn an_embedding_smaller_than_the_cluster_floor_stops_the_procedure() {
    let points = vec![vec![0.0], vec![1.0], vec![2.0]];
    let (assignment, task) = mine_clusters(&points, &HdbscanParams::new(5), 0).unwrap();
    assert_eq!(assignment.labels, vec![-1, -1, -1]);
    assert!(task.is_none());
}

#[test]
fn discovery_on_a_constant_model_returns_no_task() {
    // zero encoder: every sample lands on the same latent point
    let d = 3;
    let zero_encoder = Mlp::from_layers(
        vec![Dense {
            weight: Tensor::<f64>::zeros(&[d, d]),
            bias: Tensor::zeros(&[d]),
        }],
        vec![Activation::Linear],
    );
    let model = DisModel::from_parts(
        zero_encoder,
        identity_mlp(d),
        (0..d)
            .map(|i| {
                let mut p = vec![0.0; d * d];
                p[i * d + i] = 1.0;
                Tensor::matrix(d, d, p).unwrap()
            })
            .collect(),
    )
    .unwrap();
    let pixels: Vec<Vec<f32>> = (0..30)
        .map(|i| vec![i as f32 * 0.1, 0.5, -0.5])
        .collect();
    let labels: Vec<usize> = (0..30).map(|i| i % 2).collect();
    let view = view_from(&pixels, labels, 2);
    let options = detaux_core::taskmine::MiningOptions {
        min_cluster_fraction: 0.1,
        score_pairs: 120,
        ..Default::default()
    };
    let discovery =
        discover_aux_task(&model, &view, 0, DistanceMetric::L2, &options, 3).unwrap();
    assert!(discovery.task.is_none(), "{:?}", discovery.assignment);
    assert!(discovery.assignment.num_clusters <= 1);
}

// ── PCA against a power-iteration oracle ────────────────────────────

#[test]
fn pca_matches_power_iteration_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let n = 80;
    let d = 10;
    // anisotropic data: coordinate scales fall off geometrically
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|c| rng.gen_range(-1.0..1.0) * 3.0_f64.powi(-(c as i32) / 2))
                .collect()
        })
        .collect();
    let pca = pca_project(&points, 3).unwrap();

    // oracle: covariance + power iteration with deflation
    let mut mean = vec![0.0; d];
    for p in &points {
        for c in 0..d {
            mean[c] += p[c] / n as f64;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for p in &points {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]) / n as f64;
            }
        }
    }
    let mut deflated = cov.clone();
    for comp in 0..3 {
        let mut v = vec![1.0 / (d as f64).sqrt(); d];
        let mut eig = 0.0;
        for _ in 0..10_000 {
            let mut next = vec![0.0; d];
            for i in 0..d {
                for j in 0..d {
                    next[i] += deflated[i][j] * v[j];
                }
            }
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in next.iter_mut() {
                *x /= norm;
            }
            eig = norm;
            let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            v = next;
            if delta < 1e-13 {
                break;
            }
        }
        assert!(
            (pca.explained_variance[comp] - eig).abs() <= 1e-6,
            "component {}: {} vs {}",
            comp,
            pca.explained_variance[comp],
            eig
        );
        for i in 0..d {
            for j in 0..d {
                deflated[i][j] -= eig * v[i] * v[j];
            }
        }
    }
}

#[test]
fn pca_components_are_orthonormal() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let points: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let pca = pca_project(&points, 4).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let dot: f64 = pca.components[i]
                .iter()
                .zip(&pca.components[j])
                .map(|(a, b)| a * b)
                .sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() <= 1e-8, "gram[{}][{}] = {}", i, j, dot);
        }
    }
}
