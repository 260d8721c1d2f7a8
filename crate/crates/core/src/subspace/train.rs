//! Training loop for the disentanglement model.

use crate::gradcore::{AdamW, AdamWConfig, Tape, Tensor};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;
use crate::synthgen::{sample_pairs, Pair, TrainView};

use super::losses::{
    balance, consistency, distance_contrast, pair_distances, reconstruction, sparsity,
};
use super::oracle::oracle_principal;
use super::{DisError, DisModel, DistanceMetric, StagedDisModel, SubspaceConfig};

/// Mean loss terms over one epoch. During warm-up only the reconstruction
/// term is optimized and the others are exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub reconstruction: f64,
    pub distance: f64,
    pub sparsity: f64,
    pub consistency: f64,
    pub balance: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

/// Train in place. Pairs are re-sampled every epoch from a per-epoch stream;
/// batches run sequentially, so the whole call is deterministic in
/// `(model init, view, config, seed)`.
pub fn train<S: Scalar>(
    model: &mut DisModel<S>,
    view: &TrainView,
    cfg: &SubspaceConfig,
    seed: u64,
) -> Result<TrainHistory, DisError> {
    cfg.validate()?;
    if view.is_empty() {
        return Err(DisError::Config("empty training view".into()));
    }
    if view.input_dim() != model.input_dim() {
        return Err(DisError::Config(format!(
            "view dim {} vs model input {}",
            view.input_dim(),
            model.input_dim()
        )));
    }
    let mut opt = AdamW::new(AdamWConfig {
        learning_rate: cfg.learning_rate,
        weight_decay: cfg.weight_decay,
        ..Default::default()
    });
    let mut history = TrainHistory::default();
    for epoch in 0..cfg.epochs {
        let warmup = epoch < cfg.warmup_epochs;
        let mut rng = stream_rng(seed, Stream::PairSampling, epoch as u64);
        let pairs = sample_pairs(view, cfg.pairs_per_epoch, 0.5, &mut rng)?;
        let mut sums = [0.0f64; 6];
        let mut batches = 0usize;
        for chunk in pairs.pairs.chunks(cfg.batch_pairs) {
            let terms = step(model, view, cfg, chunk, warmup, &mut opt)?;
            const NAMES: [&str; 6] = [
                "reconstruction",
                "distance",
                "sparsity",
                "consistency",
                "balance",
                "total",
            ];
            for (t, name) in terms.iter().zip(NAMES) {
                if !t.is_finite() {
                    return Err(DisError::NanLoss { term: name, epoch });
                }
            }
            for (s, t) in sums.iter_mut().zip(terms) {
                *s += t;
            }
            batches += 1;
        }
        let inv = 1.0 / batches as f64;
        history.epochs.push(EpochStats {
            epoch,
            reconstruction: sums[0] * inv,
            distance: sums[1] * inv,
            sparsity: sums[2] * inv,
            consistency: sums[3] * inv,
            balance: sums[4] * inv,
            total: sums[5] * inv,
        });
    }
    Ok(history)
}

fn step<S: Scalar>(
    model: &mut DisModel<S>,
    view: &TrainView,
    cfg: &SubspaceConfig,
    chunk: &[Pair],
    warmup: bool,
    opt: &mut AdamW<S>,
) -> Result<[f64; 6], DisError> {
    let b = chunk.len();
    let mut idxs = Vec::with_capacity(2 * b);
    idxs.extend(chunk.iter().map(|p| p.a));
    idxs.extend(chunk.iter().map(|p| p.b));
    let batch = view.batch_tensor::<S>(&idxs);

    let mut tape = Tape::new();
    let staged = model.stage(&mut tape);
    let x = tape.leaf(batch);
    let z = staged.encode(&mut tape, x)?;
    let projections = staged.project_all(&mut tape, z)?;
    let z_agg = StagedDisModel::aggregate(&mut tape, &projections)?;
    let recon = staged.decode(&mut tape, z_agg)?;
    let l_rec = reconstruction(&mut tape, x, recon)?;

    let scalar_of = |tape: &Tape<S>, v| -> f64 { tape.value(v).item().as_f64() };

    let (total, terms) = if warmup {
        let rec = scalar_of(&tape, l_rec);
        (l_rec, [rec, 0.0, 0.0, 0.0, 0.0, rec])
    } else {
        let pd = pair_distances(&mut tape, &projections, b, cfg.distance)?;
        let selected = chunk
            .iter()
            .zip(&pd.values)
            .map(|(p, vals)| oracle_principal(vals, p.y1, p.y2, cfg.forced_subspace))
            .collect::<Result<Vec<_>, _>>()?;
        let l_dist = distance_contrast(&mut tape, &pd, &selected, cfg.margin)?;
        let l_spar = sparsity(&mut tape, &projections)?;
        let l_cons = consistency(&mut tape, &staged, &pd, &selected)?;
        let same: Vec<bool> = chunk.iter().map(|p| p.y1 == p.y2).collect();
        let l_reg = balance(&mut tape, &pd, &same, cfg.forced_subspace, cfg.temperature)?;

        let dist_spar = tape.add(l_dist, l_spar)?;
        let w_contrast = tape.scale(dist_spar, S::from_f64(cfg.contrast_weight));
        let w_cons = tape.scale(l_cons, S::from_f64(cfg.consistency_weight));
        let w_reg = tape.scale(l_reg, S::from_f64(cfg.balance_weight));
        let mut total = tape.add(l_rec, w_contrast)?;
        total = tape.add(total, w_cons)?;
        total = tape.add(total, w_reg)?;
        let terms = [
            scalar_of(&tape, l_rec),
            scalar_of(&tape, l_dist),
            scalar_of(&tape, l_spar),
            scalar_of(&tape, l_cons),
            scalar_of(&tape, l_reg),
            scalar_of(&tape, total),
        ];
        (total, terms)
    };

    let mut grads = tape.backward(total)?;
    let vars = staged.param_vars();
    let mut params = model.params_mut();
    let grad_tensors: Vec<Tensor<S>> = vars
        .iter()
        .zip(params.iter())
        .map(|(&v, p)| grads.take_or_zeros(v, p.shape()))
        .collect();
    opt.step(&mut params, &grad_tensors)?;
    Ok(terms)
}

/// Post-hoc separation diagnostic on the forced subspace: mean distance over
/// differing-label pairs vs same-label pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationStats {
    pub mean_differing: f64,
    pub mean_same: f64,
    /// `mean_differing / mean_same`; infinite when same-label pairs collapse.
    pub ratio: f64,
    pub pairs: usize,
}

pub fn separation_stats<S: Scalar>(
    model: &DisModel<S>,
    view: &TrainView,
    forced: usize,
    metric: DistanceMetric,
    num_pairs: usize,
    seed: u64,
) -> Result<SeparationStats, DisError> {
    let rows = model.project_view(view, forced, 256);
    let mut rng = stream_rng(seed, Stream::Eval, 0);
    let pairs = sample_pairs(view, num_pairs, 0.5, &mut rng)?;
    let (mut sum_diff, mut n_diff) = (0.0, 0usize);
    let (mut sum_same, mut n_same) = (0.0, 0usize);
    for p in &pairs.pairs {
        let d = row_distance(&rows[p.a], &rows[p.b], metric);
        if p.same {
            sum_same += d;
            n_same += 1;
        } else {
            sum_diff += d;
            n_diff += 1;
        }
    }
    let mean_differing = if n_diff > 0 { sum_diff / n_diff as f64 } else { 0.0 };
    let mean_same = if n_same > 0 { sum_same / n_same as f64 } else { 0.0 };
    let ratio = if mean_same > 0.0 {
        mean_differing / mean_same
    } else {
        f64::INFINITY
    };
    Ok(SeparationStats {
        mean_differing,
        mean_same,
        ratio,
        pairs: pairs.pairs.len(),
    })
}

fn row_distance(a: &[f64], b: &[f64], metric: DistanceMetric) -> f64 {
    match metric {
        DistanceMetric::L2 => crate::linalg::euclidean(a, b),
        DistanceMetric::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
    }
}
