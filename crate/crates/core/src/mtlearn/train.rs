//! STL/MTL training loops and evaluation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gradcore::{AdamW, AdamWConfig, Tape, Tensor, Var};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;
use crate::synthgen::TrainView;

use super::loss::{multi_task_loss, TaskWeights};
use super::report::{EpochLoss, RunReport};
use super::{MtlError, MtlModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtlConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub hidden_dims: Vec<usize>,
    pub weights: TaskWeights,
    /// Learn per-task log-variance weights instead of the fixed ones.
    pub uncertainty_weighting: bool,
}

impl Default for MtlConfig {
    fn default() -> Self {
        Self {
            epochs: 150,
            batch_size: 32,
            learning_rate: 0.0005,
            weight_decay: 0.01,
            hidden_dims: vec![256, 128],
            weights: TaskWeights::default(),
            uncertainty_weighting: false,
        }
    }
}

impl MtlConfig {
    pub fn validate(&self) -> Result<(), MtlError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(MtlError::Config("epochs and batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(MtlError::Config(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.hidden_dims.is_empty() {
            return Err(MtlError::Config("hidden_dims must not be empty".into()));
        }
        self.weights.validate()
    }
}

/// Train the two-head model on principal labels plus mined auxiliary labels
/// (aligned with the view; `-1` entries are ignored by the auxiliary loss).
pub fn train_mtl<S: Scalar>(
    train: &TrainView,
    test: &TrainView,
    aux_labels: &[i64],
    aux_classes: usize,
    cfg: &MtlConfig,
    seed: u64,
) -> Result<(MtlModel<S>, RunReport), MtlError> {
    if aux_labels.len() != train.len() {
        return Err(MtlError::MisalignedAuxLabels {
            got: aux_labels.len(),
            want: train.len(),
        });
    }
    let report = train_inner::<S>(train, test, Some((aux_labels, aux_classes)), cfg, seed, "mtl");
    report.map(|(model, mut rep)| {
        rep.aux_classes = Some(aux_classes);
        (model, rep)
    })
}

/// Single-task baseline with the same trunk, schedule, and seed handling.
pub fn train_stl<S: Scalar>(
    train: &TrainView,
    test: &TrainView,
    cfg: &MtlConfig,
    seed: u64,
) -> Result<(MtlModel<S>, RunReport), MtlError> {
    train_inner::<S>(train, test, None, cfg, seed, "stl")
}

fn train_inner<S: Scalar>(
    train: &TrainView,
    test: &TrainView,
    aux: Option<(&[i64], usize)>,
    cfg: &MtlConfig,
    seed: u64,
    mode: &str,
) -> Result<(MtlModel<S>, RunReport), MtlError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(MtlError::EmptySplit);
    }
    let mut model = MtlModel::<S>::init(
        train.input_dim(),
        &cfg.hidden_dims,
        train.num_classes(),
        aux.map(|(_, c)| c),
        seed,
    )?;
    let mut opt = AdamW::new(AdamWConfig {
        learning_rate: cfg.learning_rate,
        weight_decay: cfg.weight_decay,
        ..Default::default()
    });
    // learned log-variance weights, optional
    let mut log_vars = if cfg.uncertainty_weighting {
        Some((Tensor::scalar(S::zero()), Tensor::scalar(S::zero())))
    } else {
        None
    };

    let n = train.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = stream_rng(seed, Stream::Batches, epoch as u64);
        for i in 0..n {
            let j = rng.gen_range(i..n);
            order.swap(i, j);
        }
        let mut sums = (0.0f64, 0.0f64, 0.0f64);
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let (total, main, aux_term) =
                step(&mut model, train, aux, chunk, cfg, &mut opt, &mut log_vars)?;
            if !total.is_finite() {
                return Err(MtlError::NanLoss { epoch });
            }
            sums.0 += total;
            sums.1 += main;
            sums.2 += aux_term;
            batches += 1;
        }
        let inv = 1.0 / batches as f64;
        epoch_losses.push(EpochLoss {
            epoch,
            total: sums.0 * inv,
            main: sums.1 * inv,
            aux: aux.map(|_| sums.2 * inv),
        });
    }

    let train_accuracy_main = evaluate(&model, train)?;
    let test_accuracy_main = evaluate(&model, test)?;
    let train_accuracy_aux = match aux {
        Some((labels, _)) => evaluate_aux(&model, train, labels)?,
        None => None,
    };
    let report = RunReport {
        mode: mode.to_string(),
        seed,
        train_accuracy_main,
        test_accuracy_main,
        train_accuracy_aux,
        aux_classes: None,
        aux_noise_fraction: None,
        aux_nmi: None,
        covariance_diag: None,
        epoch_losses,
        config: cfg.clone(),
    };
    Ok((model, report))
}

#[allow(clippy::too_many_arguments)]
fn step<S: Scalar>(
    model: &mut MtlModel<S>,
    view: &TrainView,
    aux: Option<(&[i64], usize)>,
    chunk: &[usize],
    cfg: &MtlConfig,
    opt: &mut AdamW<S>,
    log_vars: &mut Option<(Tensor<S>, Tensor<S>)>,
) -> Result<(f64, f64, f64), MtlError> {
    let x = view.batch_tensor::<S>(chunk);
    let labels_main: Vec<usize> = chunk.iter().map(|&i| view.label(i)).collect();
    let mut tape = Tape::new();
    let staged = model.stage(&mut tape);
    let xv = tape.leaf(x);
    let (logits_main, logits_aux) = staged.forward(&mut tape, xv)?;

    let batch_aux: Option<Vec<i64>> =
        aux.map(|(labels, _)| chunk.iter().map(|&i| labels[i]).collect());

    let mut lv_vars: Option<(Var, Var)> = None;
    let (total, main_val, aux_val) = match (log_vars.as_ref(), logits_aux, &batch_aux) {
        (Some((sm_t, sa_t)), Some(la), Some(labels)) => {
            // learned weighting: exp(-s_m)*L_m + s_m + exp(-s_a)*L_a + s_a
            let ce_main = tape.softmax_cross_entropy(logits_main, &labels_main)?;
            let mean_main = tape.mean(ce_main);
            let main_val = tape.value(mean_main).item().as_f64();
            let aux_mean = masked_aux_mean(&mut tape, la, labels)?;
            let aux_val = tape.value(aux_mean).item().as_f64();
            let sm = tape.leaf(sm_t.clone());
            let sa = tape.leaf(sa_t.clone());
            lv_vars = Some((sm, sa));
            let neg_sm = tape.scale(sm, -S::one());
            let wm = tape.exp(neg_sm);
            let term_m = tape.mul(wm, mean_main)?;
            let neg_sa = tape.scale(sa, -S::one());
            let wa = tape.exp(neg_sa);
            let term_a = tape.mul(wa, aux_mean)?;
            let mut total = tape.add(term_m, term_a)?;
            total = tape.add(total, sm)?;
            total = tape.add(total, sa)?;
            (total, main_val, aux_val)
        }
        (_, la, labels) => {
            let ce_main = tape.softmax_cross_entropy(logits_main, &labels_main)?;
            let mean_main = tape.mean(ce_main);
            let main_val = tape.value(mean_main).item().as_f64();
            let aux_pair = match (la, labels) {
                (Some(l), Some(lab)) => Some((l, lab.as_slice())),
                _ => None,
            };
            let total = multi_task_loss(
                &mut tape,
                logits_main,
                &labels_main,
                aux_pair,
                &cfg.weights,
            )?;
            let aux_val = match aux_pair {
                Some(_) => tape.value(total).item().as_f64() - cfg.weights.main * main_val,
                None => 0.0,
            };
            (total, main_val, aux_val)
        }
    };

    let total_val = tape.value(total).item().as_f64();
    let mut grads = tape.backward(total)?;
    let vars = staged.param_vars();
    let mut params = model.params_mut();
    let mut grad_tensors: Vec<Tensor<S>> = vars
        .iter()
        .zip(params.iter())
        .map(|(&v, p)| grads.take_or_zeros(v, p.shape()))
        .collect();
    if let (Some((sm, sa)), Some((sm_t, sa_t))) = (lv_vars, log_vars.as_mut()) {
        grad_tensors.push(grads.take_or_zeros(sm, &[]));
        grad_tensors.push(grads.take_or_zeros(sa, &[]));
        params.push(sm_t);
        params.push(sa_t);
    }
    opt.step(&mut params, &grad_tensors)?;
    Ok((total_val, main_val, aux_val))
}

fn masked_aux_mean<S: Scalar>(
    tape: &mut Tape<S>,
    logits_aux: Var,
    labels: &[i64],
) -> Result<Var, MtlError> {
    let classes = *tape.value(logits_aux).shape().last().unwrap();
    let mut mask = Vec::with_capacity(labels.len());
    let mut safe = Vec::with_capacity(labels.len());
    let mut valid = 0usize;
    for &l in labels {
        if l < 0 {
            mask.push(S::zero());
            safe.push(0);
        } else {
            if l as usize >= classes {
                return Err(MtlError::AuxLabelOutOfRange { label: l, classes });
            }
            mask.push(S::one());
            safe.push(l as usize);
            valid += 1;
        }
    }
    if valid == 0 {
        return Ok(tape.leaf(Tensor::scalar(S::zero())));
    }
    let ce = tape.softmax_cross_entropy(logits_aux, &safe)?;
    let mask_var = tape.leaf(Tensor::vector(mask));
    let masked = tape.mul(ce, mask_var)?;
    let sum = tape.sum(masked);
    Ok(tape.scale(sum, S::from_f64(1.0 / valid as f64)))
}

/// Accuracy of argmax predictions, ties to the lowest class index.
pub fn accuracy_from_logits(logits: &[Vec<f64>], labels: &[usize]) -> f64 {
    assert_eq!(logits.len(), labels.len());
    if logits.is_empty() {
        return 0.0;
    }
    let mut correct = 0usize;
    for (row, &label) in logits.iter().zip(labels) {
        let mut best = 0usize;
        for (c, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = c;
            }
        }
        if best == label {
            correct += 1;
        }
    }
    correct as f64 / labels.len() as f64
}

/// Principal-task accuracy over a split.
pub fn evaluate<S: Scalar>(model: &MtlModel<S>, view: &TrainView) -> Result<f64, MtlError> {
    if view.is_empty() {
        return Err(MtlError::EmptySplit);
    }
    let idxs: Vec<usize> = (0..view.len()).collect();
    let mut logits = Vec::with_capacity(view.len());
    let mut labels = Vec::with_capacity(view.len());
    for chunk in idxs.chunks(256) {
        let (main, _) = model.forward(&view.batch_tensor::<S>(chunk));
        let c = model.num_classes_main();
        for (r, &i) in chunk.iter().enumerate() {
            logits.push(main.data()[r * c..(r + 1) * c].iter().map(|v| v.as_f64()).collect());
            labels.push(view.label(i));
        }
    }
    Ok(accuracy_from_logits(&logits, &labels))
}

/// Auxiliary accuracy over the non-noise samples of a split; `None` when the
/// model has no auxiliary head or every label is noise.
pub fn evaluate_aux<S: Scalar>(
    model: &MtlModel<S>,
    view: &TrainView,
    aux_labels: &[i64],
) -> Result<Option<f64>, MtlError> {
    if aux_labels.len() != view.len() {
        return Err(MtlError::MisalignedAuxLabels {
            got: aux_labels.len(),
            want: view.len(),
        });
    }
    let classes = match model.num_classes_aux() {
        Some(c) => c,
        None => return Ok(None),
    };
    let idxs: Vec<usize> = (0..view.len())
        .filter(|&i| aux_labels[i] >= 0)
        .collect();
    if idxs.is_empty() {
        return Ok(None);
    }
    let mut logits = Vec::with_capacity(idxs.len());
    let mut labels = Vec::with_capacity(idxs.len());
    for chunk in idxs.chunks(256) {
        let (_, aux) = model.forward(&view.batch_tensor::<S>(chunk));
        let aux = aux.expect("aux head present");
        for (r, &i) in chunk.iter().enumerate() {
            logits.push(aux.data()[r * classes..(r + 1) * classes].iter().map(|v| v.as_f64()).collect());
            labels.push(aux_labels[i] as usize);
        }
    }
    Ok(Some(accuracy_from_logits(&logits, &labels)))
}
