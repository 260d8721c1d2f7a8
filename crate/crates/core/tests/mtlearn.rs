//! Oracle tests for the multi-task classifier: independent cross-entropy
//! computation, trajectory identity against the single-task baseline, and a
//! separable sanity run.

use detaux_core::gradcore::{grad_check, Tape, Tensor, Var};
use detaux_core::mtlearn::{
    accuracy_from_logits, evaluate, multi_task_loss, train_mtl, train_stl, MtlConfig, MtlError,
    TaskWeights,
};
use detaux_core::synthgen::TrainView;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn naive_softmax_ce(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
    max + z.ln() - logits[label]
}

fn rand_logits(rng: &mut ChaCha8Rng, batch: usize, classes: usize) -> Tensor<f64> {
    Tensor::matrix(
        batch,
        classes,
        (0..batch * classes).map(|_| rng.gen_range(-2.0..2.0)).collect(),
    )
    .unwrap()
}

#[test]
fn zero_aux_weight_equals_plain_cross_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let main = rand_logits(&mut rng, 5, 3);
    let aux = rand_logits(&mut rng, 5, 4);
    let labels = vec![0, 2, 1, 1, 0];
    let aux_labels = vec![3, 0, 1, 2, 3];

    let mut tape = Tape::new();
    let lm = tape.leaf(main.clone());
    let la = tape.leaf(aux);
    let weights = TaskWeights { main: 1.0, aux: 0.0 };
    let total = multi_task_loss(&mut tape, lm, &labels, Some((la, &aux_labels)), &weights).unwrap();

    let want: f64 = labels
        .iter()
        .enumerate()
        .map(|(r, &y)| naive_softmax_ce(&main.data()[r * 3..(r + 1) * 3], y))
        .sum::<f64>()
        / 5.0;
    assert!((tape.value(total).item() - want).abs() < 1e-12);
}

#[test]
fn fully_masked_aux_labels_contribute_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let main = rand_logits(&mut rng, 4, 3);
    let aux = rand_logits(&mut rng, 4, 2);
    let labels = vec![0, 1, 2, 0];
    let masked = vec![-1i64; 4];

    let mut tape = Tape::new();
    let lm = tape.leaf(main);
    let la = tape.leaf(aux);
    let weights = TaskWeights::default();
    let with_aux =
        multi_task_loss(&mut tape, lm, &labels, Some((la, &masked)), &weights).unwrap();
    let without = multi_task_loss(&mut tape, lm, &labels, None, &weights).unwrap();
    assert_eq!(tape.value(with_aux).item(), tape.value(without).item());
}

#[test]
fn loss_matches_two_independent_ce_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let main = rand_logits(&mut rng, 6, 4);
    let aux = rand_logits(&mut rng, 6, 3);
    let labels = vec![3, 0, 1, 2, 2, 1];
    let aux_labels: Vec<i64> = vec![0, -1, 2, 1, -1, 0];
    let weights = TaskWeights { main: 0.8, aux: 0.4 };

    let mut main_term = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        main_term += naive_softmax_ce(&main.data()[r * 4..(r + 1) * 4], y);
    }
    main_term /= 6.0;
    let mut aux_term = 0.0;
    let mut valid = 0.0;
    for (r, &y) in aux_labels.iter().enumerate() {
        if y >= 0 {
            aux_term += naive_softmax_ce(&aux.data()[r * 3..(r + 1) * 3], y as usize);
            valid += 1.0;
        }
    }
    aux_term /= valid;
    let want = weights.main * main_term + weights.aux * aux_term;

    let mut tape = Tape::new();
    let lm = tape.leaf(main);
    let la = tape.leaf(aux);
    let total =
        multi_task_loss(&mut tape, lm, &labels, Some((la, &aux_labels)), &weights).unwrap();
    assert!((tape.value(total).item() - want).abs() < 1e-12);
}

#[test]
fn out_of_range_labels_are_input_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let main = rand_logits(&mut rng, 2, 3);
    let aux = rand_logits(&mut rng, 2, 2);
    let mut tape = Tape::new();
    let lm = tape.leaf(main);
    let la = tape.leaf(aux);
    assert!(multi_task_loss(&mut tape, lm, &[0, 3], None, &TaskWeights::default()).is_err());
    assert!(matches!(
        multi_task_loss(
            &mut tape,
            lm,
            &[0, 1],
            Some((la, &[0, 5])),
            &TaskWeights::default()
        ),
        Err(MtlError::AuxLabelOutOfRange { label: 5, classes: 2 })
    ));
}

#[test]
fn loss_gradients_pass_finite_differences() {
    let labels = vec![1, 0, 2];
    let aux_labels: Vec<i64> = vec![0, -1, 1];
    let weights = TaskWeights { main: 1.0, aux: 0.7 };
    let f = move |tape: &mut Tape<f64>, vars: &[Var]| {
        multi_task_loss(tape, vars[0], &labels, Some((vars[1], &aux_labels)), &weights)
            .map_err(|_| detaux_core::gradcore::GradError::Domain {
                op: "mtl_loss",
                reason: "loss construction failed".into(),
            })
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let inputs = vec![rand_logits(&mut rng, 3, 3), rand_logits(&mut rng, 3, 2)];
        let report = grad_check(&f, &inputs, 1e-5).unwrap();
        assert!(report.max_rel_err <= 1e-4, "{:?}", report);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn loss_is_linear_in_the_task_weights(seed in 0u64..500, wm in 0.1f64..3.0, wa in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let main = rand_logits(&mut rng, 4, 3);
        let aux = rand_logits(&mut rng, 4, 2);
        let labels = vec![0, 1, 2, 1];
        let aux_labels: Vec<i64> = vec![1, 0, -1, 1];
        let eval = |weights: TaskWeights| {
            let mut tape = Tape::new();
            let lm = tape.leaf(main.clone());
            let la = tape.leaf(aux.clone());
            let t = multi_task_loss(&mut tape, lm, &labels, Some((la, &aux_labels)), &weights).unwrap();
            tape.value(t).item()
        };
        let base_m = eval(TaskWeights { main: 1.0, aux: 0.0 });
        let base_a = eval(TaskWeights { main: 1.0, aux: 1.0 }) - base_m;
        let got = eval(TaskWeights { main: wm, aux: wa });
        prop_assert!((got - (wm * base_m + wa * base_a)).abs() < 1e-10);
    }
}

// ── evaluation ──────────────────────────────────────────────────────

#[test]
fn constant_predictor_scores_chance_on_balanced_labels() {
    let logits: Vec<Vec<f64>> = (0..16).map(|_| vec![0.5, 0.5, 0.5, 0.5]).collect();
    let labels: Vec<usize> = (0..16).map(|i| i % 4).collect();
    assert!((accuracy_from_logits(&logits, &labels) - 0.25).abs() < 1e-12);
}

#[test]
fn perfect_predictor_scores_one() {
    let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
    let logits: Vec<Vec<f64>> = labels
        .iter()
        .map(|&y| {
            let mut row = vec![0.0; 3];
            row[y] = 5.0;
            row
        })
        .collect();
    assert_eq!(accuracy_from_logits(&logits, &labels), 1.0);
}

#[test]
fn accuracy_matches_a_hand_counted_confusion() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let logits: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let labels: Vec<usize> = (0..50).map(|_| rng.gen_range(0..4)).collect();
    let mut correct = 0;
    for (row, &y) in logits.iter().zip(&labels) {
        let mut best = 0;
        for c in 1..4 {
            if row[c] > row[best] {
                best = c;
            }
        }
        if best == y {
            correct += 1;
        }
    }
    assert_eq!(accuracy_from_logits(&logits, &labels), correct as f64 / 50.0);
}

// ── training behavior ───────────────────────────────────────────────

/// Two linearly separable pixel blobs.
fn separable_pixels(n: usize, seed: u64) -> (Vec<Vec<f32>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let y = i % 2;
        let base = if y == 0 { 0.2 } else { 0.8 };
        pixels.push(
            (0..8)
                .map(|_| (base + rng.gen_range(-0.05..0.05)) as f32)
                .collect(),
        );
        labels.push(y);
    }
    (pixels, labels)
}

fn view<'a>(pixels: &'a [Vec<f32>], labels: &[usize], classes: usize) -> TrainView<'a> {
    let refs: Vec<&[f32]> = pixels.iter().map(|p| p.as_slice()).collect();
    TrainView::from_parts(refs, labels.to_vec(), classes).unwrap()
}

fn tiny_config(epochs: usize) -> MtlConfig {
    MtlConfig {
        epochs,
        batch_size: 8,
        hidden_dims: vec![16, 8],
        learning_rate: 0.005,
        ..Default::default()
    }
}

#[test]
fn both_trainers_solve_a_separable_toy() {
    let (train_px, train_y) = separable_pixels(64, 7);
    let (test_px, test_y) = separable_pixels(32, 8);
    let train_view = view(&train_px, &train_y, 2);
    let test_view = view(&test_px, &test_y, 2);
    let cfg = tiny_config(30);

    let (_, stl) = train_stl::<f64>(&train_view, &test_view, &cfg, 101).unwrap();
    assert!(stl.test_accuracy_main >= 0.99, "stl {}", stl.test_accuracy_main);

    let aux: Vec<i64> = train_y.iter().map(|&y| y as i64).collect();
    let (_, mtl) = train_mtl::<f64>(&train_view, &test_view, &aux, 2, &cfg, 101).unwrap();
    assert!(mtl.test_accuracy_main >= 0.99, "mtl {}", mtl.test_accuracy_main);
    assert_eq!(mtl.aux_classes, Some(2));
    assert!(mtl.train_accuracy_aux.unwrap() >= 0.99);
}

#[test]
fn zero_aux_weight_reproduces_the_stl_trajectory_bit_for_bit() {
    let (train_px, train_y) = separable_pixels(48, 9);
    let (test_px, test_y) = separable_pixels(16, 10);
    let train_view = view(&train_px, &train_y, 2);
    let test_view = view(&test_px, &test_y, 2);
    let mut cfg = tiny_config(5);
    cfg.weights.aux = 0.0;

    let aux: Vec<i64> = train_y.iter().map(|&y| (1 - y) as i64).collect();
    let (mtl_model, mtl_rep) =
        train_mtl::<f64>(&train_view, &test_view, &aux, 2, &cfg, 55).unwrap();
    let (stl_model, stl_rep) = train_stl::<f64>(&train_view, &test_view, &cfg, 55).unwrap();

    // shared parameters follow the identical trajectory
    let shared = |m: &detaux_core::mtlearn::MtlModel<f64>| -> Vec<u64> {
        m.named_params()
            .iter()
            .filter(|(n, _)| !n.starts_with("head_aux"))
            .flat_map(|(_, p)| p.data().iter().map(|v| v.to_bits()))
            .collect()
    };
    assert_eq!(shared(&mtl_model), shared(&stl_model));
    assert_eq!(mtl_rep.test_accuracy_main, stl_rep.test_accuracy_main);
    for (a, b) in mtl_rep.epoch_losses.iter().zip(&stl_rep.epoch_losses) {
        assert_eq!(a.total, b.total);
    }
}

#[test]
fn misaligned_aux_labels_are_rejected() {
    let (px, y) = separable_pixels(16, 11);
    let v = view(&px, &y, 2);
    let aux = vec![0i64; 7];
    assert!(matches!(
        train_mtl::<f64>(&v, &v, &aux, 2, &tiny_config(1), 1),
        Err(MtlError::MisalignedAuxLabels { got: 7, want: 16 })
    ));
}

#[test]
fn empty_split_cannot_be_evaluated() {
    let (px, y) = separable_pixels(16, 12);
    let v = view(&px, &y, 2);
    let cfg = tiny_config(1);
    let (model, _) = train_stl::<f64>(&v, &v, &cfg, 2).unwrap();
    let empty = TrainView::from_parts(Vec::new(), Vec::new(), 2).unwrap();
    assert!(matches!(evaluate(&model, &empty), Err(MtlError::EmptySplit)));
}

#[test]
fn uncertainty_weighting_variant_trains() {
    let (train_px, train_y) = separable_pixels(48, 13);
    let (test_px, test_y) = separable_pixels(16, 14);
    let train_view = view(&train_px, &train_y, 2);
    let test_view = view(&test_px, &test_y, 2);
    let mut cfg = tiny_config(20);
    cfg.uncertainty_weighting = true;
    let aux: Vec<i64> = train_y.iter().map(|&y| y as i64).collect();
    let (_, rep) = train_mtl::<f64>(&train_view, &test_view, &aux, 2, &cfg, 30).unwrap();
    assert!(rep.test_accuracy_main >= 0.9, "{}", rep.test_accuracy_main);
    assert!(rep.epoch_losses.iter().all(|e| e.total.is_finite()));
}

#[test]
fn checkpoint_roundtrip_preserves_predictions() {
    let (px, y) = separable_pixels(32, 15);
    let v = view(&px, &y, 2);
    let cfg = tiny_config(3);
    let aux: Vec<i64> = y.iter().map(|&l| l as i64).collect();
    let (model, _) = train_mtl::<f32>(&v, &v, &aux, 2, &cfg, 77).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mtl.dtxm");
    model.save(&path, &cfg).unwrap();
    let (loaded, _) = detaux_core::mtlearn::MtlModel::<f32>::load(&path).unwrap();
    let x = v.batch_tensor::<f32>(&[0, 1, 2, 3]);
    let (a_main, a_aux) = model.forward(&x);
    let (b_main, b_aux) = loaded.forward(&x);
    assert_eq!(a_main.data(), b_main.data());
    assert_eq!(a_aux.unwrap().data(), b_aux.unwrap().data());
}
