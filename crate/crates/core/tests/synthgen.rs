//! Dataset-level oracle tests: exhaustive render uniqueness, pair-rate
//! bounds, split accounting, and DTXD round-trips.

use std::collections::HashSet;

use detaux_core::rng::{stream_rng, Stream};
use detaux_core::synthgen::{
    generate, read_dtxd, render, sample_pairs, split_holdout, write_dtxd, DataError, FactorSpec,
};
use proptest::prelude::*;

fn image_key(pixels: &[f32]) -> Vec<u32> {
    pixels.iter().map(|p| p.to_bits()).collect()
}

#[test]
fn exhaustive_default_spec_renders_2048_distinct_images() {
    let spec = FactorSpec::default();
    let mut seen = HashSet::new();
    for idx in 0..spec.total_combinations() {
        let tuple = spec.tuple_from_index(idx);
        let img = render(&spec, &tuple).unwrap();
        assert!(seen.insert(image_key(&img.pixels)), "duplicate at {:?}", tuple);
    }
    assert_eq!(seen.len(), 2048);
}

#[test]
fn generation_is_reproducible_bit_exactly() {
    let mut spec = FactorSpec::default();
    spec.factors[2].cardinality = 2; // shrink for speed
    let a = generate(&spec, 0.15, false, 1, 7).unwrap();
    let b = generate(&spec, 0.15, false, 1, 7).unwrap();
    assert_eq!(a.len(), b.len());
    for i in 0..a.len() {
        assert_eq!(image_key(a.pixels(i)), image_key(b.pixels(i)));
    }
    let c = generate(&spec, 0.15, false, 1, 8).unwrap();
    let differs = (0..a.len()).any(|i| image_key(a.pixels(i)) != image_key(c.pixels(i)));
    assert!(differs, "different seed should change the noise");
}

#[test]
fn principal_label_comes_from_the_scale_column() {
    let spec = FactorSpec::default();
    let img = render(&spec, &[3, 1, 5, 2, 0]).unwrap();
    assert_eq!(img.label, 1);
}

#[test]
fn pair_sampling_respects_probability_extremes() {
    let spec = FactorSpec::default();
    let data = generate(&spec, 0.0, false, 1, 1).unwrap();
    let view = data.full_view();
    let mut rng = stream_rng(1, Stream::PairSampling, 0);
    let all_same = sample_pairs(&view, 200, 1.0, &mut rng).unwrap();
    assert!(all_same.pairs.iter().all(|p| p.same && p.y1 == p.y2 && p.a != p.b));
    let none_same = sample_pairs(&view, 200, 0.0, &mut rng).unwrap();
    assert!(none_same.pairs.iter().all(|p| !p.same && p.y1 != p.y2));
}

#[test]
fn pair_sampling_rate_is_within_binomial_bounds() {
    // 3-sigma bound for 10000 draws at p=0.5 is ~0.015
    let spec = FactorSpec::default();
    let data = generate(&spec, 0.0, false, 1, 2).unwrap();
    let view = data.full_view();
    let mut rng = stream_rng(3, Stream::PairSampling, 0);
    let batch = sample_pairs(&view, 10_000, 0.5, &mut rng).unwrap();
    let rate = batch.pairs.iter().filter(|p| p.same).count() as f64 / 10_000.0;
    assert!((0.48..=0.52).contains(&rate), "same-label rate {}", rate);
}

#[test]
fn class_with_fewer_than_two_samples_is_an_input_error() {
    let pixels = [vec![0.0f32; 4], vec![0.1; 4], vec![0.2; 4]];
    let refs: Vec<&[f32]> = pixels.iter().map(|p| p.as_slice()).collect();
    let view =
        detaux_core::synthgen::TrainView::from_parts(refs, vec![0, 0, 1], 2).unwrap();
    let mut rng = stream_rng(0, Stream::PairSampling, 0);
    match sample_pairs(&view, 10, 0.5, &mut rng) {
        Err(DataError::ClassTooSmall { class: 1, count: 1 }) => {}
        other => panic!("expected class-size error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn holdout_fraction_zero_leaves_test_empty() {
    let spec = FactorSpec::default();
    let data = generate(&spec, 0.0, false, 1, 1).unwrap();
    let (train, test) = split_holdout(&data, &["hue".into()], 0.0, 5).unwrap();
    assert!(test.is_empty());
    assert_eq!(train.len(), data.len());
}

#[test]
fn holding_out_half_the_hue_values_puts_half_the_samples_in_test() {
    let spec = FactorSpec::default();
    let data = generate(&spec, 0.0, false, 1, 1).unwrap();
    let (train, test) = split_holdout(&data, &["hue".into()], 0.5, 5).unwrap();
    // 4 of 8 hue values held out -> exactly half of all combinations
    assert_eq!(test.len(), data.len() / 2);
    assert_eq!(train.len() + test.len(), data.len());
}

#[test]
fn two_holdout_factors_give_a_quarter_test_split() {
    let spec = FactorSpec::default();
    let data = generate(&spec, 0.0, false, 1, 1).unwrap();
    let (train, test) =
        split_holdout(&data, &["pos_x".into(), "pos_y".into()], 0.5, 5).unwrap();
    assert_eq!(test.len(), data.len() / 4);
    assert_eq!(train.len(), data.len() * 3 / 4);
}

#[test]
fn split_is_a_partition() {
    let spec = FactorSpec::default();
    let data = generate(&spec, 0.0, false, 1, 1).unwrap();
    let (train, test) = split_holdout(&data, &["hue".into()], 0.5, 9).unwrap();
    let mut seen = vec![false; data.len()];
    for &i in train.iter().chain(&test) {
        assert!(!seen[i], "sample {} appears twice", i);
        seen[i] = true;
    }
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn principal_factor_cannot_be_held_out() {
    let spec = FactorSpec::default();
    let data = generate(&spec, 0.0, false, 1, 1).unwrap();
    assert!(matches!(
        split_holdout(&data, &["scale".into()], 0.5, 1),
        Err(DataError::PrincipalInHoldout(_))
    ));
}

#[test]
fn dtxd_roundtrip_is_bit_exact() {
    let spec = FactorSpec {
        factors: vec![
            detaux_core::synthgen::Factor::new("shape", 2),
            detaux_core::synthgen::Factor::new("scale", 2),
            detaux_core::synthgen::Factor::new("hue", 2),
        ],
        width: 12,
        height: 12,
        channels: 3,
        principal: "scale".into(),
    };
    let data = generate(&spec, 0.15, false, 2, 42).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.dtxd");
    write_dtxd(&path, &data).unwrap();
    let raw = read_dtxd(&path).unwrap();
    let back = raw.into_dataset(spec.clone()).unwrap();
    assert_eq!(back.len(), data.len());
    for i in 0..data.len() {
        assert_eq!(image_key(back.pixels(i)), image_key(data.pixels(i)));
        assert_eq!(back.tuples()[i], data.tuples()[i]);
        assert_eq!(back.label(i), data.label(i));
    }
    // mismatched spec is rejected
    let mut other = spec;
    other.factors[2].cardinality = 4;
    let raw = read_dtxd(&path).unwrap();
    assert!(raw.into_dataset(other).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn replicas_scale_the_sample_count(replicas in 1usize..4) {
        let spec = FactorSpec {
            factors: vec![
                detaux_core::synthgen::Factor::new("scale", 2),
                detaux_core::synthgen::Factor::new("hue", 2),
            ],
            width: 10,
            height: 10,
            channels: 3,
            principal: "scale".into(),
        };
        let data = generate(&spec, 0.1, false, replicas, 0).unwrap();
        prop_assert_eq!(data.len(), 4 * replicas);
    }
}
