//! Dataset assembly, weakly supervised pair sampling, and factor-value
//! holdout splits.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::gradcore::Tensor;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

use super::{render, salt_pepper, DataError, FactorSpec};

/// Materialized dataset: corrupted pixels, principal labels, and the full
/// generating tuples. Tuples are kept for serialization and evaluation;
/// training code goes through [`TrainView`], which exposes pixels and
/// principal labels only.
pub struct FactorDataset {
    spec: FactorSpec,
    pixels: Vec<Vec<f32>>,
    labels: Vec<usize>,
    tuples: Vec<Vec<u16>>,
}

/// Enumerate every factor combination (`replicas` samples per tuple, in
/// tuple-major order), render it, and apply per-sample fixed corruption.
/// Noise is frozen into the sample at generation time; sample `i` draws its
/// noise from stream `DataNoise` with counter `i`.
pub fn generate(
    spec: &FactorSpec,
    noise_fraction: f64,
    per_channel_noise: bool,
    replicas: usize,
    seed: u64,
) -> Result<FactorDataset, DataError> {
    spec.validate()?;
    if replicas == 0 {
        return Err(DataError::InvalidSpec("replicas must be >= 1".into()));
    }
    let total = spec.total_combinations();
    let mut pixels = Vec::with_capacity(total * replicas);
    let mut labels = Vec::with_capacity(total * replicas);
    let mut tuples = Vec::with_capacity(total * replicas);
    for t_idx in 0..total {
        let tuple = spec.tuple_from_index(t_idx);
        let clean = render(spec, &tuple)?;
        for rep in 0..replicas {
            let sample_index = (t_idx * replicas + rep) as u64;
            let mut img = clean.pixels.clone();
            let mut rng = stream_rng(seed, Stream::DataNoise, sample_index);
            salt_pepper(
                &mut img,
                spec.width,
                spec.height,
                spec.channels,
                noise_fraction,
                per_channel_noise,
                &mut rng,
            )?;
            pixels.push(img);
            labels.push(clean.label);
            tuples.push(tuple.clone());
        }
    }
    Ok(FactorDataset {
        spec: spec.clone(),
        pixels,
        labels,
        tuples,
    })
}

impl FactorDataset {
    /// Rebuild from deserialized parts, recomputing principal labels from
    /// the tuples' principal column.
    pub fn from_parts(
        spec: FactorSpec,
        tuples: Vec<Vec<u16>>,
        pixels: Vec<Vec<f32>>,
    ) -> Result<Self, DataError> {
        spec.validate()?;
        if tuples.len() != pixels.len() {
            return Err(DataError::Format(format!(
                "{} tuples vs {} images",
                tuples.len(),
                pixels.len()
            )));
        }
        let dim = spec.pixels_per_image();
        let p = spec.principal_index();
        let mut labels = Vec::with_capacity(tuples.len());
        for (tuple, img) in tuples.iter().zip(&pixels) {
            spec.check_tuple(tuple)?;
            if img.len() != dim {
                return Err(DataError::Format(format!(
                    "image with {} values, spec wants {}",
                    img.len(),
                    dim
                )));
            }
            labels.push(tuple[p] as usize);
        }
        Ok(Self {
            spec,
            pixels,
            labels,
            tuples,
        })
    }

    pub fn spec(&self) -> &FactorSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self, i: usize) -> &[f32] {
        &self.pixels[i]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn tuples(&self) -> &[Vec<u16>] {
        &self.tuples
    }

    /// Evaluation-only access to a hidden factor column.
    pub fn factor_column(&self, name: &str) -> Result<Vec<u16>, DataError> {
        let idx = self
            .spec
            .factor_index(name)
            .ok_or_else(|| DataError::UnknownFactor(name.to_string()))?;
        Ok(self.tuples.iter().map(|t| t[idx]).collect())
    }

    pub fn view(&self, indices: &[usize]) -> TrainView<'_> {
        TrainView {
            pixels: indices.iter().map(|&i| self.pixels[i].as_slice()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            global: indices.to_vec(),
            num_classes: self.spec.principal_cardinality(),
            dim: self.spec.pixels_per_image(),
        }
    }

    pub fn full_view(&self) -> TrainView<'_> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.view(&all)
    }
}

/// What training is allowed to see: images and principal labels. Hidden
/// factor values are deliberately unreachable from here.
pub struct TrainView<'a> {
    pixels: Vec<&'a [f32]>,
    labels: Vec<usize>,
    global: Vec<usize>,
    num_classes: usize,
    dim: usize,
}

impl<'a> TrainView<'a> {
    /// Assemble a view from raw parts (tests and synthetic fixtures).
    pub fn from_parts(
        pixels: Vec<&'a [f32]>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self, DataError> {
        if pixels.len() != labels.len() {
            return Err(DataError::Format(format!(
                "{} images vs {} labels",
                pixels.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(DataError::Format(format!(
                "label {} outside {} classes",
                bad, num_classes
            )));
        }
        let dim = pixels.first().map_or(0, |p| p.len());
        let global = (0..labels.len()).collect();
        Ok(Self {
            pixels,
            labels,
            global,
            num_classes,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn pixels(&self, i: usize) -> &[f32] {
        self.pixels[i]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Index of view sample `i` in the backing dataset.
    pub fn global_index(&self, i: usize) -> usize {
        self.global[i]
    }

    /// Stack the given view samples into a `[len, dim]` tensor.
    pub fn batch_tensor<S: Scalar>(&self, idxs: &[usize]) -> Tensor<S> {
        let mut data = Vec::with_capacity(idxs.len() * self.dim);
        for &i in idxs {
            data.extend(self.pixels[i].iter().map(|&v| S::from_f64(v as f64)));
        }
        Tensor::new(vec![idxs.len(), self.dim], data).expect("batch dimensions agree")
    }
}

/// A sampled image pair, by view-local index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pair {
    pub a: usize,
    pub b: usize,
    pub y1: usize,
    pub y2: usize,
    pub same: bool,
}

#[derive(Debug, Clone, Default)]
pub struct PairBatch {
    pub pairs: Vec<Pair>,
}

/// Draw `count` pairs; each is independently a same-label pair with
/// probability `p_same`, with both members uniform over the qualifying
/// samples and always distinct indices.
pub fn sample_pairs(
    view: &TrainView,
    count: usize,
    p_same: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PairBatch, DataError> {
    if !(0.0..=1.0).contains(&p_same) {
        return Err(DataError::FractionOutOfRange(p_same));
    }
    let n = view.len();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); view.num_classes()];
    let mut pos_in_class = vec![0usize; n];
    for i in 0..n {
        let y = view.label(i);
        pos_in_class[i] = by_class[y].len();
        by_class[y].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(DataError::ClassTooSmall {
                class,
                count: members.len(),
            });
        }
    }
    if p_same < 1.0 && by_class.len() < 2 {
        return Err(DataError::SingleClass);
    }

    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let same = rng.gen::<f64>() < p_same;
        let a = rng.gen_range(0..n);
        let y1 = view.label(a);
        let b = if same {
            let members = &by_class[y1];
            // uniform over the class minus `a` itself
            let mut r = rng.gen_range(0..members.len() - 1);
            if r >= pos_in_class[a] {
                r += 1;
            }
            members[r]
        } else {
            let others = n - by_class[y1].len();
            let mut r = rng.gen_range(0..others);
            let mut chosen = None;
            for (c, members) in by_class.iter().enumerate() {
                if c == y1 {
                    continue;
                }
                if r < members.len() {
                    chosen = Some(members[r]);
                    break;
                }
                r -= members.len();
            }
            chosen.expect("complement count covers all other classes")
        };
        pairs.push(Pair {
            a,
            b,
            y1,
            y2: view.label(b),
            same,
        });
    }
    Ok(PairBatch { pairs })
}

/// Split by held-out nuisance-factor values: for each named factor a seeded
/// half (`round(fraction * cardinality)` values) is reserved, and a sample
/// lands in the test set exactly when *all* its held-out factors take
/// reserved values. Returns `(train_indices, test_indices)`.
pub fn split_holdout(
    dataset: &FactorDataset,
    holdout_factors: &[String],
    holdout_value_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(0.0..=1.0).contains(&holdout_value_fraction) {
        return Err(DataError::FractionOutOfRange(holdout_value_fraction));
    }
    let spec = dataset.spec();
    let mut held: Vec<(usize, Vec<bool>)> = Vec::new();
    for (list_pos, name) in holdout_factors.iter().enumerate() {
        if *name == spec.principal {
            return Err(DataError::PrincipalInHoldout(name.clone()));
        }
        let idx = spec
            .factor_index(name)
            .ok_or_else(|| DataError::UnknownFactor(name.clone()))?;
        let card = spec.factors[idx].cardinality as usize;
        let keep = (holdout_value_fraction * card as f64).round() as usize;
        let mut order: Vec<usize> = (0..card).collect();
        let mut rng = stream_rng(seed, Stream::Holdout, list_pos as u64);
        for i in 0..keep.min(card) {
            let j = rng.gen_range(i..card);
            order.swap(i, j);
        }
        let mut mask = vec![false; card];
        for &v in &order[..keep.min(card)] {
            mask[v] = true;
        }
        held.push((idx, mask));
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, tuple) in dataset.tuples().iter().enumerate() {
        let in_test =
            !held.is_empty() && held.iter().all(|(f, mask)| mask[tuple[*f] as usize]);
        if in_test {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    Ok((train, test))
}
