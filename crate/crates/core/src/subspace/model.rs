//! Encoder/decoder plus k linear subspace projectors.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{read_dtxm, restore_params, write_dtxm, CheckpointError};
use crate::gradcore::{GradError, Tape, Tensor, Var};
use crate::linalg;
use crate::nn::{Activation, Mlp, StagedMlp};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

use super::{DisError, SubspaceConfig};

/// The disentanglement model. The latent code `z` is mapped through each
/// projector to per-subspace codes whose elementwise sum reconstructs the
/// aggregate latent fed to the decoder.
pub struct DisModel<S> {
    input_dim: usize,
    latent_dim: usize,
    encoder: Mlp<S>,
    decoder: Mlp<S>,
    /// k square maps `[d, d]`, no bias.
    projectors: Vec<Tensor<S>>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    config: SubspaceConfig,
    input_dim: usize,
}

impl<S: Scalar> DisModel<S> {
    /// Seeded initialization. Projectors start near `identity / k` (plus a
    /// little noise to break ties), so the initial aggregate is close to the
    /// raw latent and warm-up starts from a coherent autoencoder.
    pub fn init(input_dim: usize, cfg: &SubspaceConfig, seed: u64) -> Result<Self, DisError> {
        cfg.validate()?;
        let d = cfg.latent_dim;
        let mut rng = stream_rng(seed, Stream::ModelInit, 0);
        let mut enc_dims = vec![input_dim];
        enc_dims.extend(&cfg.hidden_dims);
        enc_dims.push(d);
        let mut dec_dims = vec![d];
        dec_dims.extend(cfg.hidden_dims.iter().rev());
        dec_dims.push(input_dim);
        let encoder = Mlp::new(&enc_dims, Activation::Relu, Activation::Linear, &mut rng);
        let decoder = Mlp::new(&dec_dims, Activation::Relu, Activation::Sigmoid, &mut rng);
        let k = cfg.num_subspaces;
        let share = 1.0 / k as f64;
        let projectors = (0..k)
            .map(|_| {
                let data: Vec<S> = (0..d * d)
                    .enumerate()
                    .map(|(idx, _)| {
                        let diag = if idx / d == idx % d { share } else { 0.0 };
                        S::from_f64(diag + rng.gen_range(-0.01..0.01))
                    })
                    .collect();
                Tensor::new(vec![d, d], data).expect("projector shape")
            })
            .collect();
        Ok(Self {
            input_dim,
            latent_dim: d,
            encoder,
            decoder,
            projectors,
        })
    }

    /// Assemble from explicit components (constructed fixtures and loaders).
    pub fn from_parts(
        encoder: Mlp<S>,
        decoder: Mlp<S>,
        projectors: Vec<Tensor<S>>,
    ) -> Result<Self, DisError> {
        let input_dim = encoder.input_dim();
        let latent_dim = encoder.output_dim();
        if decoder.input_dim() != latent_dim || decoder.output_dim() != input_dim {
            return Err(DisError::Config(format!(
                "decoder {}->{} does not mirror encoder {}->{}",
                decoder.input_dim(),
                decoder.output_dim(),
                input_dim,
                latent_dim
            )));
        }
        if projectors.is_empty()
            || projectors.iter().any(|p| p.shape() != [latent_dim, latent_dim])
        {
            return Err(DisError::Config(format!(
                "projectors must all be [{}, {}]",
                latent_dim, latent_dim
            )));
        }
        Ok(Self {
            input_dim,
            latent_dim,
            encoder,
            decoder,
            projectors,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn num_subspaces(&self) -> usize {
        self.projectors.len()
    }

    // ── plain (inference) paths ─────────────────────────────────────

    /// `[batch, input_dim] -> [batch, d]`
    pub fn encode(&self, x: &Tensor<S>) -> Tensor<S> {
        self.encoder.forward(x)
    }

    /// `[batch, d] -> [batch, input_dim]`, values in `[0, 1]`.
    pub fn decode(&self, z_agg: &Tensor<S>) -> Tensor<S> {
        self.decoder.forward(z_agg)
    }

    /// Project the latent into subspace `i`.
    pub fn project(&self, i: usize, z: &Tensor<S>) -> Tensor<S> {
        let rows = if z.rank() == 1 { 1 } else { z.shape()[0] };
        let d = self.latent_dim;
        let out = linalg::matmul(z.data(), self.projectors[i].data(), rows, d, d);
        Tensor::new(z.shape().to_vec(), out).expect("projection shape")
    }

    pub fn project_all(&self, z: &Tensor<S>) -> Vec<Tensor<S>> {
        (0..self.projectors.len()).map(|i| self.project(i, z)).collect()
    }

    /// Elementwise sum of the per-subspace codes.
    pub fn aggregate(projections: &[Tensor<S>]) -> Tensor<S> {
        let mut out = projections[0].clone();
        for p in &projections[1..] {
            for (o, &v) in out.data_mut().iter_mut().zip(p.data()) {
                *o += v;
            }
        }
        out
    }

    /// Encode a whole view in chunks; one f64 latent row per sample.
    pub fn encode_view(&self, view: &crate::synthgen::TrainView, chunk: usize) -> Vec<Vec<f64>> {
        let idxs: Vec<usize> = (0..view.len()).collect();
        let mut rows = Vec::with_capacity(view.len());
        for ch in idxs.chunks(chunk.max(1)) {
            let z = self.encode(&view.batch_tensor::<S>(ch));
            let d = self.latent_dim;
            for r in 0..ch.len() {
                rows.push(z.data()[r * d..(r + 1) * d].iter().map(|v| v.as_f64()).collect());
            }
        }
        rows
    }

    /// Encode a whole view and project it into subspace `i`.
    pub fn project_view(
        &self,
        view: &crate::synthgen::TrainView,
        i: usize,
        chunk: usize,
    ) -> Vec<Vec<f64>> {
        let idxs: Vec<usize> = (0..view.len()).collect();
        let mut rows = Vec::with_capacity(view.len());
        for ch in idxs.chunks(chunk.max(1)) {
            let z = self.encode(&view.batch_tensor::<S>(ch));
            let s = self.project(i, &z);
            let d = self.latent_dim;
            for r in 0..ch.len() {
                rows.push(s.data()[r * d..(r + 1) * d].iter().map(|v| v.as_f64()).collect());
            }
        }
        rows
    }

    // ── parameters ──────────────────────────────────────────────────

    pub fn named_params(&self) -> Vec<(String, &Tensor<S>)> {
        let mut out = Vec::new();
        for (i, layer) in self.encoder.layers.iter().enumerate() {
            out.push((format!("encoder.{}.weight", i), &layer.weight));
            out.push((format!("encoder.{}.bias", i), &layer.bias));
        }
        for (i, layer) in self.decoder.layers.iter().enumerate() {
            out.push((format!("decoder.{}.weight", i), &layer.weight));
            out.push((format!("decoder.{}.bias", i), &layer.bias));
        }
        for (i, p) in self.projectors.iter().enumerate() {
            out.push((format!("projector.{}", i), p));
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<S>> {
        let mut out: Vec<&mut Tensor<S>> = Vec::new();
        out.extend(self.encoder.params_mut());
        out.extend(self.decoder.params_mut());
        out.extend(self.projectors.iter_mut());
        out
    }

    // ── tape staging ────────────────────────────────────────────────

    pub fn stage(&self, tape: &mut Tape<S>) -> StagedDisModel {
        let encoder = self.encoder.stage(tape);
        let decoder = self.decoder.stage(tape);
        let projectors = self
            .projectors
            .iter()
            .map(|p| tape.leaf(p.clone()))
            .collect();
        let zero_bias = tape.leaf(Tensor::zeros(&[self.latent_dim]));
        StagedDisModel {
            encoder,
            decoder,
            projectors,
            zero_bias,
        }
    }

    // ── persistence ─────────────────────────────────────────────────

    pub fn save(&self, path: &Path, cfg: &SubspaceConfig) -> Result<(), DisError> {
        let meta = CheckpointMeta {
            config: cfg.clone(),
            input_dim: self.input_dim,
        };
        let json = serde_json::to_string(&meta)
            .map_err(|e| CheckpointError::Format(e.to_string()))?;
        write_dtxm(path, &json, &self.named_params())?;
        Ok(())
    }

    pub fn load(path: &Path, seed: u64) -> Result<(Self, SubspaceConfig), DisError> {
        let (json, raw) = read_dtxm(path)?;
        let meta: CheckpointMeta = serde_json::from_str(&json)
            .map_err(|e| CheckpointError::Format(format!("meta: {}", e)))?;
        let mut model = Self::init(meta.input_dim, &meta.config, seed)?;
        let names: Vec<String> = model.named_params().iter().map(|(n, _)| n.clone()).collect();
        let mut targets: Vec<(String, &mut Tensor<S>)> =
            names.into_iter().zip(model.params_mut()).collect();
        restore_params(&raw, &mut targets)?;
        Ok((model, meta.config))
    }
}

/// Model parameters staged onto a tape for one training step.
pub struct StagedDisModel {
    encoder: StagedMlp,
    decoder: StagedMlp,
    projectors: Vec<Var>,
    zero_bias: Var,
}

impl StagedDisModel {
    /// Assemble from pre-staged components; used by gradient checks that
    /// treat the parameters themselves as differentiation targets.
    pub fn from_staged(
        encoder: StagedMlp,
        decoder: StagedMlp,
        projectors: Vec<Var>,
        zero_bias: Var,
    ) -> Self {
        Self {
            encoder,
            decoder,
            projectors,
            zero_bias,
        }
    }

    pub fn encode<S: Scalar>(&self, tape: &mut Tape<S>, x: Var) -> Result<Var, GradError> {
        self.encoder.forward(tape, x)
    }

    pub fn decode<S: Scalar>(&self, tape: &mut Tape<S>, z: Var) -> Result<Var, GradError> {
        self.decoder.forward(tape, z)
    }

    pub fn project<S: Scalar>(&self, tape: &mut Tape<S>, i: usize, z: Var) -> Result<Var, GradError> {
        tape.affine(z, self.projectors[i], self.zero_bias)
    }

    pub fn project_all<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        z: Var,
    ) -> Result<Vec<Var>, GradError> {
        (0..self.projectors.len())
            .map(|i| self.project(tape, i, z))
            .collect()
    }

    /// Sum of per-subspace codes on the tape.
    pub fn aggregate<S: Scalar>(tape: &mut Tape<S>, projections: &[Var]) -> Result<Var, GradError> {
        let mut acc = projections[0];
        for &p in &projections[1..] {
            acc = tape.add(acc, p)?;
        }
        Ok(acc)
    }

    pub fn num_subspaces(&self) -> usize {
        self.projectors.len()
    }

    /// Vars aligned with [`DisModel::params_mut`] order.
    pub fn param_vars(&self) -> Vec<Var> {
        let mut out = self.encoder.param_vars();
        out.extend(self.decoder.param_vars());
        out.extend(self.projectors.iter().copied());
        out
    }
}
