//! Shared trunk with one classification head per task.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint::{read_dtxm, restore_params, write_dtxm, CheckpointError};
use crate::gradcore::{GradError, Tape, Tensor, Var};
use crate::nn::{Activation, Dense, Mlp, StagedMlp};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

use super::train::MtlConfig;
use super::MtlError;

/// Trunk features are shared storage: both heads read the same tensor and
/// their gradients accumulate into it.
pub struct MtlModel<S> {
    pub(crate) trunk: Mlp<S>,
    pub(crate) head_main: Dense<S>,
    pub(crate) head_aux: Option<Dense<S>>,
    num_classes_main: usize,
    num_classes_aux: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    config: MtlConfig,
    input_dim: usize,
    num_classes_main: usize,
    num_classes_aux: Option<usize>,
}

impl<S: Scalar> MtlModel<S> {
    /// Seeded initialization. The trunk and main head draw first so that a
    /// model with an auxiliary head starts from the identical trunk as one
    /// without.
    pub fn init(
        input_dim: usize,
        hidden_dims: &[usize],
        num_classes_main: usize,
        num_classes_aux: Option<usize>,
        seed: u64,
    ) -> Result<Self, MtlError> {
        if hidden_dims.is_empty() {
            return Err(MtlError::Config("hidden_dims must not be empty".into()));
        }
        if num_classes_main < 2 || num_classes_aux.is_some_and(|c| c < 2) {
            return Err(MtlError::Config("each task needs at least 2 classes".into()));
        }
        let mut rng = stream_rng(seed, Stream::MtlInit, 0);
        let mut dims = vec![input_dim];
        dims.extend(hidden_dims);
        let trunk = Mlp::new(&dims, Activation::Relu, Activation::Relu, &mut rng);
        let feat = *hidden_dims.last().unwrap();
        let head_main = Dense::glorot(feat, num_classes_main, &mut rng);
        let head_aux = num_classes_aux.map(|c| Dense::glorot(feat, c, &mut rng));
        Ok(Self {
            trunk,
            head_main,
            head_aux,
            num_classes_main,
            num_classes_aux,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn num_classes_main(&self) -> usize {
        self.num_classes_main
    }

    pub fn num_classes_aux(&self) -> Option<usize> {
        self.num_classes_aux
    }

    /// Plain logits for both tasks.
    pub fn forward(&self, x: &Tensor<S>) -> (Tensor<S>, Option<Tensor<S>>) {
        let feat = self.trunk.forward(x);
        let apply = |head: &Dense<S>| {
            let rows = if feat.rank() == 1 { 1 } else { feat.shape()[0] };
            let f = head.weight.shape()[0];
            let c = head.weight.shape()[1];
            let mut out = crate::linalg::matmul(feat.data(), head.weight.data(), rows, f, c);
            for row in out.chunks_mut(c) {
                for j in 0..c {
                    row[j] += head.bias.data()[j];
                }
            }
            Tensor::new(vec![rows, c], out).expect("logit shape")
        };
        (apply(&self.head_main), self.head_aux.as_ref().map(apply))
    }

    pub fn stage(&self, tape: &mut Tape<S>) -> StagedMtl {
        let trunk = self.trunk.stage(tape);
        let head_main = (
            tape.leaf(self.head_main.weight.clone()),
            tape.leaf(self.head_main.bias.clone()),
        );
        let head_aux = self
            .head_aux
            .as_ref()
            .map(|h| (tape.leaf(h.weight.clone()), tape.leaf(h.bias.clone())));
        StagedMtl {
            trunk,
            head_main,
            head_aux,
        }
    }

    pub fn named_params(&self) -> Vec<(String, &Tensor<S>)> {
        let mut out = Vec::new();
        for (i, layer) in self.trunk.layers.iter().enumerate() {
            out.push((format!("trunk.{}.weight", i), &layer.weight));
            out.push((format!("trunk.{}.bias", i), &layer.bias));
        }
        out.push(("head_main.weight".to_string(), &self.head_main.weight));
        out.push(("head_main.bias".to_string(), &self.head_main.bias));
        if let Some(h) = &self.head_aux {
            out.push(("head_aux.weight".to_string(), &h.weight));
            out.push(("head_aux.bias".to_string(), &h.bias));
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<S>> {
        let mut out = self.trunk.params_mut();
        out.push(&mut self.head_main.weight);
        out.push(&mut self.head_main.bias);
        if let Some(h) = &mut self.head_aux {
            out.push(&mut h.weight);
            out.push(&mut h.bias);
        }
        out
    }

    pub fn save(&self, path: &Path, cfg: &MtlConfig) -> Result<(), MtlError> {
        let meta = CheckpointMeta {
            config: cfg.clone(),
            input_dim: self.input_dim(),
            num_classes_main: self.num_classes_main,
            num_classes_aux: self.num_classes_aux,
        };
        let json =
            serde_json::to_string(&meta).map_err(|e| CheckpointError::Format(e.to_string()))?;
        write_dtxm(path, &json, &self.named_params())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Self, MtlConfig), MtlError> {
        let (json, raw) = read_dtxm(path)?;
        let meta: CheckpointMeta = serde_json::from_str(&json)
            .map_err(|e| CheckpointError::Format(format!("meta: {}", e)))?;
        let mut model = Self::init(
            meta.input_dim,
            &meta.config.hidden_dims,
            meta.num_classes_main,
            meta.num_classes_aux,
            0,
        )?;
        let names: Vec<String> = model.named_params().iter().map(|(n, _)| n.clone()).collect();
        let mut targets: Vec<(String, &mut Tensor<S>)> =
            names.into_iter().zip(model.params_mut()).collect();
        restore_params(&raw, &mut targets)?;
        Ok((model, meta.config))
    }
}

pub struct StagedMtl {
    trunk: StagedMlp,
    head_main: (Var, Var),
    head_aux: Option<(Var, Var)>,
}

impl StagedMtl {
    pub fn forward<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        x: Var,
    ) -> Result<(Var, Option<Var>), GradError> {
        let feat = self.trunk.forward(tape, x)?;
        let main = tape.affine(feat, self.head_main.0, self.head_main.1)?;
        let aux = match self.head_aux {
            Some((w, b)) => Some(tape.affine(feat, w, b)?),
            None => None,
        };
        Ok((main, aux))
    }

    pub fn param_vars(&self) -> Vec<Var> {
        let mut out = self.trunk.param_vars();
        out.push(self.head_main.0);
        out.push(self.head_main.1);
        if let Some((w, b)) = self.head_aux {
            out.push(w);
            out.push(b);
        }
        out
    }
}
