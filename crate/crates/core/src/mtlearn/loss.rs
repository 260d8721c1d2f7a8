//! Weighted two-task classification loss.

use serde::{Deserialize, Serialize};

use crate::gradcore::{Tape, Tensor, Var};
use crate::scalar::Scalar;

use super::MtlError;

/// Fixed task weights; the main task keeps the upper hand by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskWeights {
    pub main: f64,
    pub aux: f64,
}

impl Default for TaskWeights {
    fn default() -> Self {
        Self { main: 1.0, aux: 0.5 }
    }
}

impl TaskWeights {
    pub fn validate(&self) -> Result<(), MtlError> {
        if !(self.main > 0.0) || !self.main.is_finite() {
            return Err(MtlError::Config(format!(
                "main weight must be > 0, got {}",
                self.main
            )));
        }
        if !(self.aux >= 0.0) || !self.aux.is_finite() {
            return Err(MtlError::Config(format!(
                "aux weight must be >= 0, got {}",
                self.aux
            )));
        }
        Ok(())
    }
}

/// `w_main * mean CE(main)` plus `w_aux * masked-mean CE(aux)`. Samples with
/// auxiliary label `-1` are excluded from the auxiliary mean; when every
/// sample is masked the auxiliary term is exactly zero.
pub fn multi_task_loss<S: Scalar>(
    tape: &mut Tape<S>,
    logits_main: Var,
    labels_main: &[usize],
    aux: Option<(Var, &[i64])>,
    weights: &TaskWeights,
) -> Result<Var, MtlError> {
    weights.validate()?;
    let ce_main = tape.softmax_cross_entropy(logits_main, labels_main)?;
    let mean_main = tape.mean(ce_main);
    let mut total = tape.scale(mean_main, S::from_f64(weights.main));

    if let Some((logits_aux, labels_aux)) = aux {
        if labels_aux.len() != labels_main.len() {
            return Err(MtlError::MisalignedAuxLabels {
                got: labels_aux.len(),
                want: labels_main.len(),
            });
        }
        let classes = *tape.value(logits_aux).shape().last().unwrap();
        let mut mask = Vec::with_capacity(labels_aux.len());
        let mut safe_labels = Vec::with_capacity(labels_aux.len());
        let mut valid = 0usize;
        for &l in labels_aux {
            if l < 0 {
                mask.push(S::zero());
                safe_labels.push(0);
            } else {
                if l as usize >= classes {
                    return Err(MtlError::AuxLabelOutOfRange { label: l, classes });
                }
                mask.push(S::one());
                safe_labels.push(l as usize);
                valid += 1;
            }
        }
        if valid > 0 {
            let ce_aux = tape.softmax_cross_entropy(logits_aux, &safe_labels)?;
            let mask_var = tape.leaf(Tensor::vector(mask));
            let masked = tape.mul(ce_aux, mask_var)?;
            let sum = tape.sum(masked);
            let aux_term = tape.scale(sum, S::from_f64(weights.aux / valid as f64));
            total = tape.add(total, aux_term)?;
        }
    }
    Ok(total)
}
