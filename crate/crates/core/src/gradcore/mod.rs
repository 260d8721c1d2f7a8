//! Reverse-mode automatic differentiation over dense tensors.
//!
//! The design is deliberately small: an explicit, single-owner [`Tape`]
//! records primitive operations during the forward pass and replays them in
//! reverse to accumulate gradients. There is no global graph; a tape lives
//! for one training step and is confined to one thread. Forward values are
//! computed eagerly at record time, so running the same seeded step twice is
//! bit-identical.

mod adamw;
mod check;
mod tape;
mod tensor;

pub use adamw::{AdamW, AdamWConfig};
pub use check::{grad_check, GradCheckReport};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

/// Errors raised by tape operations and the optimizer.
#[derive(Debug, Error)]
pub enum GradError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: invalid shape {shape:?}: {reason}")]
    InvalidShape {
        op: &'static str,
        shape: Vec<usize>,
        reason: String,
    },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("backward root must be a scalar, got shape {shape:?}")]
    NonScalarRoot { shape: Vec<usize> },
    #[error("{op}: input outside the operation's domain ({reason})")]
    Domain { op: &'static str, reason: String },
    #[error("optimizer state holds {expected} parameters, step received {got}")]
    ParamCountMismatch { expected: usize, got: usize },
}
