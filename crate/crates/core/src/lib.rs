//! Core library: subspace disentanglement with a task-aware oracle,
//! auxiliary label mining by density clustering, and hard-parameter-sharing
//! multi-task training, all on top of a small tape-based autodiff engine.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); concrete type
//! aliases for both precisions live at the crate root. Training defaults to
//! 32-bit, gradient verification runs in 64-bit.

pub mod checkpoint;
pub mod gradcore;
pub mod linalg;
pub mod metrics;
pub mod mtlearn;
pub mod nn;
pub mod rng;
pub mod scalar;
pub mod subspace;
pub mod synthgen;
pub mod taskmine;

pub use gradcore::{Tape, Tensor, Var};
pub use scalar::Scalar;

/// 32-bit tensor, the training default.
pub type Tensor32 = Tensor<f32>;
/// 64-bit tensor, used by gradient tests and anywhere extra headroom helps.
pub type Tensor64 = Tensor<f64>;
pub type Tape32 = Tape<f32>;
pub type Tape64 = Tape<f64>;
pub type DisModel32 = subspace::DisModel<f32>;
pub type DisModel64 = subspace::DisModel<f64>;
pub type MtlModel32 = mtlearn::MtlModel<f32>;
pub type MtlModel64 = mtlearn::MtlModel<f64>;
