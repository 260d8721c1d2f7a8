//! Procedural factor-image dataset: rendering, corruption, pair sampling,
//! and combination-holdout splits.

mod dataset;
mod format;
mod noise;
mod render;
mod spec;

pub use dataset::{generate, sample_pairs, split_holdout, FactorDataset, Pair, PairBatch, TrainView};
pub use format::{read_dtxd, write_dtxd, RawDataset};
pub use noise::salt_pepper;
pub use render::{glyph_bbox, render, ImageSample};
pub use spec::{Factor, FactorSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid factor spec: {0}")]
    InvalidSpec(String),
    #[error("factor tuple {tuple:?} out of range for cardinalities {cards:?}")]
    TupleOutOfRange { tuple: Vec<u16>, cards: Vec<u16> },
    #[error("noise fraction {0} outside [0, 1]")]
    FractionOutOfRange(f64),
    #[error("principal class {class} has {count} samples, need at least 2")]
    ClassTooSmall { class: usize, count: usize },
    #[error("cannot sample differing-label pairs from a single class")]
    SingleClass,
    #[error("principal factor {0:?} may not be held out")]
    PrincipalInHoldout(String),
    #[error("unknown factor {0:?}")]
    UnknownFactor(String),
    #[error("dataset file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
