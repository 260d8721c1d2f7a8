//! Hard-parameter-sharing multi-task classifier and the single-task
//! baseline it is compared against.

mod loss;
mod model;
mod report;
mod train;

pub use loss::{multi_task_loss, TaskWeights};
pub use model::MtlModel;
pub use report::{EpochLoss, RunReport};
pub use train::{accuracy_from_logits, evaluate, evaluate_aux, train_mtl, train_stl, MtlConfig};

use thiserror::Error;

use crate::checkpoint::CheckpointError;
use crate::gradcore::GradError;
use crate::synthgen::DataError;

#[derive(Debug, Error)]
pub enum MtlError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("auxiliary labels cover {got} samples, the view has {want}")]
    MisalignedAuxLabels { got: usize, want: usize },
    #[error("auxiliary label {label} out of range for {classes} classes")]
    AuxLabelOutOfRange { label: i64, classes: usize },
    #[error("cannot evaluate an empty split")]
    EmptySplit,
    #[error("loss became non-finite at epoch {epoch}")]
    NanLoss { epoch: usize },
    #[error(transparent)]
    Grad(#[from] GradError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
