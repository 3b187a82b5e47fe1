//! Models, datasets and fixed-point SGD, with an `f64` reference twin.

pub mod backend;
pub mod data;
pub mod float;
pub mod model;
pub mod train;

use thiserror::Error;

use crate::air::AirError;
use crate::fxp::FxpError;

pub use backend::{CircuitBackend, FxpBackend, PlainBackend};
pub use data::{
    ratings_to_examples, read_ratings_csv, read_vectors, synthetic_ratings, train_test_split, write_ratings_csv,
    Example, Rating, Target, VectorFile,
};
pub use float::{train_float, FloatRun};
pub use model::{Layer, Loss, ModelGraph, Weights};
pub use train::{
    accuracy_fxp, backward_fxp, forward_on, load_params, batches_from_orderings, emit_step_witness, forward_fxp, mse_fxp, placeholder_batch,
    sgd_step, train_fxp, train_step, Activations, FxpRun, GradientSet, StepWitness, TrainConfig,
};

#[derive(Debug, Error)]
pub enum NnError {
    #[error(transparent)]
    Fxp(#[from] FxpError),
    #[error(transparent)]
    Air(#[from] AirError),
    #[error("model: {0}")]
    Model(String),
    #[error("shape: {0}")]
    Shape(String),
    #[error("data: {0}")]
    Data(String),
    #[error("io: {0}")]
    Io(String),
    #[error("config: {0}")]
    Config(String),
    #[error("step {step}: {source}")]
    Step { step: usize, source: Box<NnError> },
}
