//! QoR trajectory prediction: datasets of optimization trajectories, a
//! graph-encoder / recipe-decoder model family, training and ablations.

pub mod ablation;
pub mod dataset;
pub mod error;
pub mod model;
pub mod tape;
pub mod train;

pub use error::{DataError, ModelError, TrainError};
