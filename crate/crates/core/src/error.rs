use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot sample {requested} distinct recipes of length {length}: only {available} exist")]
    InfeasibleRecipeCount {
        requested: usize,
        length: usize,
        available: u128,
    },
    #[error("recipe length must be positive")]
    EmptyRecipe,
    #[error("need at least 2 {axis} to split, got {got}")]
    TooFewToSplit { axis: &'static str, got: usize },
    #[error("invalid split fractions: train {train}, validation {val}")]
    InvalidFractions { train: f64, val: f64 },
    #[error("final QoR has zero variance over the training split")]
    ZeroVariance,
    #[error("no circuits given")]
    NoCircuits,
    #[error("recipes have inconsistent lengths")]
    RaggedRecipes,
    #[error("{path}: {source}")]
    Netlist {
        path: PathBuf,
        source: lsoformer_aig::AigError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("dataset is inconsistent: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Synth(#[from] lsoformer_synth::SynthError),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("circuit depth {depth} exceeds the model's maximum depth {d_max}")]
    DepthExceeded { depth: usize, d_max: usize },
    #[error("recipe has {got} steps, model expects {expected}")]
    StepMismatch { expected: usize, got: usize },
    #[error("heuristic token {token} out of range (vocabulary size {vocab})")]
    TokenOutOfRange { token: usize, vocab: usize },
    #[error("parameter `{name}` has shape {got:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },
    #[error("MAPE undefined: ground-truth value is zero (circuit {circuit_id}, recipe {recipe_id})")]
    ZeroGroundTruth { circuit_id: usize, recipe_id: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
}
