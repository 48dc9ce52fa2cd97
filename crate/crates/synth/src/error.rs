use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error("heuristic token {token} out of range (vocabulary size {vocab})")]
    TokenOutOfRange { token: usize, vocab: usize },
    #[error("unknown heuristic `{0}`")]
    UnknownHeuristic(String),
    #[error("unknown metric `{0}` (expected delay or area)")]
    UnknownMetric(String),
    #[error("recipe must contain at least one step")]
    EmptyRecipe,
}
