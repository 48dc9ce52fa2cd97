use thiserror::Error;

/// Errors raised while building, importing or analysing an AIG.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: undefined signal `{name}`")]
    UndefinedSignal { name: String, line: usize },

    #[error("line {line}: gate {gate} expects {expected} fan-in(s), got {got}")]
    Arity {
        gate: String,
        line: usize,
        expected: String,
        got: usize,
    },

    #[error("cyclic definition involving `{0}`")]
    Cycle(String),

    #[error("invalid graph: {0}")]
    Invalid(String),

    #[error("assignment has {got} bits but the graph has {expected} primary inputs")]
    AssignmentLength { expected: usize, got: usize },

    #[error("exhaustive simulation over {0} inputs is not supported")]
    TooManyInputs(usize),
}

pub type Result<T> = std::result::Result<T, AigError>;
