use thiserror::Error;

/// Which consensus-matrix requirement a candidate `Z` failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsensusViolation {
    Shape,
    Asymmetric,
    RowSums,
    SparsityMismatch,
    NonpositiveDiagonal,
    NegativeWeight,
}

impl std::fmt::Display for ConsensusViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Shape => "shape",
            Self::Asymmetric => "asymmetric",
            Self::RowSums => "row sums",
            Self::SparsityMismatch => "sparsity mismatch",
            Self::NonpositiveDiagonal => "nonpositive diagonal",
            Self::NegativeWeight => "negative weight",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum DishError {
    #[error("graph generation failed after {attempts} attempts")]
    GraphGenerationFailed { attempts: usize },

    #[error("graph not connected")]
    GraphNotConnected,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid consensus matrix: {0}")]
    InvalidConsensus(ConsensusViolation),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("divergence at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("protocol violation: agent {agent} missing message from {from}")]
    ProtocolViolation { agent: usize, from: usize },

    #[error("inner solve failed after {iterations} iterations (residual {residual:e})")]
    InnerSolveFailed { iterations: usize, residual: f64 },

    #[error("inconsistent system (residual {residual:e})")]
    InconsistentSystem { residual: f64 },

    #[error("insufficient points: {found} usable, {required} required")]
    InsufficientPoints { found: usize, required: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DishError>;
