use thiserror::Error;

use crate::separate::FactorAssignment;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rank deficient: {requested} components requested but the data has rank {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("zero bandwidth: all sampled pairwise distances are zero")]
    ZeroBandwidth,

    #[error("point {index} has zero total kernel weight")]
    DisconnectedPoint { index: usize },

    #[error("kernel graph is disconnected ({components} connected components)")]
    Disconnected { components: usize },

    #[error("eigensolver did not converge after {iterations} iterations (max relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("index {index} out of range ({valid})")]
    Index { index: usize, valid: String },

    #[error("no triplets survived the thresholds; loosen delta or gamma, or request more eigenvectors")]
    EmptyTriplets,

    #[error("{size} factor eigenvectors exceed the exact Max-Cut limit of {limit}; use the SDP solver")]
    TooLarge { size: usize, limit: usize },

    #[error("SDP ascent stopped after {iterations} iterations with gradient norm {grad_norm:.3e}")]
    SdpNoConvergence {
        iterations: usize,
        grad_norm: f64,
        best: Box<FactorAssignment>,
    },

    #[error("factor group {group} has {size} eigenvectors, {dims} requested")]
    InsufficientFactors { group: usize, size: usize, dims: usize },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input {path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }
}
