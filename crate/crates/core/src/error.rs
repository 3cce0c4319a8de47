use alloc::string::String;

/// Errors produced by the reconstruction core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate normal for part `{0}`")]
    DegenerateNormal(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("point {index} is behind the camera (z = {z})")]
    BehindCamera { index: usize, z: f64 },
    #[error("optimization failed: {0}")]
    OptimizationFailure(String),
    #[error("no candidate poses remain after filtering by `{0}`")]
    NoCandidate(String),
    #[error("could not parse response: {raw:?}")]
    Parse { raw: String },
    #[error("size {0} m is outside the sanity band [0.01, 10]")]
    Sanity(f64),
    #[error("no interaction pair survived label normalization")]
    NormalizationFailure,
    #[error("interaction pair ({object_part}, {body_part}) refers to a missing part")]
    MissingPart {
        object_part: String,
        body_part: String,
    },
    #[error("missing size prior for {0}")]
    MissingPrior(String),
    #[error("completion client: {0}")]
    Client(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
