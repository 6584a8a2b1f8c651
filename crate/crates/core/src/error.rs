use thiserror::Error;

/// Errors produced by channel generation, precoder design and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("requested {requested} streams but the channel supports at most {available}")]
    StreamCountExceedsRank { requested: usize, available: usize },

    #[error("pattern requires an even antenna count, got {0}")]
    OddAntennaCount(usize),

    #[error("vertical pattern requires an even RF-chain count, got {0}")]
    OddRfChainCount(usize),

    #[error("effective channel is zero; baseband normalization is undefined")]
    ZeroEffectiveChannel,

    #[error("combiner does not have full column rank")]
    RankDeficientCombiner,

    #[error(
        "block diagonalization infeasible for user {user}: interference rank {rank}, need {required}"
    )]
    InfeasibleBlockDiagonalization {
        user: usize,
        rank: usize,
        required: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{0} did not converge")]
    DecompositionFailed(&'static str),

    #[error("serialization: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_mismatch(
    context: &'static str,
    expected: (usize, usize),
    actual: (usize, usize),
) -> Error {
    Error::DimensionMismatch {
        context,
        expected: format!("{}x{}", expected.0, expected.1),
        actual: format!("{}x{}", actual.0, actual.1),
    }
}
