use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid reuse factor {0}: hexagonal reuse requires R = i^2 + i*j + j^2")]
    InvalidReuseFactor(usize),

    #[error("user position coincides with the base station")]
    CoincidentPositions,

    #[error("estimate has zero norm; combiner/precoder is undefined")]
    ZeroEstimate,

    #[error("interferer steering matrix is rank deficient (rank {rank} of {columns})")]
    RankDeficient { rank: usize, columns: usize },

    #[error("missing large-scale gains: {0}")]
    MissingBetas(&'static str),

    #[error("interference-free regime: the high-SNR limit is unbounded")]
    InterferenceFree,

    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("malformed record at line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn in_trial(self, trial: u64) -> Self {
        Error::Trial {
            trial,
            source: Box::new(self),
        }
    }
}
