use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system: Cholesky failed with jitter up to {jitter:e}")]
    SingularSystem { jitter: f64 },

    #[error("proposal density is zero at a drawn sample {point:?} (absolute continuity violated)")]
    AbsoluteContinuity { point: Vec<f64> },

    #[error("degenerate normalizer: weight sum {sum:e}")]
    DegenerateNormalizer { sum: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("compression contract violated: MMD {achieved:e} exceeds budget {budget:e}")]
    Contract { achieved: f64, budget: f64 },
}

impl Error {
    /// True for failures caused by the numbers rather than the caller's arguments.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem { .. }
                | Error::DegenerateNormalizer { .. }
                | Error::NonFinite(_)
                | Error::Contract { .. }
        )
    }
}
