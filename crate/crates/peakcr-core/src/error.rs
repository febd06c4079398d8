//! Crate-wide error type.

use alloc::string::String;

/// Errors surfaced by field evaluation, estimation and region construction.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// An evaluation location lies outside the field's domain box.
    #[error("location outside field domain")]
    OutOfDomain,
    /// The sample variance at the evaluation point is at or below the floor,
    /// so t and Cohen's d values are undefined there.
    #[error("sample variance at or below floor {floor:e}")]
    DegenerateVariance {
        /// Variance floor that was violated.
        floor: f64,
    },
    /// A Hessian required to be invertible is numerically singular.
    #[error("singular Hessian")]
    SingularHessian,
    /// A covariance estimate is numerically singular.
    #[error("covariance condition number {cond:e} exceeds the 1e12 limit")]
    SingularCovariance {
        /// Estimated spectral condition number.
        cond: f64,
    },
    /// A matrix expected to be symmetric is not, beyond tolerance.
    #[error("matrix asymmetry {0:e} exceeds tolerance")]
    NotSymmetric(f64),
    /// A matrix expected to be positive semidefinite has an eigenvalue below
    /// the clipping band.
    #[error("matrix eigenvalue {min_eig:e} below the positive-semidefinite clipping band")]
    NotPositiveSemidefinite {
        /// Most negative eigenvalue found.
        min_eig: f64,
    },
    /// More than half of the Monte Carlo Hessian draws required truncation,
    /// signalling that the Hessian estimate is too noisy for the method.
    #[error("truncation dominates: {truncated} of {total} Monte Carlo draws required intervention")]
    TruncationDominates {
        /// Draws that were mirrored or discarded.
        truncated: usize,
        /// Total draws requested.
        total: usize,
    },
    /// Monte Carlo regions are only defined for the mean target.
    #[error("unsupported: Monte Carlo for Cohen's d")]
    UnsupportedMonteCarloCohensD,
    /// A configuration or argument value is invalid.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    /// A time series is shorter than one Welch segment.
    #[error("series of length {len} is shorter than segment length {segment}")]
    SeriesTooShort {
        /// Observed series length.
        len: usize,
        /// Configured segment length.
        segment: usize,
    },
    /// Too many replicates of a simulation experiment failed.
    #[error("{failed} of {total} replicates failed (limit 5%)")]
    TooManyFailures {
        /// Failed replicate count.
        failed: usize,
        /// Total replicate count.
        total: usize,
    },
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// Shorthand for an [`Error::InvalidParam`] with a formatted message.
    pub fn invalid(msg: impl core::fmt::Display) -> Self {
        Error::InvalidParam(alloc::format!("{msg}"))
    }
}
