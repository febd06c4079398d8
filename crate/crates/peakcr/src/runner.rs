//! Parallel experiment drivers.
//!
//! Replicates derive independent random streams from the master seed, so
//! they can run on any number of threads in any order; outcomes are
//! collected back in replicate order and thread count never changes the
//! numbers, only the wall clock.

use crate::error::{CliError, CliResult};
use peakcr_core::simharness::{
    aggregate_coverage, aggregate_identifiability, coverage_replicate, identifiability_replicate,
    CoverageConfig, CoverageReport, IdentifiabilityConfig, IdentifiabilityReport, RegionMethod,
};
use peakcr_core::sample_fields::TargetStat;
use peakcr_core::Error as CoreError;
use rayon::prelude::*;

/// Environment variable consulted for the thread count when no explicit
/// value is given.
pub const THREADS_ENV: &str = "PEAKCR_THREADS";

/// Configure the global thread pool. Explicit `threads` wins, then the
/// `PEAKCR_THREADS` environment variable, then one thread per core. Returns
/// the effective thread count.
///
/// # Errors
/// [`CliError::Config`] when the environment variable is set but not a
/// positive integer.
pub fn init_threads(threads: Option<usize>) -> CliResult<usize> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(text) => Some(text.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Config(format!("{THREADS_ENV}={text} is not a positive integer"))
        })?),
        Err(_) => None,
    };
    if let Some(n) = threads.or(from_env) {
        // a pool may already exist (tests, repeated calls); the numbers do
        // not depend on the pool size, so that is only a missed preference
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

/// Run a coverage experiment across the thread pool.
///
/// # Errors
/// As the sequential driver: unsupported method/target combinations,
/// [`CoreError::TooManyFailures`] past the failure budget, and aggregation
/// failures.
pub fn parallel_coverage(config: &CoverageConfig) -> Result<CoverageReport, CoreError> {
    if config.target == TargetStat::CohensD
        && matches!(config.method, RegionMethod::MonteCarlo { .. })
    {
        return Err(CoreError::UnsupportedMonteCarloCohensD);
    }
    let outcomes: Vec<_> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| coverage_replicate(config, r))
        .collect();
    aggregate_coverage(&outcomes, config.alpha)
}

/// Run an identifiability experiment across the thread pool.
///
/// # Errors
/// As the sequential driver.
pub fn parallel_identifiability(
    config: &IdentifiabilityConfig,
) -> Result<IdentifiabilityReport, CoreError> {
    let outcomes: Vec<_> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| identifiability_replicate(config, r))
        .collect();
    aggregate_identifiability(&outcomes)
}
