//! Versioned JSON configuration files for the command-line tool.
//!
//! Every config carries a `version` field (currently 1). Parse errors
//! report the JSON path to the offending field.

use crate::error::{CliError, CliResult};
use peakcr_core::noisegen::CohortSpec;
use peakcr_core::peaks::PeakFindConfig;
use peakcr_core::sample_fields::TargetStat;
use peakcr_core::simharness::{CoverageConfig, IdentifiabilityConfig, RegionMethod};
use peakcr_core::welch::WelchSpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// The config schema version this build reads.
pub const CONFIG_VERSION: u32 = 1;

fn check_version(version: u32) -> CliResult<()> {
    if version != CONFIG_VERSION {
        return Err(CliError::Config(format!(
            "unsupported config version {version}, expected {CONFIG_VERSION}"
        )));
    }
    Ok(())
}

/// Parse a JSON config file of type `T`, reporting the JSON path on error.
///
/// # Errors
/// [`CliError::Data`] when the file is unreadable, [`CliError::Config`] when
/// it does not parse as `T`.
pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        CliError::Config(format!("{}: at {}: {}", path.display(), e.path(), e.inner()))
    })
}

/// Where subject fields come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    /// Simulate a cohort from a generative spec.
    Simulate {
        /// Cohort generator.
        cohort: CohortSpec,
        /// Master seed; omit to draw one from entropy.
        #[serde(default)]
        seed: Option<u64>,
        /// Replicate index within the seed's stream space.
        #[serde(default)]
        replicate: u64,
    },
    /// Read lattice samples from PKCR files, one subject each.
    Files {
        /// Subject files.
        paths: Vec<PathBuf>,
        /// Smoothing kernel width (full width at half maximum) in lattice
        /// units.
        fwhm: f64,
        /// Kernel truncation radius in kernel standard deviations.
        #[serde(default)]
        truncation_sigmas: Option<f64>,
    },
}

/// Config for `simulate`: generate a cohort and write it out.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Schema version.
    pub version: u32,
    /// Cohort generator.
    pub cohort: CohortSpec,
    /// Master seed; omit to draw one from entropy.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Replicate index.
    #[serde(default)]
    pub replicate: u64,
}

/// Config for `peaks`: locate critical points of a statistic field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeaksConfig {
    /// Schema version.
    pub version: u32,
    /// Subject data.
    pub data: DataSource,
    /// Statistic to analyze.
    pub target: TargetStat,
    /// Search tuning; defaults apply when omitted.
    #[serde(default)]
    pub peaks: Option<PeakFindConfig>,
}

/// Config for `regions`: confidence regions at each located maximum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionsConfig {
    /// Schema version.
    pub version: u32,
    /// Subject data.
    pub data: DataSource,
    /// Statistic to analyze.
    pub target: TargetStat,
    /// Nominal miscoverage level.
    pub alpha: f64,
    /// Region calibration.
    #[serde(flatten)]
    pub method: RegionMethod,
    /// Seed for Monte Carlo calibration; omit to draw from entropy.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Bonferroni-adjust the regions to a simultaneous level.
    #[serde(default)]
    pub joint: bool,
    /// Search tuning; defaults apply when omitted.
    #[serde(default)]
    pub peaks: Option<PeakFindConfig>,
}

/// Config for `cover`: a simulation experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverConfig {
    /// Schema version.
    pub version: u32,
    /// Which experiment to run.
    #[serde(flatten)]
    pub experiment: ExperimentKind,
}

/// Simulation experiment selector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Confidence region coverage rates.
    Coverage(CoverageConfig),
    /// Peak pattern recovery rates.
    Identifiability(IdentifiabilityConfig),
}

/// Welch estimation parameters with optional fields defaulted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WelchParams {
    /// Samples per segment (even, at least 8).
    pub segment: usize,
    /// Sampling rate.
    pub rate: f64,
    /// Subtract each segment's mean (default true).
    #[serde(default)]
    pub demean: Option<bool>,
    /// Window edge value (default 0.05).
    #[serde(default)]
    pub edge: Option<f64>,
    /// Frequency band to analyze (default: one bin above zero up to the
    /// folding frequency).
    #[serde(default)]
    pub band: Option<(f64, f64)>,
}

impl WelchParams {
    /// Build the validated spec.
    ///
    /// # Errors
    /// [`CliError::Config`] on invalid parameters.
    pub fn to_spec(&self) -> CliResult<WelchSpec> {
        let mut spec = WelchSpec::new(self.segment, self.rate).map_err(CliError::from_config)?;
        if let Some(demean) = self.demean {
            spec.demean = demean;
        }
        if let Some(edge) = self.edge {
            spec.edge = edge;
        }
        spec.band = self.band;
        spec.validate().map_err(CliError::from_config)?;
        Ok(spec)
    }
}

/// Config for `spectrum`: spectral peaks with confidence intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Schema version.
    pub version: u32,
    /// CSV file holding the series (last column, optional header).
    pub input: PathBuf,
    /// Estimation parameters.
    pub welch: WelchParams,
    /// Nominal miscoverage level.
    pub alpha: f64,
    /// Bonferroni-adjust the intervals to a simultaneous level.
    #[serde(default)]
    pub joint: bool,
    /// Search tuning; defaults apply when omitted.
    #[serde(default)]
    pub peaks: Option<PeakFindConfig>,
}

impl SimulateConfig {
    /// Validate schema-level constraints.
    ///
    /// # Errors
    /// [`CliError::Config`] on version mismatch.
    pub fn validate(&self) -> CliResult<()> {
        check_version(self.version)
    }
}

impl PeaksConfig {
    /// Validate schema-level constraints.
    ///
    /// # Errors
    /// [`CliError::Config`] on version mismatch.
    pub fn validate(&self) -> CliResult<()> {
        check_version(self.version)
    }
}

impl RegionsConfig {
    /// Validate schema-level constraints.
    ///
    /// # Errors
    /// [`CliError::Config`] on version mismatch.
    pub fn validate(&self) -> CliResult<()> {
        check_version(self.version)
    }
}

impl CoverConfig {
    /// Validate schema-level constraints.
    ///
    /// # Errors
    /// [`CliError::Config`] on version mismatch.
    pub fn validate(&self) -> CliResult<()> {
        check_version(self.version)
    }
}

impl SpectrumConfig {
    /// Validate schema-level constraints.
    ///
    /// # Errors
    /// [`CliError::Config`] on version mismatch.
    pub fn validate(&self) -> CliResult<()> {
        check_version(self.version)
    }
}
