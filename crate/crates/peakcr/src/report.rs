//! JSON report structures written by the command-line tool.
//!
//! Reports convert core results into plain nested lists so the JSON stays
//! stable and toolable; field order is fixed by the struct definitions and
//! output is deterministic for a given seed.

use crate::config::CONFIG_VERSION;
use crate::error::{CliError, CliResult};
use peakcr_core::linalg::{DMat, DVec};
use peakcr_core::peaks::{CriticalPoint, PeakKind};
use peakcr_core::regions::ConfidenceEllipsoid;
use peakcr_core::sample_fields::TargetStat;
use peakcr_core::simharness::{CoverageReport, IdentifiabilityReport, RegionMethod};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

fn vec_of(v: &DVec) -> Vec<f64> {
    v.as_slice().to_vec()
}

fn rows_of(m: &DMat) -> Vec<Vec<f64>> {
    (0..m.n()).map(|i| (0..m.n()).map(|j| m.get(i, j)).collect()).collect()
}

fn kind_name(kind: PeakKind) -> &'static str {
    match kind {
        PeakKind::Max => "max",
        PeakKind::Min => "min",
        PeakKind::Saddle => "saddle",
        PeakKind::Degenerate => "degenerate",
    }
}

fn target_name(target: TargetStat) -> &'static str {
    match target {
        TargetStat::Mean => "mean",
        TargetStat::CohensD => "cohens_d",
    }
}

fn method_name(method: RegionMethod) -> String {
    match method {
        RegionMethod::Asymptotic => "asymptotic".into(),
        RegionMethod::MonteCarlo { draws } => format!("monte_carlo[{draws}]"),
    }
}

/// One critical point.
#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    /// Location.
    pub location: Vec<f64>,
    /// Field value there.
    pub value: f64,
    /// Spectral classification.
    pub kind: String,
    /// Gradient norm at convergence.
    pub gradient_norm: f64,
    /// Hessian rows.
    pub hessian: Vec<Vec<f64>>,
}

impl PointReport {
    /// Convert a located critical point.
    #[must_use]
    pub fn from_point(p: &CriticalPoint) -> Self {
        PointReport {
            location: vec_of(&p.location),
            value: p.value,
            kind: kind_name(p.kind).into(),
            gradient_norm: p.gradient_norm,
            hessian: rows_of(&p.hessian),
        }
    }
}

/// One ellipsoid axis.
#[derive(Debug, Clone, Serialize)]
pub struct AxisReport {
    /// Half-length of the ellipsoid along this axis.
    pub half_length: f64,
    /// Unit direction.
    pub direction: Vec<f64>,
}

/// Hessian-draw truncation accounting for Monte Carlo calibration.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationReport {
    /// Draws used as sampled.
    pub kept: usize,
    /// Draws mirrored through the mean.
    pub mirrored: usize,
    /// Draws discarded.
    pub discarded: usize,
}

/// One confidence region.
#[derive(Debug, Clone, Serialize)]
pub struct RegionReport {
    /// Region center (the located peak).
    pub center: Vec<f64>,
    /// Subjects behind the estimate.
    pub n: usize,
    /// Miscoverage level after any joint adjustment.
    pub alpha: f64,
    /// Mahalanobis threshold defining the boundary.
    pub threshold: f64,
    /// Scaled shape matrix rows.
    pub shape: Vec<Vec<f64>>,
    /// Principal semi-axes.
    pub semi_axes: Vec<AxisReport>,
    /// For one-dimensional regions, the interval endpoints.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    /// Monte Carlo truncation accounting, when applicable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationReport>,
}

impl RegionReport {
    /// Convert a confidence ellipsoid.
    #[must_use]
    pub fn from_region(region: &ConfidenceEllipsoid) -> Self {
        let center = vec_of(&region.center());
        let semi_axes: Vec<AxisReport> = region
            .semi_axes()
            .into_iter()
            .map(|(half_length, direction)| AxisReport {
                half_length,
                direction: vec_of(&direction),
            })
            .collect();
        let interval = if center.len() == 1 {
            let h = semi_axes.last().map_or(f64::NAN, |a| a.half_length);
            Some((center[0] - h, center[0] + h))
        } else {
            None
        };
        RegionReport {
            center,
            n: region.n(),
            alpha: region.alpha(),
            threshold: region.threshold(),
            shape: rows_of(&region.shape()),
            semi_axes,
            interval,
            truncation: region.truncation().map(|t| TruncationReport {
                kept: t.kept,
                mirrored: t.mirrored,
                discarded: t.discarded,
            }),
        }
    }
}

/// Output of `peaks`.
#[derive(Debug, Clone, Serialize)]
pub struct PeaksReport {
    /// Schema version.
    pub version: u32,
    /// Statistic analyzed.
    pub target: String,
    /// Seeds examined.
    pub seeds: usize,
    /// Seeds dropped without convergence.
    pub dropped: usize,
    /// Critical points in canonical order.
    pub points: Vec<PointReport>,
}

impl PeaksReport {
    /// Assemble from a search outcome.
    #[must_use]
    pub fn new(target: TargetStat, report: &peakcr_core::peaks::PeakFindReport) -> Self {
        PeaksReport {
            version: CONFIG_VERSION,
            target: target_name(target).into(),
            seeds: report.seeds,
            dropped: report.dropped,
            points: report.points.iter().map(PointReport::from_point).collect(),
        }
    }
}

/// Output of `regions`.
#[derive(Debug, Clone, Serialize)]
pub struct RegionsReport {
    /// Schema version.
    pub version: u32,
    /// Statistic analyzed.
    pub target: String,
    /// Calibration used.
    pub method: String,
    /// Marginal miscoverage level requested.
    pub alpha: f64,
    /// Whether regions were jointly adjusted.
    pub joint: bool,
    /// Seed used for Monte Carlo calibration, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// The maxima regions were built at.
    pub peaks: Vec<PointReport>,
    /// One region per peak.
    pub regions: Vec<RegionReport>,
}

impl RegionsReport {
    /// Assemble from located maxima and their regions.
    #[must_use]
    pub fn new(
        target: TargetStat,
        method: RegionMethod,
        alpha: f64,
        joint: bool,
        seed: Option<u64>,
        peaks: &[CriticalPoint],
        regions: &[ConfidenceEllipsoid],
    ) -> Self {
        RegionsReport {
            version: CONFIG_VERSION,
            target: target_name(target).into(),
            method: method_name(method),
            alpha,
            joint,
            seed,
            peaks: peaks.iter().map(PointReport::from_point).collect(),
            regions: regions.iter().map(RegionReport::from_region).collect(),
        }
    }
}

/// Output of `cover`.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum CoverReport {
    /// Coverage experiment summary.
    Coverage {
        /// Schema version.
        version: u32,
        /// The summary itself.
        #[serde(flatten)]
        report: CoverageReport,
    },
    /// Identifiability experiment summary.
    Identifiability {
        /// Schema version.
        version: u32,
        /// The summary itself.
        #[serde(flatten)]
        report: IdentifiabilityReport,
    },
}

impl CoverReport {
    /// Wrap a coverage summary.
    #[must_use]
    pub fn coverage(report: CoverageReport) -> Self {
        CoverReport::Coverage { version: CONFIG_VERSION, report }
    }

    /// Wrap an identifiability summary.
    #[must_use]
    pub fn identifiability(report: IdentifiabilityReport) -> Self {
        CoverReport::Identifiability { version: CONFIG_VERSION, report }
    }
}

/// Output of `simulate`: what was written where.
#[derive(Debug, Clone, Serialize)]
pub struct SimulateManifest {
    /// Schema version.
    pub version: u32,
    /// Seed actually used.
    pub seed: u64,
    /// Replicate index.
    pub replicate: u64,
    /// Number of subjects written.
    pub subjects: usize,
    /// Subject files, in subject order.
    pub files: Vec<String>,
}

/// One spectral peak with its interval.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralPeakReport {
    /// Peak frequency.
    pub frequency: f64,
    /// Log-average power there, in decibels.
    pub power_db: f64,
    /// Confidence interval for the peak frequency.
    pub interval: (f64, f64),
    /// Full region detail.
    pub region: RegionReport,
}

/// Output of `spectrum`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    /// Schema version.
    pub version: u32,
    /// Sampling rate.
    pub rate: f64,
    /// Segment length.
    pub segment: usize,
    /// Segments averaged.
    pub segments: usize,
    /// Marginal miscoverage level requested.
    pub alpha: f64,
    /// Whether intervals were jointly adjusted.
    pub joint: bool,
    /// Band analyzed.
    pub band: (f64, f64),
    /// Peaks in decreasing power order.
    pub peaks: Vec<SpectralPeakReport>,
}

/// Serialize `value` as pretty JSON to `out`, or stdout when `out` is
/// absent.
///
/// # Errors
/// [`CliError::Data`] on serialization or IO failure.
pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("serializing report: {e}")))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Data(format!("stdout: {e}"))),
    }
}
