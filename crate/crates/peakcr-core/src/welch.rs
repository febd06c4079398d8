//! Spectral peak localization for evenly sampled time series.
//!
//! A series is split into half-overlapping, Gaussian-windowed segments.
//! Each segment's log power curve
//! `f |-> 10 log10 |sum_t w[t] x_m[t] e^{-2 pi i f t / rate}|^2 / (rate sum w^2)`
//! is an analytic function of continuous frequency `f` with closed-form
//! first and second derivatives, so a collection of segments forms a cohort
//! of smooth fields over the frequency axis: the cohort mean is the Welch
//! log-average spectrum, and the peak/covariance/region machinery built for
//! lattice cohorts applies unchanged. Half-overlapping Gaussian-windowed
//! segments carry only a few percent mutual correlation (the squared window
//! overlap), which the segment-as-subject treatment neglects.

use crate::error::{Error, Result};
use crate::field::{DomainBox, Jet, ScalarField};
use crate::linalg::{DMat, DVec};
use crate::peaks::{find_critical_points, CriticalPoint, PeakFindConfig, PeakKind};
use crate::regions::ConfidenceEllipsoid;
use crate::sample_fields::{CohortMoments, FieldCohort};
use alloc::vec::Vec;
use num_complex::Complex64;

/// Power floor: spectra are clamped here (with zeroed derivatives) so the
/// log field stays finite where a demeaned segment's transform vanishes.
pub const MIN_POWER: f64 = 1e-300;

/// Spectral estimation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WelchSpec {
    /// Samples per segment (even, at least 8). Consecutive segments
    /// overlap by half a segment.
    pub segment: usize,
    /// Sampling rate in samples per unit time; frequencies are expressed in
    /// cycles per the same unit.
    pub rate: f64,
    /// Subtract each segment's mean before windowing.
    pub demean: bool,
    /// Window value at the segment edges relative to its center.
    pub edge: f64,
    /// Frequency band to analyze; intersected with what the segment
    /// resolves. Defaults to everything up to the folding frequency.
    pub band: Option<(f64, f64)>,
}

impl WelchSpec {
    /// Standard settings: demeaned segments, window edge 0.05, full band.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] unless `segment` is even and at least 8 and
    /// `rate` is positive.
    pub fn new(segment: usize, rate: f64) -> Result<Self> {
        let spec = Self { segment, rate, demean: true, edge: 0.05, band: None };
        spec.validate()?;
        Ok(spec)
    }

    /// Check parameter consistency.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] on any violated constraint.
    pub fn validate(&self) -> Result<()> {
        if self.segment < 8 || !self.segment.is_multiple_of(2) {
            return Err(Error::invalid("segment length must be even and at least 8"));
        }
        if !(self.rate > 0.0) {
            return Err(Error::invalid("sampling rate must be positive"));
        }
        if !(self.edge > 0.0 && self.edge < 1.0) {
            return Err(Error::invalid("window edge must lie in (0, 1)"));
        }
        if let Some((lo, hi)) = self.band {
            if !(lo >= 0.0 && hi <= 0.5 * self.rate && lo < hi) {
                return Err(Error::invalid(
                    "band must satisfy 0 <= lo < hi <= rate / 2",
                ));
            }
        }
        Ok(())
    }

    /// Segment advance: half a segment.
    #[must_use]
    pub fn stride(&self) -> usize {
        self.segment - self.segment / 2
    }

    /// Frequency resolution of one segment (the bin spacing).
    #[must_use]
    pub fn bin_width(&self) -> f64 {
        self.rate / self.segment as f64
    }

    /// Frequency domain analyzed: the requested band, or everything between
    /// one bin above zero (where demeaning empties the spectrum) and the
    /// folding frequency.
    #[must_use]
    pub fn domain(&self) -> DomainBox {
        let (lo, hi) = match self.band {
            Some(band) => band,
            None if self.demean => (self.bin_width(), 0.5 * self.rate),
            None => (0.0, 0.5 * self.rate),
        };
        DomainBox::interval(lo, hi).expect("validated band")
    }
}

/// Gaussian window of length `len` whose end samples sit at `edge` times the
/// central value.
#[must_use]
pub fn gaussian_window(len: usize, edge: f64) -> Vec<f64> {
    let c = (len as f64 - 1.0) / 2.0;
    let tau = c / libm::sqrt(2.0 * libm::log(1.0 / edge));
    (0..len)
        .map(|t| {
            let u = (t as f64 - c) / tau;
            libm::exp(-0.5 * u * u)
        })
        .collect()
}

/// One windowed segment's log power curve as a field over frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSpectrum {
    weighted: Vec<f64>,
    rate: f64,
    norm: f64,
    domain: DomainBox,
    bin: f64,
}

impl SegmentSpectrum {
    fn new(samples: &[f64], window: &[f64], spec: &WelchSpec) -> Self {
        let mean = if spec.demean {
            samples.iter().sum::<f64>() / samples.len() as f64
        } else {
            0.0
        };
        let weighted: Vec<f64> =
            samples.iter().zip(window).map(|(x, w)| (x - mean) * w).collect();
        let wsq: f64 = window.iter().map(|w| w * w).sum();
        SegmentSpectrum {
            weighted,
            rate: spec.rate,
            norm: 1.0 / (spec.rate * wsq),
            domain: spec.domain(),
            bin: spec.bin_width(),
        }
    }

    /// Windowed transform and its first two frequency derivatives.
    fn transform(&self, freq: f64) -> (Complex64, Complex64, Complex64) {
        let theta = -2.0 * core::f64::consts::PI * freq / self.rate;
        let rot = Complex64::new(libm::cos(theta), libm::sin(theta));
        let mut phase = Complex64::new(1.0, 0.0);
        let mut s0 = Complex64::new(0.0, 0.0);
        let mut s1 = Complex64::new(0.0, 0.0);
        let mut s2 = Complex64::new(0.0, 0.0);
        for (t, &u) in self.weighted.iter().enumerate() {
            let omega = 2.0 * core::f64::consts::PI * t as f64 / self.rate;
            let term = phase * u;
            s0 += term;
            s1 += term * omega;
            s2 += term * (omega * omega);
            phase *= rot;
        }
        // d/df e^{-i omega f} brings down -i omega
        (s0, s1 * Complex64::new(0.0, -1.0), -s2)
    }

    /// Power density and its first two frequency derivatives.
    #[must_use]
    pub fn power_jet(&self, freq: f64) -> (f64, f64, f64) {
        let (z, z1, z2) = self.transform(freq);
        let p = self.norm * z.norm_sqr();
        let p1 = self.norm * 2.0 * (z.conj() * z1).re;
        let p2 = self.norm * (2.0 * (z.conj() * z2).re + 2.0 * z1.norm_sqr());
        (p, p1, p2)
    }
}

impl ScalarField for SegmentSpectrum {
    fn dim(&self) -> usize {
        1
    }

    fn domain(&self) -> DomainBox {
        self.domain
    }

    fn grid_step(&self) -> f64 {
        self.bin
    }

    fn jet(&self, s: &DVec) -> Result<Jet> {
        if s.len() != 1 || !self.domain.contains(s) {
            return Err(Error::OutOfDomain);
        }
        let (p, p1, p2) = self.power_jet(s[0]);
        let k = 10.0 / core::f64::consts::LN_10;
        let (value, d1, d2) = if p <= MIN_POWER {
            (k * libm::log(MIN_POWER), 0.0, 0.0)
        } else {
            let r = p1 / p;
            (k * libm::log(p), k * r, k * (p2 / p - r * r))
        };
        Ok(Jet {
            value,
            gradient: DVec::from_slice(&[d1]),
            hessian: DMat::from_rows(1, &[d2]),
        })
    }
}

/// Split a series into windowed segment spectra.
///
/// # Errors
/// [`Error::SeriesTooShort`] when not even one full segment fits;
/// [`Error::InvalidParam`] from spec validation.
pub fn segment_spectra(series: &[f64], spec: &WelchSpec) -> Result<Vec<SegmentSpectrum>> {
    spec.validate()?;
    if series.len() < spec.segment {
        return Err(Error::SeriesTooShort { len: series.len(), segment: spec.segment });
    }
    let window = gaussian_window(spec.segment, spec.edge);
    let stride = spec.stride();
    let mut out = Vec::new();
    let mut start = 0usize;
    while start + spec.segment <= series.len() {
        out.push(SegmentSpectrum::new(&series[start..start + spec.segment], &window, spec));
        start += stride;
    }
    Ok(out)
}

/// Segment spectra bundled as a cohort: the mean field is the Welch
/// log-average spectrum and segment scatter feeds the covariance estimates.
///
/// # Errors
/// [`Error::SeriesTooShort`] when fewer than two segments fit.
pub fn welch_cohort(series: &[f64], spec: &WelchSpec) -> Result<FieldCohort<SegmentSpectrum>> {
    let segments = segment_spectra(series, spec)?;
    if segments.len() < 2 {
        return Err(Error::SeriesTooShort { len: series.len(), segment: spec.segment });
    }
    FieldCohort::new(segments)
}

/// A located spectral peak with its confidence region.
#[derive(Debug, Clone)]
pub struct SpectralPeak {
    /// The peak of the log-average spectrum.
    pub peak: CriticalPoint,
    /// Confidence region for the underlying peak frequency.
    pub region: ConfidenceEllipsoid,
}

/// Locate every interior maximum of the Welch log-average spectrum and build
/// an asymptotic confidence region for each peak frequency. Regions are
/// returned at the marginal level; apply
/// [`ConfidenceEllipsoid::bonferroni_joint`] for simultaneous statements.
///
/// # Errors
/// [`Error::SeriesTooShort`] / [`Error::InvalidParam`] on unusable input,
/// and any numeric failure from the covariance or region steps.
pub fn spectrum_peak_regions(
    series: &[f64],
    spec: &WelchSpec,
    alpha: f64,
    config: &PeakFindConfig,
) -> Result<Vec<SpectralPeak>> {
    let cohort = welch_cohort(series, spec)?;
    let field = cohort.mean_field();
    let report = find_critical_points(&field, config)?;
    let mut out = Vec::new();
    for peak in report.points {
        if peak.kind != PeakKind::Max {
            continue;
        }
        let jets = cohort.subject_jets(&peak.location)?;
        let cov = crate::covariance::PointCovariance::from_jets(&jets)?;
        cov.check_conditioning()?;
        let moments = CohortMoments::from_jets(&jets);
        let region = ConfidenceEllipsoid::asymptotic_mean(
            peak.location,
            &moments.mean().hessian,
            &cov,
            cohort.len(),
            alpha,
        )?;
        out.push(SpectralPeak { peak, region });
    }
    Ok(out)
}
