//! Synthetic cohorts: smoothed lattice noise plus analytic signals.
//!
//! A synthetic subject field is `Y(s) = sigma(s) * eps(s) + mu(s)` where
//! `eps` is white lattice noise convolved and standardized to unit variance
//! ([`crate::grid_field::SmoothField`]), `sigma` is a smooth variance
//! profile, and `mu` is an analytic signal whose jets and true peak
//! locations are known in closed form. Everything about the signal is exact,
//! so simulation studies can compare estimated peaks against the truth
//! without any discretization slack.
//!
//! Noise streams are keyed by (seed, replicate, subject) — see
//! [`crate::rng`] — making every cohort reproducible and every subject
//! independent.

use crate::error::{Error, Result};
use crate::field::{DomainBox, Jet, ScalarField};
use crate::grid_field::{GaussianKernel, Lattice, LatticeSample, SmoothField};
use crate::linalg::{DMat, DVec};
use crate::rng::subject_rng;
use crate::sample_fields::FieldCohort;
use alloc::vec::Vec;
use rand_distr::Distribution;

/// An isotropic Gaussian bump for two-dimensional signals.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussBump {
    /// Bump center.
    pub center: DVec,
    /// Peak height.
    pub amplitude: f64,
    /// Gaussian width (standard deviation).
    pub width: f64,
}

/// Analytic signal shapes with closed-form jets and known peak locations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "shape"))]
pub enum Signal {
    /// Identically zero (negative control).
    Flat,
    /// Concave paraboloid `height - curvature * |s - center|^2`.
    Quadratic {
        /// Peak location.
        center: DVec,
        /// Positive for a maximum at `center`; the Hessian is
        /// `-2 * curvature * I`.
        curvature: f64,
        /// Value at the peak.
        height: f64,
    },
    /// One-dimensional periodic tiling of unit-peak beta-density bumps:
    /// section `j` covers `[j * section, (j+1) * section)` and carries
    /// `amplitude * x^(a-1) (1-x)^(b-1) / (m^(a-1) (1-m)^(b-1))` in local
    /// coordinates `x`, peaking at the mode `m = (a-1)/(a+b-2)`. Sections
    /// join continuously at zero but with unbounded one-sided slope, so the
    /// junctions are cusp minima.
    BetaBumps {
        /// Peak height of every bump.
        amplitude: f64,
        /// Section length in physical units.
        section: f64,
        /// First beta shape parameter (> 1).
        shape_a: f64,
        /// Second beta shape parameter (> 1).
        shape_b: f64,
    },
    /// Sum of isotropic Gaussian bumps (two-dimensional signals). Bump
    /// centers are the true maxima provided the bumps are well separated
    /// (center distances of at least six widths).
    GaussBumps {
        /// The bumps.
        bumps: Vec<GaussBump>,
    },
}

impl Signal {
    /// Validate internal parameters.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] on non-positive sections/widths or beta
    /// shapes at or below one.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Signal::Flat => Ok(()),
            Signal::Quadratic { center, curvature, height } => {
                if center.len() != dim {
                    return Err(Error::invalid("signal center dimension mismatch"));
                }
                if !curvature.is_finite() || !height.is_finite() {
                    return Err(Error::invalid("quadratic signal parameters must be finite"));
                }
                Ok(())
            }
            Signal::BetaBumps { amplitude, section, shape_a, shape_b } => {
                if dim != 1 {
                    return Err(Error::invalid("beta bump signals are one-dimensional"));
                }
                if !(*section > 0.0) || !amplitude.is_finite() {
                    return Err(Error::invalid("beta bump amplitude/section invalid"));
                }
                if !(*shape_a > 1.0) || !(*shape_b > 1.0) {
                    return Err(Error::invalid("beta shapes must exceed one"));
                }
                Ok(())
            }
            Signal::GaussBumps { bumps } => {
                for b in bumps {
                    if b.center.len() != dim {
                        return Err(Error::invalid("bump center dimension mismatch"));
                    }
                    if !(b.width > 0.0) || !b.amplitude.is_finite() {
                        return Err(Error::invalid("bump width/amplitude invalid"));
                    }
                }
                Ok(())
            }
        }
    }

    /// Analytic jet at `s`. Beta-bump junctions have unbounded one-sided
    /// derivatives; evaluation there yields infinities, never panics.
    #[must_use]
    pub fn jet(&self, s: &DVec) -> Jet {
        let dim = s.len();
        match self {
            Signal::Flat => Jet::zeros(dim),
            Signal::Quadratic { center, curvature, height } => {
                let d = s.sub(center);
                Jet::new(
                    height - curvature * d.dot(&d),
                    d.scale(-2.0 * curvature),
                    DMat::identity(dim).scale(-2.0 * curvature),
                )
            }
            Signal::BetaBumps { amplitude, section, shape_a, shape_b } => {
                let (p, q) = (shape_a - 1.0, shape_b - 1.0);
                let mode = p / (p + q);
                let unit = libm::pow(mode, p) * libm::pow(1.0 - mode, q);
                let x = (s[0] - section * libm::floor(s[0] / section)) / section;
                let c = amplitude / unit;
                // g = c x^p (1-x)^q with term-by-term derivatives so the
                // junction limits come out as signed infinities, not NaN
                let xp = libm::pow(x, p);
                let xq = libm::pow(1.0 - x, q);
                let v = c * xp * xq;
                let g = c * (p * libm::pow(x, p - 1.0) * xq - q * xp * libm::pow(1.0 - x, q - 1.0));
                let h = c
                    * (p * (p - 1.0) * libm::pow(x, p - 2.0) * xq
                        - 2.0 * p * q * libm::pow(x, p - 1.0) * libm::pow(1.0 - x, q - 1.0)
                        + q * (q - 1.0) * xp * libm::pow(1.0 - x, q - 2.0));
                let inv_l = 1.0 / section;
                Jet::new(
                    v,
                    DVec::from_slice(&[g * inv_l]),
                    DMat::from_rows(1, &[h * inv_l * inv_l]),
                )
            }
            Signal::GaussBumps { bumps } => {
                let mut jet = Jet::zeros(dim);
                for b in bumps {
                    let d = s.sub(&b.center);
                    let w2 = b.width * b.width;
                    let v = b.amplitude * libm::exp(-0.5 * d.dot(&d) / w2);
                    jet.value += v;
                    jet.gradient = jet.gradient.add(&d.scale(-v / w2));
                    let h = d
                        .outer(&d)
                        .scale(v / (w2 * w2))
                        .sub(&DMat::identity(dim).scale(v / w2));
                    jet.hessian = jet.hessian.add(&h);
                }
                jet
            }
        }
    }

    /// True signal maxima inside `domain`.
    #[must_use]
    pub fn maxima_in(&self, domain: &DomainBox) -> Vec<DVec> {
        match self {
            Signal::Flat => Vec::new(),
            Signal::Quadratic { center, curvature, .. } => {
                if *curvature > 0.0 && domain.contains(center) {
                    alloc::vec![*center]
                } else {
                    Vec::new()
                }
            }
            Signal::BetaBumps { amplitude, section, shape_a, shape_b } => {
                if !(*amplitude > 0.0) {
                    return Vec::new();
                }
                let mode = (shape_a - 1.0) / (shape_a + shape_b - 2.0);
                let (lo, hi) = (domain.lo()[0], domain.hi()[0]);
                let j_lo = libm::ceil(lo / section - mode) as i64;
                let j_hi = libm::floor(hi / section - mode) as i64;
                (j_lo..=j_hi)
                    .map(|j| DVec::from_slice(&[(j as f64 + mode) * section]))
                    .collect()
            }
            Signal::GaussBumps { bumps } => bumps
                .iter()
                .filter(|b| b.amplitude > 0.0 && domain.contains(&b.center))
                .map(|b| b.center)
                .collect(),
        }
    }

    /// Non-smooth cusp points inside `domain` (beta-bump section junctions);
    /// empty for smooth signals.
    #[must_use]
    pub fn cusps_in(&self, domain: &DomainBox) -> Vec<DVec> {
        match self {
            Signal::BetaBumps { section, .. } => {
                let (lo, hi) = (domain.lo()[0], domain.hi()[0]);
                let j_lo = libm::ceil(lo / section) as i64;
                let j_hi = libm::floor(hi / section) as i64;
                (j_lo..=j_hi).map(|j| DVec::from_slice(&[j as f64 * section])).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Pointwise noise scale `sigma(s)` applied to the standardized noise.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "profile"))]
pub enum VarianceProfile {
    /// Constant scale.
    Constant {
        /// The scale (> 0).
        sigma: f64,
    },
    /// Affine scale `base + slope . s`.
    Linear {
        /// Value at the coordinate origin.
        base: f64,
        /// Per-axis slope.
        slope: DVec,
    },
}

impl VarianceProfile {
    /// Unit scale.
    #[must_use]
    pub fn unit() -> Self {
        VarianceProfile::Constant { sigma: 1.0 }
    }

    /// Scale value and gradient at `s` (the Hessian is zero).
    #[must_use]
    pub fn sigma_jet(&self, s: &DVec) -> (f64, DVec) {
        match self {
            VarianceProfile::Constant { sigma } => (*sigma, DVec::zeros(s.len())),
            VarianceProfile::Linear { base, slope } => (base + slope.dot(s), *slope),
        }
    }

    /// Check the scale stays positive on `domain` (affine, so the corners
    /// suffice).
    ///
    /// # Errors
    /// [`Error::InvalidParam`] when the scale can reach zero or below.
    pub fn validate_on(&self, domain: &DomainBox) -> Result<()> {
        match self {
            VarianceProfile::Constant { sigma } => {
                if !(*sigma > 0.0) {
                    return Err(Error::invalid("variance scale must be positive"));
                }
            }
            VarianceProfile::Linear { base, slope } => {
                if slope.len() != domain.dim() {
                    return Err(Error::invalid("variance slope dimension mismatch"));
                }
                let dim = domain.dim();
                let corners = 1usize << dim;
                for mask in 0..corners {
                    let mut corner = DVec::zeros(dim);
                    for d in 0..dim {
                        corner[d] =
                            if mask & (1 << d) == 0 { domain.lo()[d] } else { domain.hi()[d] };
                    }
                    if !(base + slope.dot(&corner) > 0.0) {
                        return Err(Error::invalid("variance scale not positive on domain"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Marginal law of the white lattice noise before smoothing (unit variance
/// either way).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "law"))]
pub enum NoiseKind {
    /// Standard Gaussian.
    Gaussian,
    /// Student t with `df > 2` degrees of freedom, rescaled by
    /// `sqrt((df - 2) / df)` to unit variance.
    StudentT {
        /// Degrees of freedom (> 2).
        df: f64,
    },
}

/// White-noise law plus the smoothing kernel applied to it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseSpec {
    /// Marginal law on the lattice.
    pub kind: NoiseKind,
    /// Kernel full width at half maximum, in physical units.
    pub fwhm: f64,
    /// Kernel truncation radius in bandwidths.
    pub truncation_sigmas: f64,
}

impl NoiseSpec {
    /// Gaussian noise smoothed at the given full width at half maximum with
    /// the default truncation.
    #[must_use]
    pub fn gaussian(fwhm: f64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            fwhm,
            truncation_sigmas: crate::grid_field::DEFAULT_TRUNCATION_SIGMAS,
        }
    }

    /// The smoothing kernel.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] on bad width or truncation, or a Student t
    /// with two or fewer degrees of freedom.
    pub fn kernel(&self) -> Result<GaussianKernel> {
        if let NoiseKind::StudentT { df } = self.kind {
            if !(df > 2.0) {
                return Err(Error::invalid("Student t noise needs df > 2"));
            }
        }
        GaussianKernel::from_fwhm(self.fwhm, self.truncation_sigmas)
    }
}

/// Full description of one synthetic cohort.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CohortSpec {
    /// Observation lattice.
    pub lattice: Lattice,
    /// Noise law and smoothing.
    pub noise: NoiseSpec,
    /// Analytic signal added to the standardized noise.
    pub signal: Signal,
    /// Noise scale profile.
    pub variance: VarianceProfile,
    /// Number of subjects N.
    pub subjects: usize,
}

/// One synthetic subject: `sigma(s) * eps(s) + mu(s)` with standardized
/// smoothed noise `eps`, scale profile `sigma` and analytic signal `mu`.
#[derive(Debug, Clone)]
pub struct SyntheticField {
    noise: SmoothField,
    signal: Signal,
    variance: VarianceProfile,
}

impl SyntheticField {
    /// Assemble a subject field and validate all parts against the noise
    /// field's domain.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] from signal or variance validation.
    pub fn new(noise: SmoothField, signal: Signal, variance: VarianceProfile) -> Result<Self> {
        let domain = noise.domain();
        signal.validate(domain.dim())?;
        variance.validate_on(&domain)?;
        Ok(Self { noise, signal, variance })
    }

    /// The standardized noise component.
    #[must_use]
    pub fn noise(&self) -> &SmoothField {
        &self.noise
    }

    /// The analytic signal component.
    #[must_use]
    pub fn signal(&self) -> &Signal {
        &self.signal
    }

    /// The variance profile.
    #[must_use]
    pub fn variance(&self) -> &VarianceProfile {
        &self.variance
    }
}

impl ScalarField for SyntheticField {
    fn dim(&self) -> usize {
        self.noise.dim()
    }

    fn domain(&self) -> DomainBox {
        self.noise.domain()
    }

    fn grid_step(&self) -> f64 {
        self.noise.grid_step()
    }

    fn jet(&self, s: &DVec) -> Result<Jet> {
        let e = self.noise.jet(s)?;
        let mu = self.signal.jet(s);
        let (sv, sg) = self.variance.sigma_jet(s);
        // product rule on sigma(s) * eps(s); sigma is affine so its Hessian
        // vanishes
        let value = sv * e.value + mu.value;
        let gradient = e.gradient.scale(sv).add(&sg.scale(e.value)).add(&mu.gradient);
        let hessian = e
            .hessian
            .scale(sv)
            .add(&sg.outer(&e.gradient))
            .add(&e.gradient.outer(&sg))
            .add(&mu.hessian);
        Ok(Jet::new(value, gradient, hessian))
    }

    fn value(&self, s: &DVec) -> Result<f64> {
        let (sv, _) = self.variance.sigma_jet(s);
        Ok(sv * self.noise.value(s)? + self.signal.jet(s).value)
    }
}

/// White unit-variance noise on the lattice for one subject.
#[must_use]
fn white_noise(lattice: &Lattice, kind: NoiseKind, seed: u64, replicate: u64, subject: u64) -> Vec<f64> {
    let mut rng = subject_rng(seed, replicate, subject);
    match kind {
        NoiseKind::Gaussian => {
            let normal = rand_distr::StandardNormal;
            (0..lattice.len()).map(|_| normal.sample(&mut rng)).collect()
        }
        NoiseKind::StudentT { df } => {
            let t = rand_distr::StudentT::new(df).expect("validated df");
            let scale = libm::sqrt((df - 2.0) / df);
            (0..lattice.len()).map(|_| scale * t.sample(&mut rng)).collect()
        }
    }
}

/// Generate one subject of a cohort.
///
/// # Errors
/// [`Error::InvalidParam`] from spec validation (kernel, signal, variance,
/// lattice size).
pub fn generate_subject(
    spec: &CohortSpec,
    seed: u64,
    replicate: u64,
    subject: u64,
) -> Result<SyntheticField> {
    let kernel = spec.noise.kernel()?;
    let values = white_noise(&spec.lattice, spec.noise.kind, seed, replicate, subject);
    let sample = LatticeSample::new(spec.lattice, values)?;
    let noise = SmoothField::new(sample, kernel, true)?;
    SyntheticField::new(noise, spec.signal.clone(), spec.variance)
}

/// One subject's raw lattice observations: analytic signal plus site-scaled
/// white noise, before any smoothing.
///
/// This is the on-disk generative model for file-based pipelines: the reader
/// smooths and standardizes the stored lattices itself, so the mean surface
/// it estimates is the smoothed signal rather than the analytic one used by
/// [`generate_subject`].
///
/// # Errors
/// [`Error::InvalidParam`] from spec validation or a non-positive noise
/// scale at some lattice site.
pub fn sample_observations(
    spec: &CohortSpec,
    seed: u64,
    replicate: u64,
    subject: u64,
) -> Result<LatticeSample> {
    spec.noise.kernel()?;
    spec.signal.validate(spec.lattice.dim())?;
    let noise = white_noise(&spec.lattice, spec.noise.kind, seed, replicate, subject);
    let mut values = Vec::with_capacity(spec.lattice.len());
    for (flat, w) in noise.iter().enumerate() {
        let s = spec.lattice.site(flat);
        let (sv, _) = spec.variance.sigma_jet(&s);
        if !(sv > 0.0) || !sv.is_finite() {
            return Err(Error::invalid("noise scale must stay positive on the lattice"));
        }
        values.push(spec.signal.jet(&s).value + sv * w);
    }
    LatticeSample::new(spec.lattice, values)
}

/// Generate a full cohort for one replicate.
///
/// # Errors
/// [`Error::InvalidParam`] when fewer than two subjects are requested or the
/// spec fails validation.
pub fn generate_cohort(
    spec: &CohortSpec,
    seed: u64,
    replicate: u64,
) -> Result<FieldCohort<SyntheticField>> {
    let subjects = (0..spec.subjects as u64)
        .map(|subject| generate_subject(spec, seed, replicate, subject))
        .collect::<Result<Vec<_>>>()?;
    FieldCohort::new(subjects)
}

impl FieldCohort<SyntheticField> {
    /// Mean field of a synthetic cohort as a single synthetic field over the
    /// averaged noise lattices: smoothing and standardization are linear with
    /// a shared divisor, and signal and scale profile are common, so this
    /// equals the subject-loop mean exactly (up to rounding).
    ///
    /// # Errors
    /// [`Error::InvalidParam`] if the subjects disagree on signal or scale
    /// profile (impossible for generated cohorts).
    pub fn pooled_mean_field(&self) -> Result<SyntheticField> {
        let first = &self.subjects()[0];
        for f in &self.subjects()[1..] {
            if f.signal != first.signal || f.variance != first.variance {
                return Err(Error::invalid("subjects disagree on signal or variance"));
            }
        }
        let samples: Vec<LatticeSample> =
            self.subjects().iter().map(|f| f.noise.sample().clone()).collect();
        let avg = LatticeSample::average(&samples)?;
        let noise = SmoothField::new(avg, *first.noise.kernel(), true)?;
        SyntheticField::new(noise, first.signal.clone(), first.variance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn beta_signal(amplitude: f64) -> Signal {
        Signal::BetaBumps { amplitude, section: 20.0, shape_a: 1.5, shape_b: 3.0 }
    }

    fn spec_1d(subjects: usize, signal: Signal) -> CohortSpec {
        CohortSpec {
            lattice: Lattice::unit(&[60]).unwrap(),
            noise: NoiseSpec::gaussian(6.0),
            signal,
            variance: VarianceProfile::unit(),
            subjects,
        }
    }

    #[test]
    fn standardized_noise_has_unit_variance_and_gaussian_autocorrelation() {
        let spec = spec_1d(4000, Signal::Flat);
        let kernel = spec.noise.kernel().unwrap();
        let sk = kernel.sigma();
        let s0 = DVec::from_slice(&[27.0]);
        let mut vals = Vec::new();
        let mut lag1 = Vec::new();
        let mut lag4 = Vec::new();
        for subject in 0..spec.subjects as u64 {
            let f = generate_subject(&spec, 99, 0, subject).unwrap();
            vals.push(f.value(&s0).unwrap());
            lag1.push(f.value(&DVec::from_slice(&[28.0])).unwrap());
            lag4.push(f.value(&DVec::from_slice(&[31.0])).unwrap());
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        assert_abs_diff_eq!(mean, 0.0, epsilon = 0.08);
        assert_abs_diff_eq!(var, 1.0, epsilon = 0.06);
        // standardized smoothed white noise: corr(h) = exp(-h^2 / (4 sigma^2))
        let corr = |other: &[f64]| {
            let mo = other.iter().sum::<f64>() / n;
            let vo = other.iter().map(|v| (v - mo) * (v - mo)).sum::<f64>() / (n - 1.0);
            let c = vals
                .iter()
                .zip(other)
                .map(|(a, b)| (a - mean) * (b - mo))
                .sum::<f64>()
                / (n - 1.0);
            c / libm::sqrt(var * vo)
        };
        assert_abs_diff_eq!(corr(&lag1), libm::exp(-1.0 / (4.0 * sk * sk)), epsilon = 0.03);
        assert_abs_diff_eq!(corr(&lag4), libm::exp(-16.0 / (4.0 * sk * sk)), epsilon = 0.03);
    }

    #[test]
    fn heavy_tailed_noise_is_rescaled_to_unit_variance() {
        let mut spec = spec_1d(4000, Signal::Flat);
        spec.noise.kind = NoiseKind::StudentT { df: 3.0 };
        let s0 = DVec::from_slice(&[27.0]);
        let vals: Vec<f64> = (0..spec.subjects as u64)
            .map(|subject| generate_subject(&spec, 5, 0, subject).unwrap().value(&s0).unwrap())
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        assert_abs_diff_eq!(var, 1.0, epsilon = 0.12);
        assert!(matches!(
            CohortSpec { noise: NoiseSpec { kind: NoiseKind::StudentT { df: 2.0 }, ..spec.noise }, ..spec.clone() }
                .noise
                .kernel(),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn raw_observations_have_signal_mean_and_site_scaled_spread() {
        let mut spec = spec_1d(3000, beta_signal(2.0));
        spec.lattice = Lattice::unit(&[40]).unwrap();
        spec.variance = VarianceProfile::Linear { base: 0.5, slope: DVec::from_slice(&[0.02]) };
        let flat = 10usize;
        let site = spec.lattice.site(flat);
        let draws: Vec<f64> = (0..spec.subjects as u64)
            .map(|subject| sample_observations(&spec, 7, 0, subject).unwrap().values()[flat])
            .collect();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        assert_abs_diff_eq!(mean, spec.signal.jet(&site).value, epsilon = 0.05);
        assert_abs_diff_eq!(libm::sqrt(var), 0.5 + 0.02 * site[0], epsilon = 0.04);
        // same stream as the smoothed generator and fully deterministic
        assert_eq!(
            sample_observations(&spec, 7, 0, 3).unwrap().values(),
            sample_observations(&spec, 7, 0, 3).unwrap().values()
        );
        assert_ne!(
            sample_observations(&spec, 7, 0, 3).unwrap().values(),
            sample_observations(&spec, 7, 0, 4).unwrap().values()
        );
        spec.variance = VarianceProfile::Linear { base: 0.5, slope: DVec::from_slice(&[-0.02]) };
        assert!(matches!(sample_observations(&spec, 7, 0, 0), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn beta_signal_peaks_at_the_mode_with_known_curvature() {
        let signal = beta_signal(2.0);
        // mode of Beta(1.5, 3) is 0.2; with section 20 the peaks sit at
        // (j + 0.2) * 20 and the unit-peak curvature is -15.625 per
        // unit-section squared
        let domain = DomainBox::interval(3.0, 55.0).unwrap();
        let peaks = signal.maxima_in(&domain);
        assert_eq!(peaks.len(), 3);
        assert_abs_diff_eq!(peaks[0][0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(peaks[1][0], 24.0, epsilon = 1e-12);
        assert_abs_diff_eq!(peaks[2][0], 44.0, epsilon = 1e-12);
        let jet = signal.jet(&peaks[1]);
        assert_abs_diff_eq!(jet.value, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(jet.gradient[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(jet.hessian.get(0, 0), 2.0 * -15.625 / 400.0, epsilon = 1e-12);
        let cusps = signal.cusps_in(&domain);
        assert_eq!(cusps.len(), 2);
        assert_abs_diff_eq!(cusps[0][0], 20.0, epsilon = 1e-12);
        // junction: value continuous at zero, slope blows up from the right
        assert_abs_diff_eq!(signal.jet(&cusps[0]).value, 0.0, epsilon = 1e-12);
        assert!(signal.jet(&DVec::from_slice(&[20.0])).gradient[0].is_infinite());
    }

    #[test]
    fn beta_signal_jet_matches_finite_differences() {
        let signal = beta_signal(2.0);
        let h = 1e-6;
        for &x in &[22.0, 24.0, 27.5, 35.0] {
            let jet = signal.jet(&DVec::from_slice(&[x]));
            let vp = signal.jet(&DVec::from_slice(&[x + h])).value;
            let vm = signal.jet(&DVec::from_slice(&[x - h])).value;
            assert_abs_diff_eq!(jet.gradient[0], (vp - vm) / (2.0 * h), epsilon = 1e-6);
            let gp = signal.jet(&DVec::from_slice(&[x + h])).gradient[0];
            let gm = signal.jet(&DVec::from_slice(&[x - h])).gradient[0];
            assert_abs_diff_eq!(jet.hessian.get(0, 0), (gp - gm) / (2.0 * h), epsilon = 1e-5);
        }
    }

    #[test]
    fn gaussian_bumps_jet_and_maxima() {
        let signal = Signal::GaussBumps {
            bumps: alloc::vec![
                GaussBump { center: DVec::from_slice(&[10.0, 12.0]), amplitude: 2.0, width: 2.0 },
                GaussBump { center: DVec::from_slice(&[30.0, 20.0]), amplitude: 1.5, width: 2.5 },
            ],
        };
        let domain =
            DomainBox::new(DVec::from_slice(&[0.0, 0.0]), DVec::from_slice(&[40.0, 32.0]))
                .unwrap();
        assert_eq!(signal.maxima_in(&domain).len(), 2);
        let h = 1e-5;
        let s = DVec::from_slice(&[11.3, 10.2]);
        let jet = signal.jet(&s);
        for a in 0..2 {
            let (mut sp, mut sm) = (s, s);
            sp[a] += h;
            sm[a] -= h;
            let fd = (signal.jet(&sp).value - signal.jet(&sm).value) / (2.0 * h);
            assert_abs_diff_eq!(jet.gradient[a], fd, epsilon = 1e-8);
            for b in 0..2 {
                let gd = (signal.jet(&sp).gradient[b] - signal.jet(&sm).gradient[b]) / (2.0 * h);
                assert_abs_diff_eq!(jet.hessian.get(a, b), gd, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn synthetic_jet_matches_finite_differences_with_linear_variance() {
        let mut spec = spec_1d(2, beta_signal(1.0));
        spec.variance =
            VarianceProfile::Linear { base: 0.5, slope: DVec::from_slice(&[0.02]) };
        let f = generate_subject(&spec, 3, 1, 0).unwrap();
        let h = 1e-5;
        for &x in &[15.0, 24.0, 39.9] {
            let jet = f.jet(&DVec::from_slice(&[x])).unwrap();
            let vp = f.value(&DVec::from_slice(&[x + h])).unwrap();
            let vm = f.value(&DVec::from_slice(&[x - h])).unwrap();
            assert_abs_diff_eq!(jet.gradient[0], (vp - vm) / (2.0 * h), epsilon = 1e-6);
            let gp = f.gradient(&DVec::from_slice(&[x + h])).unwrap()[0];
            let gm = f.gradient(&DVec::from_slice(&[x - h])).unwrap()[0];
            assert_abs_diff_eq!(jet.hessian.get(0, 0), (gp - gm) / (2.0 * h), epsilon = 1e-5);
        }
    }

    #[test]
    fn variance_profile_must_stay_positive() {
        let mut spec = spec_1d(2, Signal::Flat);
        spec.variance =
            VarianceProfile::Linear { base: 0.5, slope: DVec::from_slice(&[-0.02]) };
        assert!(generate_subject(&spec, 1, 0, 0).is_err());
    }

    #[test]
    fn cohorts_are_reproducible_and_subjects_differ() {
        let spec = spec_1d(3, beta_signal(1.0));
        let a = generate_cohort(&spec, 42, 7).unwrap();
        let b = generate_cohort(&spec, 42, 7).unwrap();
        let s = DVec::from_slice(&[24.0]);
        for (fa, fb) in a.subjects().iter().zip(b.subjects()) {
            assert_eq!(fa.value(&s).unwrap(), fb.value(&s).unwrap());
        }
        assert_ne!(
            a.subjects()[0].value(&s).unwrap(),
            a.subjects()[1].value(&s).unwrap()
        );
        let c = generate_cohort(&spec, 42, 8).unwrap();
        assert_ne!(
            a.subjects()[0].value(&s).unwrap(),
            c.subjects()[0].value(&s).unwrap()
        );
    }

    #[test]
    fn pooled_mean_field_matches_subject_loop() {
        let spec = spec_1d(6, beta_signal(2.0));
        let cohort = generate_cohort(&spec, 13, 0).unwrap();
        let pooled = cohort.pooled_mean_field().unwrap();
        let s = DVec::from_slice(&[28.4]);
        let a = cohort.mean_field().jet(&s).unwrap();
        let b = pooled.jet(&s).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-13);
        assert_abs_diff_eq!(a.gradient[0], b.gradient[0], epsilon = 1e-13);
        assert_abs_diff_eq!(a.hessian.get(0, 0), b.hessian.get(0, 0), epsilon = 1e-13);
    }
}
