//! Simulation experiments: coverage of confidence regions, peak
//! identifiability, and direct checks of the distributional facts the
//! region constructions rest on.
//!
//! Each experiment exposes a pure per-replicate function (safe to fan out
//! across threads; replicate `r` derives its own random streams from the
//! master seed) alongside a sequential driver that aggregates outcomes.
//! Replicates that fail numerically are counted, and an experiment whose
//! failure fraction exceeds [`MAX_FAILURE_FRACTION`] reports
//! [`Error::TooManyFailures`] instead of a biased summary.

use crate::covariance::{cohens_d_grad_cov, PointCovariance};
use crate::error::{Error, Result};
use crate::field::{DomainBox, ScalarField};
use crate::linalg::{DMat, DVec, HMat};
use crate::noisegen::{generate_cohort, CohortSpec, SyntheticField};
use crate::peaks::{argmax_in_ball, find_critical_points, PeakFindConfig, PeakKind};
use crate::regions::{ConfidenceEllipsoid, Polarity};
use crate::rng::lemma_rng;
use crate::sample_fields::{CohortMoments, FieldCohort, TargetStat};
use crate::special::normal_cdf;
use alloc::vec::Vec;
use rand_distr::{Distribution, StandardNormal};

/// Largest tolerated fraction of failed replicates in a summary.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

/// How a confidence region is calibrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "method"))]
pub enum RegionMethod {
    /// Chi-squared threshold from the limiting law.
    Asymptotic,
    /// Simulated threshold from perturbed gradient/Hessian draws.
    MonteCarlo {
        /// Number of draws per region.
        draws: usize,
    },
}

/// A closed Euclidean ball, used both for peak attribution and for masking
/// regions where spurious critical points are expected.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BallSpec {
    /// Ball center.
    pub center: DVec,
    /// Ball radius.
    pub radius: f64,
}

impl BallSpec {
    /// Whether `point` lies in the closed ball.
    #[must_use]
    pub fn contains(&self, point: &DVec) -> bool {
        let d = point.sub(&self.center);
        d.dot(&d) <= self.radius * self.radius
    }
}

/// Full description of a coverage experiment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverageConfig {
    /// Cohort generator.
    pub cohort: CohortSpec,
    /// Statistic whose peaks are localized.
    pub target: TargetStat,
    /// Region calibration.
    pub method: RegionMethod,
    /// Nominal miscoverage level.
    pub alpha: f64,
    /// Number of replicates.
    pub replicates: usize,
    /// Master seed.
    pub seed: u64,
    /// Radius of the attribution ball around each true peak.
    pub ball_radius: f64,
    /// Critical-point search tuning.
    pub peaks: PeakFindConfig,
    /// True peak locations; when absent they are taken from the signal's
    /// analytic maxima inside the field domain.
    pub truth: Option<Vec<DVec>>,
}

/// Coverage outcome of a single replicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicateCoverage {
    /// Marginal coverage per true peak.
    pub covered: Vec<bool>,
    /// All peaks simultaneously covered by Bonferroni-adjusted regions.
    pub joint: bool,
}

/// Aggregated coverage summary.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverageReport {
    /// Replicates attempted.
    pub replicates: usize,
    /// Replicates that failed numerically.
    pub failed: usize,
    /// Number of tracked peaks.
    pub peaks: usize,
    /// Nominal miscoverage level.
    pub alpha: f64,
    /// Coverage rate per peak.
    pub per_peak: Vec<f64>,
    /// Average coverage over peaks and successful replicates.
    pub marginal: f64,
    /// Simultaneous coverage rate of the Bonferroni-adjusted regions.
    pub joint: f64,
    /// Half-width of a 95% binomial band around `marginal`.
    pub band: f64,
}

/// True peak locations for a coverage experiment.
///
/// # Errors
/// [`Error::InvalidParam`] when no peak lies inside the usable domain.
pub fn coverage_truth(config: &CoverageConfig, domain: &DomainBox) -> Result<Vec<DVec>> {
    let truth = match &config.truth {
        Some(t) => t.clone(),
        None => config.cohort.signal.maxima_in(domain),
    };
    if truth.is_empty() {
        return Err(Error::invalid("no true peaks inside the field domain"));
    }
    Ok(truth)
}

fn build_regions<F: ScalarField>(
    field: &F,
    cohort: &FieldCohort<SyntheticField>,
    truth: &[DVec],
    config: &CoverageConfig,
    replicate: u64,
) -> Result<Vec<ConfidenceEllipsoid>> {
    let n = cohort.len();
    let mut regions = Vec::with_capacity(truth.len());
    for (j, theta) in truth.iter().enumerate() {
        let hat = argmax_in_ball(field, theta, config.ball_radius, &config.peaks)?;
        if hat.kind != PeakKind::Max {
            return Err(Error::invalid("attribution ball holds no interior maximum"));
        }
        let jets = cohort.subject_jets(&hat.location)?;
        let cov = PointCovariance::from_jets(&jets)?;
        cov.check_conditioning()?;
        let moments = CohortMoments::from_jets(&jets);
        let region = match (config.target, config.method) {
            (TargetStat::Mean, RegionMethod::Asymptotic) => ConfidenceEllipsoid::asymptotic_mean(
                hat.location,
                &moments.mean().hessian,
                &cov,
                n,
                config.alpha,
            )?,
            (TargetStat::Mean, RegionMethod::MonteCarlo { draws }) => {
                ConfidenceEllipsoid::monte_carlo_mean(
                    hat.location,
                    &moments.mean().hessian,
                    &cov,
                    n,
                    config.alpha,
                    draws,
                    Polarity::Max,
                    config.seed,
                    replicate * 256 + j as u64,
                )?
            }
            (TargetStat::CohensD, RegionMethod::Asymptotic) => {
                let d_jet = moments.cohens_d()?;
                ConfidenceEllipsoid::asymptotic_cohens_d(
                    hat.location,
                    &d_jet,
                    &cov,
                    moments.variance(),
                    n,
                    config.alpha,
                )?
            }
            (TargetStat::CohensD, RegionMethod::MonteCarlo { .. }) => {
                ConfidenceEllipsoid::monte_carlo_cohens_d()?
            }
        };
        regions.push(region);
    }
    Ok(regions)
}

/// Run one coverage replicate: simulate a cohort, localize each true peak
/// inside its attribution ball, build a confidence region there, and record
/// whether the true location falls inside (marginally, and jointly under a
/// Bonferroni correction).
///
/// # Errors
/// Any numeric failure along the pipeline; callers typically count these
/// rather than abort (see [`aggregate_coverage`]).
pub fn coverage_replicate(config: &CoverageConfig, replicate: u64) -> Result<ReplicateCoverage> {
    let cohort = generate_cohort(&config.cohort, config.seed, replicate)?;
    let truth = coverage_truth(config, &cohort.domain())?;
    let mut regions = match config.target {
        TargetStat::Mean => {
            let field = cohort.pooled_mean_field()?;
            build_regions(&field, &cohort, &truth, config, replicate)?
        }
        TargetStat::CohensD => {
            let field = cohort.cohens_d_field();
            build_regions(&field, &cohort, &truth, config, replicate)?
        }
    };
    let covered: Vec<bool> =
        truth.iter().zip(&regions).map(|(theta, region)| region.contains(theta)).collect();
    ConfidenceEllipsoid::bonferroni_joint(&mut regions, config.alpha)?;
    let joint = truth.iter().zip(&regions).all(|(theta, region)| region.contains(theta));
    Ok(ReplicateCoverage { covered, joint })
}

/// Combine per-replicate outcomes into a [`CoverageReport`].
///
/// # Errors
/// [`Error::TooManyFailures`] when more than [`MAX_FAILURE_FRACTION`] of the
/// replicates failed; [`Error::InvalidParam`] on empty or inconsistent input.
pub fn aggregate_coverage(
    outcomes: &[Result<ReplicateCoverage>],
    alpha: f64,
) -> Result<CoverageReport> {
    let total = outcomes.len();
    if total == 0 {
        return Err(Error::invalid("no replicates"));
    }
    let oks: Vec<&ReplicateCoverage> = outcomes.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failed = total - oks.len();
    if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::TooManyFailures { failed, total });
    }
    let peaks = oks[0].covered.len();
    if oks.iter().any(|r| r.covered.len() != peaks) {
        return Err(Error::invalid("replicates disagree on the number of peaks"));
    }
    let n_ok = oks.len() as f64;
    let mut per_peak = alloc::vec![0.0f64; peaks];
    let mut joint = 0.0f64;
    for r in &oks {
        for (j, c) in r.covered.iter().enumerate() {
            if *c {
                per_peak[j] += 1.0;
            }
        }
        if r.joint {
            joint += 1.0;
        }
    }
    for p in &mut per_peak {
        *p /= n_ok;
    }
    joint /= n_ok;
    let marginal = per_peak.iter().sum::<f64>() / peaks as f64;
    let band = 1.96 * libm::sqrt(marginal * (1.0 - marginal) / n_ok);
    Ok(CoverageReport {
        replicates: total,
        failed,
        peaks,
        alpha,
        per_peak,
        marginal,
        joint,
        band,
    })
}

/// Run a coverage experiment sequentially.
///
/// # Errors
/// [`Error::UnsupportedMonteCarloCohensD`] for that method/target pair
/// (checked up front), otherwise as [`aggregate_coverage`].
pub fn run_coverage(config: &CoverageConfig) -> Result<CoverageReport> {
    if config.target == TargetStat::CohensD
        && matches!(config.method, RegionMethod::MonteCarlo { .. })
    {
        return Err(Error::UnsupportedMonteCarloCohensD);
    }
    let outcomes: Vec<Result<ReplicateCoverage>> =
        (0..config.replicates as u64).map(|r| coverage_replicate(config, r)).collect();
    aggregate_coverage(&outcomes, config.alpha)
}

/// Full description of an identifiability experiment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentifiabilityConfig {
    /// Cohort generator.
    pub cohort: CohortSpec,
    /// Statistic whose critical points are enumerated.
    pub target: TargetStat,
    /// Critical-point search tuning.
    pub peaks: PeakFindConfig,
    /// Master seed.
    pub seed: u64,
    /// Number of replicates.
    pub replicates: usize,
    /// Balls that must each contain exactly one local maximum and nothing
    /// else.
    pub max_balls: Vec<BallSpec>,
    /// Balls where extra critical points are tolerated (signal cusps,
    /// steep shoulders near the domain edge).
    pub guard_balls: Vec<BallSpec>,
}

/// Aggregated identifiability summary.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentifiabilityReport {
    /// Replicates attempted.
    pub replicates: usize,
    /// Replicates that failed numerically.
    pub failed: usize,
    /// Replicates where the peak pattern was exactly recovered.
    pub identified: usize,
    /// `identified` over successful replicates.
    pub rate: f64,
}

fn pattern_identified(
    points: &[crate::peaks::CriticalPoint],
    max_balls: &[BallSpec],
    guard_balls: &[BallSpec],
) -> bool {
    for ball in max_balls {
        let mut maxima = 0usize;
        let mut others = 0usize;
        for p in points {
            if ball.contains(&p.location) {
                if p.kind == PeakKind::Max {
                    maxima += 1;
                } else {
                    others += 1;
                }
            }
        }
        if maxima != 1 || others != 0 {
            return false;
        }
    }
    points.iter().all(|p| {
        max_balls.iter().any(|b| b.contains(&p.location))
            || guard_balls.iter().any(|b| b.contains(&p.location))
    })
}

/// Run one identifiability replicate: enumerate every critical point of the
/// statistic field and require exactly one maximum in each designated ball
/// and no critical point outside the declared balls.
///
/// # Errors
/// Any numeric failure along the pipeline.
pub fn identifiability_replicate(config: &IdentifiabilityConfig, replicate: u64) -> Result<bool> {
    let cohort = generate_cohort(&config.cohort, config.seed, replicate)?;
    let report = match config.target {
        TargetStat::Mean => {
            let field = cohort.pooled_mean_field()?;
            find_critical_points(&field, &config.peaks)?
        }
        TargetStat::CohensD => {
            let field = cohort.cohens_d_field();
            find_critical_points(&field, &config.peaks)?
        }
    };
    Ok(pattern_identified(&report.points, &config.max_balls, &config.guard_balls))
}

/// Run an identifiability experiment sequentially.
///
/// # Errors
/// As [`identifiability_replicate`] and [`Error::TooManyFailures`] when more
/// than [`MAX_FAILURE_FRACTION`] of the replicates fail.
pub fn run_identifiability(config: &IdentifiabilityConfig) -> Result<IdentifiabilityReport> {
    let outcomes: Vec<Result<bool>> =
        (0..config.replicates as u64).map(|r| identifiability_replicate(config, r)).collect();
    aggregate_identifiability(&outcomes)
}

/// Combine per-replicate identifiability outcomes.
///
/// # Errors
/// [`Error::TooManyFailures`] past the failure budget,
/// [`Error::InvalidParam`] on empty input.
pub fn aggregate_identifiability(outcomes: &[Result<bool>]) -> Result<IdentifiabilityReport> {
    let total = outcomes.len();
    if total == 0 {
        return Err(Error::invalid("no replicates"));
    }
    let oks: Vec<bool> = outcomes.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    let failed = total - oks.len();
    if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::TooManyFailures { failed, total });
    }
    let identified = oks.iter().filter(|b| **b).count();
    Ok(IdentifiabilityReport {
        replicates: total,
        failed,
        identified,
        rate: identified as f64 / oks.len() as f64,
    })
}

/// Diagnostics for the conditional law of a chi-squared field's gradient.
///
/// With `(Y_i, G_i)` jointly centered Gaussian — `Var(Y_i) = sigma^2`,
/// `Cov(G_i) = Lambda`, `Cov(Y_i, G_i) = Gamma` — set `U = sum Y_i^2` and
/// `W = sum 2 Y_i G_i`. Conditionally on the `Y_i`, the residual
/// `S = (W - 2 U Gamma / sigma^2) / (2 sqrt(U))` is exactly
/// `N(0, Lambda - Gamma Gamma^T / sigma^2)` and independent of `U`. The
/// check samples this construction and reports scaled errors of the first
/// two moments of `S` and its correlation with `U`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Chi2GradientCheck {
    /// Degrees of freedom of the chi-squared value.
    pub df: usize,
    /// Number of Monte Carlo draws.
    pub reps: usize,
    /// Largest `|mean(S_d)|` in units of the predicted standard deviation.
    pub max_mean_err: f64,
    /// Largest relative error of `Cov(S)` against the predicted matrix,
    /// entrywise in units of the predicted scale.
    pub max_cov_err: f64,
    /// Largest `|corr(S_d, U)|` (predicted zero).
    pub max_corr_with_value: f64,
}

/// Sample the chi-squared gradient residual and compare its first two
/// moments and its independence from the field value against the predicted
/// conditional law.
///
/// # Errors
/// [`Error::InvalidParam`] on degenerate inputs (dimension, df, reps, or a
/// non-positive predicted residual covariance);
/// [`Error::NotPositiveSemidefinite`] when the joint covariance is not.
pub fn check_chi2_gradient(
    sigma: f64,
    lambda: &DMat,
    gamma: &DVec,
    df: usize,
    reps: usize,
    seed: u64,
    replicate: u64,
) -> Result<Chi2GradientCheck> {
    let dim = lambda.n();
    if dim != gamma.len() || dim == 0 || dim > 2 {
        return Err(Error::invalid("gradient dimension must be 1 or 2"));
    }
    if df == 0 || reps < 100 || !(sigma > 0.0) {
        return Err(Error::invalid("need df >= 1, reps >= 100, sigma > 0"));
    }
    // joint covariance of (Y, G) and its square root
    let mut joint = HMat::zeros(dim + 1);
    joint.set(0, 0, sigma * sigma);
    for d in 0..dim {
        joint.set(0, d + 1, gamma[d]);
        joint.set(d + 1, 0, gamma[d]);
        for e in 0..dim {
            joint.set(d + 1, e + 1, lambda.get(d, e));
        }
    }
    let factor = joint.psd_sqrt(1e-12)?;
    // predicted residual covariance
    let mut predicted = lambda.sub(&gamma.outer(gamma).scale(1.0 / (sigma * sigma)));
    predicted = predicted.symmetrize();
    for d in 0..dim {
        if !(predicted.get(d, d) > 0.0) {
            return Err(Error::invalid("predicted residual covariance is degenerate"));
        }
    }
    let mut rng = lemma_rng(seed, replicate);
    let mut sum_s = DVec::zeros(dim);
    let mut sum_ss = DMat::zeros(dim);
    let mut sum_u = 0.0f64;
    let mut sum_uu = 0.0f64;
    let mut sum_su = DVec::zeros(dim);
    for _ in 0..reps {
        let mut u = 0.0f64;
        let mut w = DVec::zeros(dim);
        for _ in 0..df {
            let mut z = [0.0f64; 3];
            for zi in z.iter_mut().take(dim + 1) {
                *zi = StandardNormal.sample(&mut rng);
            }
            let mut y = 0.0f64;
            let mut g = DVec::zeros(dim);
            for (c, &zc) in z.iter().enumerate().take(dim + 1) {
                y += factor.get(0, c) * zc;
                for d in 0..dim {
                    g[d] += factor.get(d + 1, c) * zc;
                }
            }
            u += y * y;
            w = w.add(&g.scale(2.0 * y));
        }
        let resid = w.sub(&gamma.scale(2.0 * u / (sigma * sigma)));
        let s = resid.scale(1.0 / (2.0 * libm::sqrt(u)));
        sum_s = sum_s.add(&s);
        sum_ss = sum_ss.add(&s.outer(&s));
        sum_u += u;
        sum_uu += u * u;
        sum_su = sum_su.add(&s.scale(u));
    }
    let n = reps as f64;
    let mean_s = sum_s.scale(1.0 / n);
    let mean_u = sum_u / n;
    let var_u = (sum_uu / n - mean_u * mean_u).max(0.0);
    let mut max_mean_err = 0.0f64;
    let mut max_cov_err = 0.0f64;
    let mut max_corr = 0.0f64;
    for d in 0..dim {
        let sd = libm::sqrt(predicted.get(d, d));
        max_mean_err = max_mean_err.max(libm::fabs(mean_s[d]) / sd);
        for e in 0..dim {
            let cov_de = sum_ss.get(d, e) / n - mean_s[d] * mean_s[e];
            let scale = libm::sqrt(predicted.get(d, d) * predicted.get(e, e));
            max_cov_err = max_cov_err.max(libm::fabs(cov_de - predicted.get(d, e)) / scale);
        }
        let cov_su = sum_su[d] / n - mean_s[d] * mean_u;
        let denom = libm::sqrt(
            (sum_ss.get(d, d) / n - mean_s[d] * mean_s[d]).max(1e-300) * var_u.max(1e-300),
        );
        max_corr = max_corr.max(libm::fabs(cov_su) / denom);
    }
    Ok(Chi2GradientCheck { df, reps, max_mean_err, max_cov_err, max_corr_with_value: max_corr })
}

/// One tail comparison for the ratio-dominance check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatioDominanceCheck {
    /// Threshold probed.
    pub x: f64,
    /// `P(|A| / b0 > x)` for the fixed denominator (exact).
    pub fixed_tail: f64,
    /// Empirical `P(|A| / B > x)` for the symmetric random denominator.
    pub random_tail: f64,
    /// Binomial standard error of `random_tail`.
    pub se: f64,
}

/// Tail-dominance check for ratios with a randomized denominator.
///
/// For `A ~ N(0, 1)` and an independent positive `B`, symmetric about its
/// mean `b0 = 1`, the tail `P(|A| / B > x)` is at least the fixed-denominator
/// tail `P(|A| > x)` for every `x > 0` — randomizing the denominator only
/// fattens the ratio's tails, which is why simulated thresholds calibrated
/// on such draws are conservative. Samples `B ~ Uniform(1 - width, 1 + width)`
/// and reports both tails at each requested `x`.
///
/// # Errors
/// [`Error::InvalidParam`] unless `0 < width < 1` and `reps >= 100`.
pub fn check_ratio_dominance(
    width: f64,
    xs: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<RatioDominanceCheck>> {
    if !(width > 0.0 && width < 1.0) {
        return Err(Error::invalid("width must lie in (0, 1)"));
    }
    if reps < 100 || xs.is_empty() {
        return Err(Error::invalid("need reps >= 100 and at least one threshold"));
    }
    let mut rng = lemma_rng(seed, 0);
    let mut hits = alloc::vec![0usize; xs.len()];
    for _ in 0..reps {
        let a: f64 = StandardNormal.sample(&mut rng);
        let u = (rand_core::RngCore::next_u64(&mut rng) >> 11) as f64 / (1u64 << 53) as f64;
        let b = 1.0 - width + 2.0 * width * u;
        let ratio = libm::fabs(a) / b;
        for (i, &x) in xs.iter().enumerate() {
            if ratio > x {
                hits[i] += 1;
            }
        }
    }
    Ok(xs
        .iter()
        .zip(&hits)
        .map(|(&x, &h)| {
            let p = h as f64 / reps as f64;
            RatioDominanceCheck {
                x,
                fixed_tail: 2.0 * normal_cdf(-x),
                random_tail: p,
                se: libm::sqrt(p * (1.0 - p) / reps as f64),
            }
        })
        .collect())
}

/// Comparison of the sampling covariance of a Cohen's d gradient estimate
/// against its plug-in limit.
#[derive(Debug, Clone, PartialEq)]
pub struct CltCheck {
    /// Replicates used.
    pub reps: usize,
    /// Cohort size per replicate.
    pub n: usize,
    /// `N x` sample covariance of the estimated gradients across replicates.
    pub empirical: DMat,
    /// Average plug-in prediction `(1 + d^2) Lambda'`.
    pub reference: DMat,
    /// Largest entrywise deviation in units of the reference scale.
    pub max_rel_err: f64,
}

/// Estimate the sampling covariance of the Cohen's d gradient at `point`
/// over fresh cohorts and compare with the plug-in prediction
/// `(1 + d^2) Lambda'` that calibrates the Cohen's d regions.
///
/// # Errors
/// Propagates generation or estimation failures from any replicate;
/// [`Error::InvalidParam`] for fewer than 16 replicates.
pub fn check_t_gradient_clt(
    spec: &CohortSpec,
    point: &DVec,
    reps: usize,
    seed: u64,
) -> Result<CltCheck> {
    if reps < 16 {
        return Err(Error::invalid("need at least 16 replicates"));
    }
    let dim = point.len();
    let n = spec.subjects;
    let mut grads: Vec<DVec> = Vec::with_capacity(reps);
    let mut reference = DMat::zeros(dim);
    for r in 0..reps as u64 {
        let cohort = generate_cohort(spec, seed, r)?;
        let jets = cohort.subject_jets(point)?;
        let moments = CohortMoments::from_jets(&jets);
        let d_jet = moments.cohens_d()?;
        let cov = PointCovariance::from_jets(&jets)?;
        let lambda_prime = cohens_d_grad_cov(&cov, moments.variance())?;
        let scale = 1.0 + d_jet.value * d_jet.value;
        reference = reference.add(&lambda_prime.scale(scale));
        grads.push(d_jet.gradient);
    }
    reference = reference.scale(1.0 / reps as f64).symmetrize();
    let mut mean = DVec::zeros(dim);
    for g in &grads {
        mean = mean.add(g);
    }
    mean = mean.scale(1.0 / reps as f64);
    let mut empirical = DMat::zeros(dim);
    for g in &grads {
        let c = g.sub(&mean);
        empirical = empirical.add(&c.outer(&c));
    }
    empirical = empirical.scale(n as f64 / (reps as f64 - 1.0)).symmetrize();
    let mut max_rel_err = 0.0f64;
    for d in 0..dim {
        for e in 0..dim {
            let scale = libm::sqrt(reference.get(d, d) * reference.get(e, e));
            max_rel_err =
                max_rel_err.max(libm::fabs(empirical.get(d, e) - reference.get(d, e)) / scale);
        }
    }
    Ok(CltCheck { reps, n, empirical, reference, max_rel_err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::Lattice;
    use crate::noisegen::{NoiseSpec, Signal, VarianceProfile};
    use approx::assert_abs_diff_eq;

    fn beta_spec(subjects: usize, amplitude: f64) -> CohortSpec {
        CohortSpec {
            lattice: Lattice::new(&[44], &[0.0], &[1.0]).unwrap(),
            noise: NoiseSpec::gaussian(6.0),
            signal: Signal::BetaBumps { amplitude, section: 20.0, shape_a: 1.5, shape_b: 3.0 },
            variance: VarianceProfile::unit(),
            subjects,
        }
    }

    fn coverage_config(method: RegionMethod, target: TargetStat) -> CoverageConfig {
        CoverageConfig {
            cohort: beta_spec(8, 2.0),
            target,
            method,
            alpha: 0.2,
            replicates: 4,
            seed: 90210,
            ball_radius: 4.0,
            peaks: PeakFindConfig::default(),
            truth: None,
        }
    }

    #[test]
    fn coverage_runs_and_is_reproducible() {
        let config = coverage_config(RegionMethod::Asymptotic, TargetStat::Mean);
        let report = run_coverage(&config).unwrap();
        assert_eq!(report.replicates, 4);
        assert_eq!(report.failed, 0);
        assert_eq!(report.peaks, 1);
        assert!(report.marginal >= 0.0 && report.marginal <= 1.0);
        assert!(report.joint >= 0.0 && report.joint <= 1.0);
        assert!(report.band.is_finite());
        let again = run_coverage(&config).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn monte_carlo_coverage_smoke() {
        let config =
            coverage_config(RegionMethod::MonteCarlo { draws: 1000 }, TargetStat::Mean);
        let report = run_coverage(&config).unwrap();
        assert_eq!(report.failed, 0);
        assert_eq!(report.peaks, 1);
    }

    #[test]
    fn cohens_d_coverage_smoke_and_mc_rejection() {
        let mut config = coverage_config(RegionMethod::Asymptotic, TargetStat::CohensD);
        config.cohort.subjects = 24;
        config.ball_radius = 6.0;
        let report = run_coverage(&config).unwrap();
        assert_eq!(report.failed, 0);
        config.method = RegionMethod::MonteCarlo { draws: 5000 };
        assert!(matches!(
            run_coverage(&config),
            Err(Error::UnsupportedMonteCarloCohensD)
        ));
    }

    #[test]
    fn aggregation_counts_failures_and_enforces_the_budget() {
        let good = ReplicateCoverage { covered: alloc::vec![true], joint: true };
        let bad = ReplicateCoverage { covered: alloc::vec![false], joint: false };
        let outcomes: Vec<Result<ReplicateCoverage>> = alloc::vec![
            Ok(good.clone()),
            Ok(bad),
            Ok(good.clone()),
            Ok(good),
            Err(Error::SingularHessian),
        ];
        // 1 of 5 failed: 20% > 5% budget
        assert!(matches!(
            aggregate_coverage(&outcomes, 0.1),
            Err(Error::TooManyFailures { failed: 1, total: 5 })
        ));
        let fine: Vec<Result<ReplicateCoverage>> = outcomes
            .iter()
            .filter_map(|o| o.as_ref().ok())
            .map(|r| Ok(r.clone()))
            .collect();
        let report = aggregate_coverage(&fine, 0.1).unwrap();
        assert_eq!(report.replicates, 4);
        assert_abs_diff_eq!(report.marginal, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(report.joint, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn identifiability_recovers_a_strong_peak_and_rejects_noise() {
        let config = IdentifiabilityConfig {
            cohort: beta_spec(30, 2.0),
            target: TargetStat::Mean,
            peaks: PeakFindConfig::default(),
            seed: 4242,
            replicates: 5,
            max_balls: alloc::vec![BallSpec { center: DVec::from_slice(&[24.0]), radius: 3.0 }],
            guard_balls: alloc::vec![BallSpec {
                center: DVec::from_slice(&[20.0]),
                radius: 2.5,
            }],
        };
        let report = run_identifiability(&config).unwrap();
        assert_eq!(report.failed, 0);
        assert!(report.rate >= 0.6, "rate = {}", report.rate);

        // negative control: flat signal, same balls — pure noise should not
        // reproduce the peak pattern
        let mut control = config.clone();
        control.cohort.signal = Signal::Flat;
        let report = run_identifiability(&control).unwrap();
        assert_eq!(report.failed, 0);
        assert!(report.rate <= 0.2, "rate = {}", report.rate);
    }

    #[test]
    fn chi2_gradient_residual_matches_its_conditional_law() {
        let lambda = DMat::from_rows(1, &[0.8]);
        let gamma = DVec::from_slice(&[0.4]);
        let check = check_chi2_gradient(1.3, &lambda, &gamma, 3, 20_000, 99, 0).unwrap();
        assert!(check.max_mean_err < 0.03, "mean err {}", check.max_mean_err);
        assert!(check.max_cov_err < 0.04, "cov err {}", check.max_cov_err);
        assert!(check.max_corr_with_value < 0.03, "corr {}", check.max_corr_with_value);
    }

    #[test]
    fn chi2_gradient_residual_matches_in_two_dimensions() {
        let lambda = DMat::from_rows(2, &[0.9, 0.2, 0.2, 0.7]);
        let gamma = DVec::from_slice(&[0.3, -0.1]);
        let check = check_chi2_gradient(1.0, &lambda, &gamma, 5, 20_000, 7, 1).unwrap();
        assert!(check.max_mean_err < 0.03);
        assert!(check.max_cov_err < 0.05);
        assert!(check.max_corr_with_value < 0.03);
    }

    #[test]
    fn randomized_denominators_fatten_ratio_tails() {
        let checks = check_ratio_dominance(0.5, &[0.5, 1.0, 2.0], 50_000, 11).unwrap();
        for c in checks {
            assert!(
                c.random_tail >= c.fixed_tail - 2.0 * c.se,
                "x = {}: {} < {}",
                c.x,
                c.random_tail,
                c.fixed_tail
            );
        }
        assert!(check_ratio_dominance(1.5, &[1.0], 1000, 0).is_err());
    }

    #[test]
    fn cohens_d_gradient_spread_tracks_the_plugin_prediction() {
        let mut spec = beta_spec(12, 1.0);
        spec.variance = VarianceProfile::Linear { base: 1.0, slope: DVec::from_slice(&[0.004]) };
        let check =
            check_t_gradient_clt(&spec, &DVec::from_slice(&[24.0]), 300, 1234).unwrap();
        assert!(check.max_rel_err < 0.45, "rel err {}", check.max_rel_err);
    }
}
