//! Confidence ellipsoids for true peak locations.
//!
//! Around an estimated peak the statistic field is locally quadratic, so the
//! estimation error is asymptotically Gaussian with covariance
//! `H^-1 Lambda H^-1 / N` built from the peak Hessian `H` and the gradient
//! covariance `Lambda`. Regions are ellipsoids
//! `{theta : N (c - theta)^T Shape^-1 (c - theta) < threshold}` where the
//! threshold is either the chi-squared quantile (asymptotic calibration) or
//! an order statistic of Monte Carlo draws that additionally propagate the
//! Hessian's finite-sample variability. Joint coverage over several peaks
//! uses Bonferroni-adjusted levels; Monte Carlo regions requantile from the
//! same stored draw set.

use crate::covariance::{cohens_d_grad_cov, vech, vech_inv, PointCovariance, CONDITION_LIMIT, PSD_CLIP};
use crate::error::{Error, Result};
use crate::field::Jet;
use crate::linalg::{DMat, DVec, HVec};
use crate::rng::region_mc_rng;
use crate::sample_fields::TargetStat;
use crate::special::chi2_quantile;
use alloc::sync::Arc;
use alloc::vec::Vec;
use rand_distr::Distribution;

/// Default number of Monte Carlo draws.
pub const DEFAULT_MC_DRAWS: usize = 100_000;
/// Smallest accepted number of Monte Carlo draws.
pub const MIN_MC_DRAWS: usize = 1_000;
/// Fraction of the observed Hessian's smallest curvature used as the
/// positive-definiteness floor when truncating Hessian draws.
pub const EIGEN_FLOOR_FRACTION: f64 = 0.05;

/// Whether the peak is a local maximum or minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Polarity {
    /// Local maximum: the Hessian is negative definite.
    Max,
    /// Local minimum: the Hessian is positive definite.
    Min,
}

impl Polarity {
    /// +1 for a maximum, -1 for a minimum: `-sign * Hessian` is positive
    /// definite at a clean peak.
    #[must_use]
    pub fn sign(&self) -> f64 {
        match self {
            Polarity::Max => 1.0,
            Polarity::Min => -1.0,
        }
    }
}

/// What happened to one Monte Carlo Hessian draw during truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncOutcome {
    /// The draw already had the required definiteness.
    Kept,
    /// The draw was reflected through the mean; the payload replaces it.
    Mirrored(HVec),
    /// Neither the draw nor its mirror was usable.
    Discarded,
}

/// Counts of Monte Carlo draw truncation outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncationSummary {
    /// Draws used unchanged.
    pub kept: usize,
    /// Draws used after mirroring through the mean.
    pub mirrored: usize,
    /// Draws dropped entirely.
    pub discarded: usize,
}

impl TruncationSummary {
    /// Total draws attempted.
    #[must_use]
    pub fn total(&self) -> usize {
        self.kept + self.mirrored + self.discarded
    }

    /// Draws that required intervention (mirrored or discarded).
    #[must_use]
    pub fn truncated(&self) -> usize {
        self.mirrored + self.discarded
    }

    /// Draws contributing statistics.
    #[must_use]
    pub fn used(&self) -> usize {
        self.kept + self.mirrored
    }
}

/// Enforce the definiteness floor on one Hessian draw: keep it if
/// `-sign * draw` has smallest eigenvalue at or above `eigen_floor`, else try
/// the mirror image `2 * mean - draw`, else discard.
#[must_use]
pub fn truncate_hessian_draw(
    draw: &HVec,
    mean: &HVec,
    polarity: Polarity,
    eigen_floor: f64,
) -> TruncOutcome {
    let passes = |v: &HVec| {
        let m = vech_inv(v).scale(-polarity.sign());
        m.sym_eigenvalues()[0] >= eigen_floor
    };
    if passes(draw) {
        return TruncOutcome::Kept;
    }
    let mirrored = mean.scale(2.0).sub(draw);
    if passes(&mirrored) {
        TruncOutcome::Mirrored(mirrored)
    } else {
        TruncOutcome::Discarded
    }
}

#[derive(Debug, Clone)]
struct McInfo {
    stats: Arc<Vec<f64>>,
    truncation: TruncationSummary,
}

/// An ellipsoidal confidence region for one true peak location.
#[derive(Debug, Clone)]
pub struct ConfidenceEllipsoid {
    target: TargetStat,
    center: DVec,
    shape: DMat,
    shape_inv: DMat,
    n: usize,
    alpha: f64,
    threshold: f64,
    mc: Option<McInfo>,
}

fn checked_cov_inverse(m: &DMat) -> Result<DMat> {
    let cond = m.sym_condition();
    if !m.is_finite() || !(cond <= CONDITION_LIMIT) {
        return Err(Error::SingularCovariance { cond });
    }
    m.inverse().ok_or(Error::SingularCovariance { cond })
}

fn checked_hessian_inverse(h: &DMat) -> Result<DMat> {
    h.inverse().ok_or(Error::SingularHessian)
}

fn validate_level(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("confidence level alpha must lie in (0, 1)"));
    }
    Ok(())
}

fn validate_subjects(n: usize, dim: usize) -> Result<()> {
    if n < dim + 2 {
        return Err(Error::invalid("need at least dim + 2 subjects"));
    }
    Ok(())
}

impl ConfidenceEllipsoid {
    fn from_shape(
        target: TargetStat,
        center: DVec,
        hessian: &DMat,
        grad_cov: &DMat,
        scale: f64,
        n: usize,
        alpha: f64,
    ) -> Result<Self> {
        validate_level(alpha)?;
        let dim = center.len();
        validate_subjects(n, dim)?;
        if hessian.n() != dim || grad_cov.n() != dim {
            return Err(Error::invalid("dimension mismatch between center and matrices"));
        }
        let hinv = checked_hessian_inverse(hessian)?;
        let cov_inv = checked_cov_inverse(grad_cov)?;
        let shape = hinv.mul(grad_cov).mul(&hinv).scale(scale).symmetrize();
        // (H^-1 C H^-1)^-1 = H C^-1 H, computed directly for stability
        let shape_inv = hessian.mul(&cov_inv).mul(hessian).scale(1.0 / scale).symmetrize();
        let threshold = chi2_quantile(dim, 1.0 - alpha)?;
        Ok(Self { target, center, shape, shape_inv, n, alpha, threshold, mc: None })
    }

    /// Asymptotic region for a mean-field peak: shape `H^-1 Lambda H^-1`,
    /// threshold the chi-squared quantile at level `1 - alpha`.
    ///
    /// # Errors
    /// [`Error::SingularHessian`] / [`Error::SingularCovariance`] on
    /// degenerate inputs, [`Error::InvalidParam`] on bad level or sample size.
    pub fn asymptotic_mean(
        center: DVec,
        hessian: &DMat,
        cov: &PointCovariance,
        n: usize,
        alpha: f64,
    ) -> Result<Self> {
        Self::from_shape(TargetStat::Mean, center, hessian, &cov.grad_cov, 1.0, n, alpha)
    }

    /// Asymptotic region for a Cohen's d peak: shape
    /// `(1 + d^2) H_d^-1 Lambda' H_d^-1` where `H_d` is the Cohen's d Hessian
    /// and `Lambda'` the studentized gradient covariance.
    ///
    /// # Errors
    /// As [`ConfidenceEllipsoid::asymptotic_mean`], plus
    /// [`Error::DegenerateVariance`] when the sample variance collapses.
    pub fn asymptotic_cohens_d(
        center: DVec,
        d_jet: &Jet,
        cov: &PointCovariance,
        variance: &Jet,
        n: usize,
        alpha: f64,
    ) -> Result<Self> {
        let lambda_prime = cohens_d_grad_cov(cov, variance)?;
        let scale = 1.0 + d_jet.value * d_jet.value;
        Self::from_shape(
            TargetStat::CohensD,
            center,
            &d_jet.hessian,
            &lambda_prime,
            scale,
            n,
            alpha,
        )
    }

    /// Monte Carlo region for a mean-field peak.
    ///
    /// Draws gradient vectors `A_k ~ N(0, Lambda/N)` and half-vectorized
    /// Hessians `B_k ~ N(vech H, Omega/N)`, truncates the Hessian draws to the
    /// peak's definiteness (mirroring failures through the mean), forms
    /// displacement draws `delta_k = vech^-1(B_k)^-1 A_k`, and thresholds at
    /// the `1 - alpha` order statistic of
    /// `N delta_k^T Shape^-1 delta_k` over the retained draws. Draw `k` uses
    /// its own derived substream, so results do not depend on batching.
    ///
    /// # Errors
    /// As [`ConfidenceEllipsoid::asymptotic_mean`]; additionally
    /// [`Error::InvalidParam`] for too few draws or a Hessian inconsistent
    /// with `polarity`, [`Error::NotPositiveSemidefinite`] for a bad
    /// covariance input, and [`Error::TruncationDominates`] when more than
    /// half the draws needed intervention.
    #[allow(clippy::too_many_arguments)]
    pub fn monte_carlo_mean(
        center: DVec,
        hessian: &DMat,
        cov: &PointCovariance,
        n: usize,
        alpha: f64,
        draws: usize,
        polarity: Polarity,
        seed: u64,
        context: u64,
    ) -> Result<Self> {
        let mut region = Self::asymptotic_mean(center, hessian, cov, n, alpha)?;
        if draws < MIN_MC_DRAWS {
            return Err(Error::invalid("too few Monte Carlo draws"));
        }
        let dim = center.len();
        let neg_signed = hessian.scale(-polarity.sign());
        let min_curv = neg_signed.sym_eigenvalues()[0];
        if !(min_curv > 0.0) {
            return Err(Error::invalid("Hessian does not match the stated peak polarity"));
        }
        let eigen_floor = EIGEN_FLOOR_FRACTION * min_curv;
        let mean_vech = vech(&hessian.symmetrize())?;
        let grad_factor = cov.grad_cov.psd_sqrt(PSD_CLIP)?;
        let hess_factor = cov.hess_cov.psd_sqrt(PSD_CLIP)?;
        let root_n = libm::sqrt(n as f64);

        let normal = rand_distr::StandardNormal;
        let mut rng = region_mc_rng(seed, context);
        let mut stats: Vec<f64> = Vec::with_capacity(draws);
        let mut summary = TruncationSummary::default();
        for k in 0..draws {
            rng.set_stream(k as u64);
            rng.set_word_pos(0);
            let mut za = DVec::zeros(dim);
            for i in 0..dim {
                za[i] = normal.sample(&mut rng);
            }
            let vd = mean_vech.len();
            let mut zb = HVec::zeros(vd);
            for i in 0..vd {
                zb[i] = normal.sample(&mut rng);
            }
            let a = grad_factor.mul_vec(&za).scale(1.0 / root_n);
            let b = mean_vech.add(&hess_factor.mul_vec(&zb).scale(1.0 / root_n));
            let b = match truncate_hessian_draw(&b, &mean_vech, polarity, eigen_floor) {
                TruncOutcome::Kept => {
                    summary.kept += 1;
                    b
                }
                TruncOutcome::Mirrored(m) => {
                    summary.mirrored += 1;
                    m
                }
                TruncOutcome::Discarded => {
                    summary.discarded += 1;
                    continue;
                }
            };
            match vech_inv(&b).solve(&a) {
                Some(delta) => {
                    stats.push(n as f64 * region.shape_inv.quad_form(&delta));
                }
                None => {
                    // numerically singular despite the eigen floor
                    summary.kept -= 1;
                    summary.discarded += 1;
                }
            }
        }
        if 2 * summary.truncated() > draws {
            return Err(Error::TruncationDominates {
                truncated: summary.truncated(),
                total: draws,
            });
        }
        stats.sort_unstable_by(f64::total_cmp);
        region.mc = Some(McInfo { stats: Arc::new(stats), truncation: summary });
        region.requantile(alpha)?;
        Ok(region)
    }

    /// Monte Carlo calibration for Cohen's d peaks is not available: the
    /// numerator and denominator of the displacement draws are not
    /// independent for a studentized field, so the mean-field draw scheme
    /// does not apply.
    ///
    /// # Errors
    /// Always [`Error::UnsupportedMonteCarloCohensD`].
    pub fn monte_carlo_cohens_d() -> Result<Self> {
        Err(Error::UnsupportedMonteCarloCohensD)
    }

    /// Recompute the threshold for a new level from the same calibration
    /// (chi-squared quantile, or the stored Monte Carlo draw set).
    ///
    /// # Errors
    /// [`Error::InvalidParam`] for a level outside (0, 1).
    pub fn requantile(&mut self, alpha: f64) -> Result<()> {
        validate_level(alpha)?;
        self.alpha = alpha;
        match &self.mc {
            None => {
                self.threshold = chi2_quantile(self.center.len(), 1.0 - alpha)?;
            }
            Some(info) => {
                let k = info.stats.len();
                if k == 0 {
                    return Err(Error::invalid("no Monte Carlo statistics retained"));
                }
                // exactly floor(alpha * k) draws exceed the threshold
                let exceed = libm::floor(alpha * k as f64) as usize;
                let idx = k - exceed.min(k);
                self.threshold = info.stats[idx.saturating_sub(1)];
            }
        }
        Ok(())
    }

    /// Bonferroni adjustment: requantile each of `J` regions at `alpha / J`
    /// so that joint coverage of all true locations is at least `1 - alpha`.
    ///
    /// # Errors
    /// As [`ConfidenceEllipsoid::requantile`].
    pub fn bonferroni_joint(regions: &mut [Self], alpha: f64) -> Result<()> {
        let j = regions.len();
        if j == 0 {
            return Ok(());
        }
        let each = alpha / j as f64;
        for r in regions {
            r.requantile(each)?;
        }
        Ok(())
    }

    /// Statistic target the region is for.
    #[must_use]
    pub fn target(&self) -> TargetStat {
        self.target
    }

    /// Region center (the estimated peak location).
    #[must_use]
    pub fn center(&self) -> DVec {
        self.center
    }

    /// Shape matrix (asymptotic covariance of `sqrt(N)` times the location
    /// error).
    #[must_use]
    pub fn shape(&self) -> DMat {
        self.shape
    }

    /// Number of subjects.
    #[must_use]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Current confidence level parameter.
    #[must_use]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Current threshold on the squared standardized distance.
    #[must_use]
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Truncation outcome counts (Monte Carlo regions only).
    #[must_use]
    pub fn truncation(&self) -> Option<&TruncationSummary> {
        self.mc.as_ref().map(|m| &m.truncation)
    }

    /// Sorted Monte Carlo statistics, shared across clones.
    #[must_use]
    pub fn mc_stats(&self) -> Option<&Arc<Vec<f64>>> {
        self.mc.as_ref().map(|m| &m.stats)
    }

    /// Squared standardized distance `N (c - theta)^T Shape^-1 (c - theta)`.
    #[must_use]
    pub fn mahalanobis_stat(&self, theta: &DVec) -> f64 {
        let d = self.center.sub(theta);
        self.n as f64 * self.shape_inv.quad_form(&d)
    }

    /// Strict membership test.
    #[must_use]
    pub fn contains(&self, theta: &DVec) -> bool {
        self.mahalanobis_stat(theta) < self.threshold
    }

    /// Semi-axis lengths and directions, shortest first: the region is the
    /// ellipsoid with half-extent `sqrt(threshold * eig_i / N)` along each
    /// eigenvector of the shape matrix.
    #[must_use]
    pub fn semi_axes(&self) -> Vec<(f64, DVec)> {
        let (vals, vecs) = self.shape.sym_eigen();
        let dim = self.center.len();
        (0..dim)
            .map(|k| {
                let len = libm::sqrt((self.threshold * vals[k].max(0.0)) / self.n as f64);
                let mut axis = DVec::zeros(dim);
                for i in 0..dim {
                    axis[i] = vecs.get(i, k);
                }
                (len, axis)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HMat;
    use approx::assert_abs_diff_eq;

    fn cov_1d(lambda: f64, omega: f64) -> PointCovariance {
        PointCovariance {
            n: 100,
            grad_cov: DMat::from_rows(1, &[lambda]),
            grad_value_cov: DVec::zeros(1),
            hess_cov: HMat::from_rows(1, &[omega]),
        }
    }

    #[test]
    fn asymptotic_half_width_matches_reference() {
        // H = -2, Lambda = 4 gives shape 1; half-width sqrt(chi2_1(0.95)/100)
        let region = ConfidenceEllipsoid::asymptotic_mean(
            DVec::from_slice(&[10.0]),
            &DMat::from_rows(1, &[-2.0]),
            &cov_1d(4.0, 0.0),
            100,
            0.05,
        )
        .unwrap();
        let axes = region.semi_axes();
        assert_abs_diff_eq!(axes[0].0, 1.959_963_984_540_054e-1, epsilon = 1e-9);
        assert!(region.contains(&DVec::from_slice(&[10.0 + 0.9999 * axes[0].0])));
        assert!(!region.contains(&DVec::from_slice(&[10.0 + 1.0001 * axes[0].0])));
    }

    #[test]
    fn zero_hessian_cov_monte_carlo_recovers_chi2_quantile() {
        // with Omega = 0 every draw keeps B = vech(H), so the statistic is
        // exactly chi-squared distributed and the threshold estimates 3.8415
        let region = ConfidenceEllipsoid::monte_carlo_mean(
            DVec::from_slice(&[0.0]),
            &DMat::from_rows(1, &[-2.0]),
            &cov_1d(4.0, 0.0),
            100,
            0.05,
            20_000,
            Polarity::Max,
            7,
            0,
        )
        .unwrap();
        assert_abs_diff_eq!(region.threshold(), 3.841_458_820_694_124, epsilon = 0.15);
        let t = region.truncation().unwrap();
        assert_eq!(t.kept, 20_000);
        assert_eq!(t.truncated(), 0);
    }

    #[test]
    fn mirroring_follows_the_reflection_rule() {
        let out = truncate_hessian_draw(
            &HVec::from_slice(&[0.5]),
            &HVec::from_slice(&[-2.0]),
            Polarity::Max,
            0.1,
        );
        match out {
            TruncOutcome::Mirrored(m) => assert_abs_diff_eq!(m[0], -4.5, epsilon = 1e-15),
            other => panic!("expected mirror, got {other:?}"),
        }
        // a draw satisfying the floor stays; a hopeless one is discarded
        assert_eq!(
            truncate_hessian_draw(
                &HVec::from_slice(&[-1.0]),
                &HVec::from_slice(&[-2.0]),
                Polarity::Max,
                0.1
            ),
            TruncOutcome::Kept
        );
        assert_eq!(
            truncate_hessian_draw(
                &HVec::from_slice(&[0.5]),
                &HVec::from_slice(&[0.2]),
                Polarity::Max,
                0.1
            ),
            TruncOutcome::Discarded
        );
    }

    #[test]
    fn min_polarity_accepts_positive_hessians() {
        let region = ConfidenceEllipsoid::monte_carlo_mean(
            DVec::from_slice(&[0.0]),
            &DMat::from_rows(1, &[2.0]),
            &cov_1d(4.0, 0.01),
            100,
            0.05,
            2_000,
            Polarity::Min,
            3,
            0,
        )
        .unwrap();
        assert!(region.truncation().unwrap().kept > 1_900);
    }

    #[test]
    fn polarity_mismatch_is_rejected() {
        let err = ConfidenceEllipsoid::monte_carlo_mean(
            DVec::from_slice(&[0.0]),
            &DMat::from_rows(1, &[2.0]),
            &cov_1d(4.0, 0.0),
            100,
            0.05,
            2_000,
            Polarity::Max,
            3,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParam(_)));
    }

    #[test]
    fn dominating_truncation_is_an_error() {
        // strong off-diagonal Hessian noise around an ill-conditioned peak:
        // most draws lose definiteness and their mirrors fail the same test
        let cov = PointCovariance {
            n: 25,
            grad_cov: DMat::identity(2),
            grad_value_cov: DVec::zeros(2),
            hess_cov: HMat::from_rows(3, &[0.0, 0.0, 0.0, 0.0, 25.0, 0.0, 0.0, 0.0, 0.0]),
        };
        let err = ConfidenceEllipsoid::monte_carlo_mean(
            DVec::from_slice(&[0.0, 0.0]),
            &DMat::from_rows(2, &[-0.01, 0.0, 0.0, -10.0]),
            &cov,
            25,
            0.05,
            2_000,
            Polarity::Max,
            11,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::TruncationDominates { .. }));
    }

    #[test]
    fn monte_carlo_is_deterministic_in_the_seed() {
        let build = |seed| {
            ConfidenceEllipsoid::monte_carlo_mean(
                DVec::from_slice(&[1.0]),
                &DMat::from_rows(1, &[-1.5]),
                &cov_1d(2.0, 0.5),
                50,
                0.05,
                4_000,
                Polarity::Max,
                seed,
                9,
            )
            .unwrap()
        };
        assert_eq!(build(5).threshold(), build(5).threshold());
        assert_ne!(build(5).threshold(), build(6).threshold());
    }

    #[test]
    fn requantile_is_monotone_and_shares_draws() {
        let mut region = ConfidenceEllipsoid::monte_carlo_mean(
            DVec::from_slice(&[0.0]),
            &DMat::from_rows(1, &[-2.0]),
            &cov_1d(4.0, 0.2),
            60,
            0.10,
            5_000,
            Polarity::Max,
            2,
            0,
        )
        .unwrap();
        let stats = Arc::clone(region.mc_stats().unwrap());
        let t10 = region.threshold();
        region.requantile(0.05).unwrap();
        let t05 = region.threshold();
        region.requantile(0.01).unwrap();
        let t01 = region.threshold();
        assert!(t01 >= t05 && t05 >= t10);
        assert!(Arc::ptr_eq(&stats, region.mc_stats().unwrap()));
    }

    #[test]
    fn bonferroni_tightens_each_region() {
        let mk = || {
            ConfidenceEllipsoid::asymptotic_mean(
                DVec::from_slice(&[0.0]),
                &DMat::from_rows(1, &[-1.0]),
                &cov_1d(1.0, 0.0),
                30,
                0.05,
            )
            .unwrap()
        };
        let mut regions = alloc::vec![mk(), mk()];
        let marginal = regions[0].threshold();
        ConfidenceEllipsoid::bonferroni_joint(&mut regions, 0.05).unwrap();
        for r in &regions {
            assert!(r.threshold() > marginal);
            assert_abs_diff_eq!(r.alpha(), 0.025, epsilon = 1e-15);
        }
    }

    #[test]
    fn cohens_d_monte_carlo_is_unsupported() {
        assert!(matches!(
            ConfidenceEllipsoid::monte_carlo_cohens_d(),
            Err(Error::UnsupportedMonteCarloCohensD)
        ));
    }

    #[test]
    fn cohens_d_asymptotic_scales_shape_by_one_plus_d_squared() {
        let cov = cov_1d(4.0, 0.0);
        let variance = Jet::new(1.0, DVec::zeros(1), DMat::zeros(1));
        let d0 = Jet::new(0.0, DVec::zeros(1), DMat::from_rows(1, &[-2.0]));
        let d1 = Jet::new(1.0, DVec::zeros(1), DMat::from_rows(1, &[-2.0]));
        let r0 = ConfidenceEllipsoid::asymptotic_cohens_d(
            DVec::from_slice(&[0.0]),
            &d0,
            &cov,
            &variance,
            100,
            0.05,
        )
        .unwrap();
        let r1 = ConfidenceEllipsoid::asymptotic_cohens_d(
            DVec::from_slice(&[0.0]),
            &d1,
            &cov,
            &variance,
            100,
            0.05,
        )
        .unwrap();
        assert_abs_diff_eq!(
            r1.shape().get(0, 0),
            2.0 * r0.shape().get(0, 0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn two_dimensional_semi_axes_follow_the_shape_eigenvalues() {
        let cov = PointCovariance {
            n: 25,
            grad_cov: DMat::from_rows(2, &[2.0, 0.0, 0.0, 0.5]),
            grad_value_cov: DVec::zeros(2),
            hess_cov: HMat::zeros(3),
        };
        let region = ConfidenceEllipsoid::asymptotic_mean(
            DVec::from_slice(&[0.0, 0.0]),
            &DMat::from_rows(2, &[-1.0, 0.0, 0.0, -1.0]),
            &cov,
            25,
            0.05,
        )
        .unwrap();
        let thr = region.threshold();
        let axes = region.semi_axes();
        assert_abs_diff_eq!(axes[0].0, libm::sqrt(thr * 0.5 / 25.0), epsilon = 1e-12);
        assert_abs_diff_eq!(axes[1].0, libm::sqrt(thr * 2.0 / 25.0), epsilon = 1e-12);
        assert_abs_diff_eq!(thr, 5.991_464_547_107_979, epsilon = 1e-9);
    }

    #[test]
    fn small_cohorts_are_rejected() {
        let err = ConfidenceEllipsoid::asymptotic_mean(
            DVec::from_slice(&[0.0]),
            &DMat::from_rows(1, &[-2.0]),
            &cov_1d(4.0, 0.0),
            2,
            0.05,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParam(_)));
    }
}
