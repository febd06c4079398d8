//! Cross-subject covariance estimation for field derivatives.
//!
//! The sampling distribution of an estimated peak location is driven by the
//! covariance of the statistic field's gradient at the peak. For the mean
//! field this is the subject-to-subject covariance of the smoothed gradient;
//! for Cohen's d the gradient of the standardizing transform contributes
//! additional terms mixing the gradient with the value and the variance
//! gradient. Hessian covariance (over half-vectorized Hessians) feeds the
//! Monte Carlo region construction.

use crate::error::{Error, Result};
use crate::field::{DomainBox, Jet};
use crate::linalg::{DMat, DVec, HMat, HVec};
use crate::sample_fields::{FieldCohort, VARIANCE_FLOOR};
use crate::field::ScalarField;
use alloc::vec::Vec;

/// Relative spectral condition number above which a gradient covariance is
/// treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative eigenvalue band (times the trace) inside which slightly negative
/// covariance eigenvalues are clipped to zero.
pub const PSD_CLIP: f64 = 1e-10;

/// Relative asymmetry tolerated when half-vectorizing a matrix.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Half-vectorize a symmetric matrix: stack the columns of the lower
/// triangle, giving `[m00]` in one dimension and `[m00, m10, m11]` in two.
///
/// # Errors
/// [`Error::NotSymmetric`] when the asymmetry exceeds [`SYMMETRY_TOL`]
/// relative to the matrix scale.
pub fn vech(m: &DMat) -> Result<HVec> {
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL * m.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    match m.n() {
        1 => Ok(HVec::from_slice(&[m.get(0, 0)])),
        _ => Ok(HVec::from_slice(&[m.get(0, 0), m.get(1, 0), m.get(1, 1)])),
    }
}

/// Rebuild the symmetric matrix from its half-vectorization.
#[must_use]
pub fn vech_inv(v: &HVec) -> DMat {
    match v.len() {
        1 => DMat::from_rows(1, &[v[0]]),
        _ => DMat::from_rows(2, &[v[0], v[1], v[1], v[2]]),
    }
}

/// Length of the half-vectorization in `dim` spatial dimensions.
#[must_use]
pub fn vech_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Pointwise cross-subject covariance estimates of field derivatives.
#[derive(Debug, Clone, Copy)]
pub struct PointCovariance {
    /// Number of subjects behind the estimate.
    pub n: usize,
    /// Covariance of the subject gradients.
    pub grad_cov: DMat,
    /// Covariance between subject values and subject gradients (one column).
    pub grad_value_cov: DVec,
    /// Covariance of half-vectorized subject Hessians.
    pub hess_cov: HMat,
}

impl PointCovariance {
    /// Estimate all derivative covariances from per-subject jets.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] with fewer than two jets;
    /// [`Error::NotSymmetric`] if a subject Hessian fails the symmetry check.
    pub fn from_jets(jets: &[Jet]) -> Result<Self> {
        let n = jets.len();
        if n < 2 {
            return Err(Error::invalid("covariance needs at least two subjects"));
        }
        let dim = jets[0].gradient.len();
        let vd = vech_len(dim);
        let inv_n = 1.0 / n as f64;
        let mut mean_value = 0.0;
        let mut mean_grad = DVec::zeros(dim);
        let mut mean_vech = HVec::zeros(vd);
        let mut vechs: Vec<HVec> = Vec::with_capacity(n);
        for j in jets {
            mean_value += j.value;
            mean_grad = mean_grad.add(&j.gradient);
            let v = vech(&j.hessian)?;
            mean_vech = mean_vech.add(&v);
            vechs.push(v);
        }
        mean_value *= inv_n;
        mean_grad = mean_grad.scale(inv_n);
        mean_vech = mean_vech.scale(inv_n);

        let mut grad_cov = DMat::zeros(dim);
        let mut grad_value_cov = DVec::zeros(dim);
        let mut hess_cov = HMat::zeros(vd);
        for (j, v) in jets.iter().zip(&vechs) {
            let dg = j.gradient.sub(&mean_grad);
            let dy = j.value - mean_value;
            let dv = v.sub(&mean_vech);
            grad_cov = grad_cov.add(&dg.outer(&dg));
            grad_value_cov = grad_value_cov.add(&dg.scale(dy));
            hess_cov = hess_cov.add(&dv.outer(&dv));
        }
        let inv_nm1 = 1.0 / (n as f64 - 1.0);
        Ok(Self {
            n,
            grad_cov: grad_cov.scale(inv_nm1),
            grad_value_cov: grad_value_cov.scale(inv_nm1),
            hess_cov: hess_cov.scale(inv_nm1),
        })
    }

    /// Estimate at one point of a cohort.
    ///
    /// # Errors
    /// Propagates subject evaluation failures and [`PointCovariance::from_jets`].
    pub fn at_point<F: ScalarField>(cohort: &FieldCohort<F>, s: &DVec) -> Result<Self> {
        Self::from_jets(&cohort.subject_jets(s)?)
    }

    /// Average of pointwise estimates over several points; appropriate when
    /// the derivative covariances are spatially homogeneous.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] with no points; otherwise as
    /// [`PointCovariance::at_point`].
    pub fn pooled<F: ScalarField>(cohort: &FieldCohort<F>, points: &[DVec]) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::invalid("no pooling points"))?;
        let mut acc = Self::at_point(cohort, first)?;
        for p in &points[1..] {
            let c = Self::at_point(cohort, p)?;
            acc.grad_cov = acc.grad_cov.add(&c.grad_cov);
            acc.grad_value_cov = acc.grad_value_cov.add(&c.grad_value_cov);
            acc.hess_cov = acc.hess_cov.add(&c.hess_cov);
        }
        let inv = 1.0 / points.len() as f64;
        acc.grad_cov = acc.grad_cov.scale(inv);
        acc.grad_value_cov = acc.grad_value_cov.scale(inv);
        acc.hess_cov = acc.hess_cov.scale(inv);
        Ok(acc)
    }

    /// Reject gradient covariances that are numerically singular.
    ///
    /// # Errors
    /// [`Error::SingularCovariance`] when the spectral condition number
    /// exceeds [`CONDITION_LIMIT`] or the matrix is not finite.
    pub fn check_conditioning(&self) -> Result<()> {
        if !self.grad_cov.is_finite() {
            return Err(Error::SingularCovariance { cond: f64::INFINITY });
        }
        let cond = self.grad_cov.sym_condition();
        if !(cond <= CONDITION_LIMIT) {
            return Err(Error::SingularCovariance { cond });
        }
        Ok(())
    }
}

/// Gradient covariance of the Cohen's d field implied by the raw-field
/// covariances and the sample-variance jet:
/// `Lambda / v - (g Gamma^T + Gamma g^T) / (2 v^2) + g g^T / (4 v^2)`
/// with `v` the variance, `g` its gradient and `Gamma` the value-gradient
/// covariance. Equivalently, the sample covariance of the gradients of the
/// studentized subject fields `(Y_n - mean) / sd`.
///
/// # Errors
/// [`Error::DegenerateVariance`] when the variance is at or below the floor.
pub fn cohens_d_grad_cov(cov: &PointCovariance, variance: &Jet) -> Result<DMat> {
    let v = variance.value;
    if !(v > VARIANCE_FLOOR) {
        return Err(Error::DegenerateVariance { floor: VARIANCE_FLOOR });
    }
    let g = variance.gradient;
    let gamma = cov.grad_value_cov;
    let v2 = v * v;
    let out = cov
        .grad_cov
        .scale(1.0 / v)
        .sub(&g.outer(&gamma).add(&gamma.outer(&g)).scale(0.5 / v2))
        .add(&g.outer(&g).scale(0.25 / v2));
    Ok(out.symmetrize())
}

/// Axis-aligned grid of points covering `domain` with the given step
/// (starting at the lower corner, last point at or before the upper corner).
#[must_use]
pub fn grid_points(domain: &DomainBox, step: f64) -> Vec<DVec> {
    let dim = domain.dim();
    let counts: Vec<usize> = (0..dim)
        .map(|d| (libm::floor(domain.side(d) / step + 1e-9) as usize) + 1)
        .collect();
    let mut out = Vec::new();
    if dim == 1 {
        for i in 0..counts[0] {
            out.push(DVec::from_slice(&[domain.lo()[0] + i as f64 * step]));
        }
    } else {
        for i in 0..counts[0] {
            for j in 0..counts[1] {
                out.push(DVec::from_slice(&[
                    domain.lo()[0] + i as f64 * step,
                    domain.lo()[1] + j as f64 * step,
                ]));
            }
        }
    }
    out
}
