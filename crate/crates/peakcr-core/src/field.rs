//! The scalar-field abstraction shared by every downstream stage.
//!
//! A [`ScalarField`] is a twice continuously differentiable function on a
//! rectangular box, evaluated through its second-order jet (value, gradient,
//! Hessian). Peak finding, covariance estimation and confidence regions all
//! operate on this trait, so lattice-smoothed data, analytic test signals and
//! spectral fields are interchangeable.

use crate::error::{Error, Result};
use crate::linalg::{DMat, DVec};

/// Closed rectangular domain `[lo_1, hi_1] x ... x [lo_D, hi_D]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DomainBox {
    lo: DVec,
    hi: DVec,
}

impl DomainBox {
    /// New box with `lo[i] < hi[i]` in every coordinate.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] when dimensions mismatch, any side is empty, or
    /// a bound is not finite.
    pub fn new(lo: DVec, hi: DVec) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::invalid("domain bounds have mismatched dimensions"));
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("domain bounds must be finite"));
        }
        for i in 0..lo.len() {
            if lo[i] >= hi[i] {
                return Err(Error::invalid("domain box has an empty side"));
            }
        }
        Ok(Self { lo, hi })
    }

    /// One-dimensional interval `[lo, hi]`.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] as for [`DomainBox::new`].
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(DVec::from_slice(&[lo]), DVec::from_slice(&[hi]))
    }

    /// Spatial dimension.
    #[must_use]
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Lower corner.
    #[must_use]
    pub fn lo(&self) -> DVec {
        self.lo
    }

    /// Upper corner.
    #[must_use]
    pub fn hi(&self) -> DVec {
        self.hi
    }

    /// Side length along axis `i`.
    #[must_use]
    pub fn side(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    /// Whether the point lies in the closed box.
    #[must_use]
    pub fn contains(&self, s: &DVec) -> bool {
        if s.len() != self.dim() {
            return false;
        }
        (0..self.dim()).all(|i| s[i] >= self.lo[i] && s[i] <= self.hi[i])
    }

    /// Nearest point of the closed box.
    #[must_use]
    pub fn clamp(&self, s: &DVec) -> DVec {
        let mut out = *s;
        for i in 0..self.dim() {
            out[i] = out[i].clamp(self.lo[i], self.hi[i]);
        }
        out
    }

    /// Box inset by `margin` on every side.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] when the inset empties some side.
    pub fn shrink(&self, margin: f64) -> Result<Self> {
        let mut lo = self.lo;
        let mut hi = self.hi;
        for i in 0..self.dim() {
            lo[i] += margin;
            hi[i] -= margin;
        }
        Self::new(lo, hi)
    }

    /// Distance from `s` to the nearest boundary face (negative outside).
    #[must_use]
    pub fn boundary_distance(&self, s: &DVec) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.dim() {
            d = d.min(s[i] - self.lo[i]).min(self.hi[i] - s[i]);
        }
        d
    }
}

/// Second-order jet of a field at a point: value, gradient and Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    /// Field value.
    pub value: f64,
    /// Gradient vector.
    pub gradient: DVec,
    /// Hessian matrix (symmetric).
    pub hessian: DMat,
}

impl Jet {
    /// Bundle the three jet components.
    #[must_use]
    pub fn new(value: f64, gradient: DVec, hessian: DMat) -> Self {
        Self { value, gradient, hessian }
    }

    /// Jet of the zero function.
    #[must_use]
    pub fn zeros(dim: usize) -> Self {
        Self::new(0.0, DVec::zeros(dim), DMat::zeros(dim))
    }

    /// True when all components are finite.
    #[must_use]
    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.gradient.is_finite() && self.hessian.is_finite()
    }
}

/// A twice continuously differentiable scalar field on a box domain.
///
/// `jet` is the single required evaluation; `value`, `gradient` and `hessian`
/// default to extracting the corresponding component (implementors with a
/// cheaper value-only path should override `value`). Evaluation outside
/// [`ScalarField::domain`] returns [`Error::OutOfDomain`].
pub trait ScalarField {
    /// Spatial dimension of the field.
    fn dim(&self) -> usize;

    /// Domain on which evaluation is valid.
    fn domain(&self) -> DomainBox;

    /// Characteristic resolution of the field (lattice spacing or analogous
    /// scale). Seeding grids and deduplication distances are expressed in
    /// multiples of this step.
    fn grid_step(&self) -> f64;

    /// Value, gradient and Hessian at `s`.
    ///
    /// # Errors
    /// [`Error::OutOfDomain`] when `s` lies outside the domain; implementors
    /// may surface further numeric failures.
    fn jet(&self, s: &DVec) -> Result<Jet>;

    /// Field value at `s`.
    ///
    /// # Errors
    /// As for [`ScalarField::jet`].
    fn value(&self, s: &DVec) -> Result<f64> {
        Ok(self.jet(s)?.value)
    }

    /// Gradient at `s`.
    ///
    /// # Errors
    /// As for [`ScalarField::jet`].
    fn gradient(&self, s: &DVec) -> Result<DVec> {
        Ok(self.jet(s)?.gradient)
    }

    /// Hessian at `s`.
    ///
    /// # Errors
    /// As for [`ScalarField::jet`].
    fn hessian(&self, s: &DVec) -> Result<DMat> {
        Ok(self.jet(s)?.hessian)
    }
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn domain(&self) -> DomainBox {
        (**self).domain()
    }
    fn grid_step(&self) -> f64 {
        (**self).grid_step()
    }
    fn jet(&self, s: &DVec) -> Result<Jet> {
        (**self).jet(s)
    }
    fn value(&self, s: &DVec) -> Result<f64> {
        (**self).value(s)
    }
    fn gradient(&self, s: &DVec) -> Result<DVec> {
        (**self).gradient(s)
    }
    fn hessian(&self, s: &DVec) -> Result<DMat> {
        (**self).hessian(s)
    }
}
