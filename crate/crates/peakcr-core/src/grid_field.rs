//! Lattice data smoothed into twice-differentiable fields.
//!
//! Observations live on a regular lattice; convolving them with a truncated
//! Gaussian kernel produces a [`SmoothField`] whose value, gradient and
//! Hessian are all exact sums of kernel derivatives — no finite differences
//! anywhere. Optionally the field is standardized by the square root of the
//! kernel's local sum of squares, which makes smoothed white noise have
//! variance exactly one at every point.
//!
//! The kernel is separable and truncated per axis at a fixed multiple of its
//! bandwidth, so every evaluation touches only a small window of lattice
//! sites and the sum-of-squares normalizer factorizes across axes. Fields are
//! only defined on the lattice's bounding box inset by the truncation radius,
//! which keeps every window fully populated and avoids edge bias.

use crate::error::{Error, Result};
use crate::field::{DomainBox, Jet, ScalarField};
use crate::linalg::{DMat, DVec, MAX_DIM};
use alloc::vec::Vec;

/// Maximum number of lattice sites a kernel window may span per axis.
pub const WINDOW_CAP: usize = 128;

/// Default truncation radius in units of the kernel bandwidth `sigma`.
pub const DEFAULT_TRUNCATION_SIGMAS: f64 = 4.0;

/// Regular rectangular lattice: per-axis site counts, origin and spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "LatticeWire", into = "LatticeWire"))]
pub struct Lattice {
    dim: usize,
    shape: [usize; MAX_DIM],
    origin: [f64; MAX_DIM],
    spacing: [f64; MAX_DIM],
}

/// Serialized form of [`Lattice`]: per-axis lists of natural length, so a
/// one-dimensional lattice reads `{"shape": [44], "origin": [0.0],
/// "spacing": [1.0]}`. Deserializing validates through [`Lattice::new`].
#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeWire {
    shape: Vec<usize>,
    origin: Vec<f64>,
    spacing: Vec<f64>,
}

#[cfg(feature = "serde")]
impl From<Lattice> for LatticeWire {
    fn from(l: Lattice) -> Self {
        Self {
            shape: l.shape[..l.dim].to_vec(),
            origin: l.origin[..l.dim].to_vec(),
            spacing: l.spacing[..l.dim].to_vec(),
        }
    }
}

#[cfg(feature = "serde")]
impl TryFrom<LatticeWire> for Lattice {
    type Error = Error;

    fn try_from(w: LatticeWire) -> Result<Self> {
        Lattice::new(&w.shape, &w.origin, &w.spacing)
    }
}

impl Lattice {
    /// New lattice; every axis needs at least two sites and positive spacing.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] on an unsupported dimension, an axis with
    /// fewer than two sites, or a non-positive / non-finite spacing.
    pub fn new(shape: &[usize], origin: &[f64], spacing: &[f64]) -> Result<Self> {
        let dim = shape.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid("lattice dimension must be 1 or 2"));
        }
        if origin.len() != dim || spacing.len() != dim {
            return Err(Error::invalid("lattice shape/origin/spacing lengths differ"));
        }
        let mut out = Self {
            dim,
            shape: [1; MAX_DIM],
            origin: [0.0; MAX_DIM],
            spacing: [1.0; MAX_DIM],
        };
        for d in 0..dim {
            if shape[d] < 2 {
                return Err(Error::invalid("lattice needs at least two sites per axis"));
            }
            if !spacing[d].is_finite() || spacing[d] <= 0.0 {
                return Err(Error::invalid("lattice spacing must be positive"));
            }
            if !origin[d].is_finite() {
                return Err(Error::invalid("lattice origin must be finite"));
            }
            out.shape[d] = shape[d];
            out.origin[d] = origin[d];
            out.spacing[d] = spacing[d];
        }
        Ok(out)
    }

    /// Unit-spacing lattice starting at zero.
    ///
    /// # Errors
    /// As for [`Lattice::new`].
    pub fn unit(shape: &[usize]) -> Result<Self> {
        let ones = [1.0; MAX_DIM];
        let zeros = [0.0; MAX_DIM];
        Self::new(shape, &zeros[..shape.len()], &ones[..shape.len()])
    }

    /// Spatial dimension.
    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Site count along axis `d`.
    #[must_use]
    pub fn extent(&self, d: usize) -> usize {
        self.shape[d]
    }

    /// Total number of sites.
    #[must_use]
    pub fn len(&self) -> usize {
        self.shape[..self.dim].iter().product()
    }

    /// Always false.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spacing along axis `d`.
    #[must_use]
    pub fn spacing(&self, d: usize) -> f64 {
        self.spacing[d]
    }

    /// Smallest spacing over the axes.
    #[must_use]
    pub fn min_spacing(&self) -> f64 {
        let mut m = f64::INFINITY;
        for d in 0..self.dim {
            m = m.min(self.spacing[d]);
        }
        m
    }

    /// Physical coordinate of site `i` on axis `d`.
    #[must_use]
    pub fn coord(&self, d: usize, i: usize) -> f64 {
        self.origin[d] + i as f64 * self.spacing[d]
    }

    /// Physical location of the site with the given flat (row-major) index.
    #[must_use]
    pub fn site(&self, flat: usize) -> DVec {
        let mut s = DVec::zeros(self.dim);
        if self.dim == 1 {
            s[0] = self.coord(0, flat);
        } else {
            s[0] = self.coord(0, flat / self.shape[1]);
            s[1] = self.coord(1, flat % self.shape[1]);
        }
        s
    }

    /// Bounding box spanned by the sites.
    ///
    /// # Errors
    /// Never fails for a valid lattice; the `Result` mirrors box construction.
    pub fn bounding_box(&self) -> Result<DomainBox> {
        let mut lo = DVec::zeros(self.dim);
        let mut hi = DVec::zeros(self.dim);
        for d in 0..self.dim {
            lo[d] = self.origin[d];
            hi[d] = self.coord(d, self.shape[d] - 1);
        }
        DomainBox::new(lo, hi)
    }
}

/// Lattice plus one observation per site (row-major storage; in two
/// dimensions the second axis varies fastest).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatticeSample {
    lattice: Lattice,
    values: Vec<f64>,
}

impl LatticeSample {
    /// Bundle a lattice with its observations.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] when the value count does not match the
    /// lattice size.
    pub fn new(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::invalid("value count does not match lattice size"));
        }
        Ok(Self { lattice, values })
    }

    /// The underlying lattice.
    #[must_use]
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Flat row-major observation slice.
    #[must_use]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable observation slice.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Sitewise average of several samples on one common lattice.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] when the slice is empty or lattices differ.
    pub fn average(samples: &[Self]) -> Result<Self> {
        let first = samples.first().ok_or_else(|| Error::invalid("no samples to average"))?;
        let mut acc = first.values.clone();
        for s in &samples[1..] {
            if s.lattice != first.lattice {
                return Err(Error::invalid("samples live on different lattices"));
            }
            for (a, v) in acc.iter_mut().zip(&s.values) {
                *a += v;
            }
        }
        let inv = 1.0 / samples.len() as f64;
        for a in &mut acc {
            *a *= inv;
        }
        Self::new(first.lattice, acc)
    }
}

/// Isotropic Gaussian kernel truncated at a fixed radius, normalized so the
/// untruncated kernel integrates to one along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianKernel {
    sigma: f64,
    radius: f64,
}

impl GaussianKernel {
    /// Kernel with bandwidth `sigma`, truncated at `truncation_sigmas * sigma`.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] for non-positive bandwidth or truncation.
    pub fn new(sigma: f64, truncation_sigmas: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::invalid("kernel bandwidth must be positive"));
        }
        if !truncation_sigmas.is_finite() || truncation_sigmas <= 0.0 {
            return Err(Error::invalid("kernel truncation must be positive"));
        }
        Ok(Self { sigma, radius: truncation_sigmas * sigma })
    }

    /// Kernel specified by full width at half maximum.
    ///
    /// # Errors
    /// As for [`GaussianKernel::new`].
    pub fn from_fwhm(fwhm: f64, truncation_sigmas: f64) -> Result<Self> {
        Self::new(fwhm / (2.0 * libm::sqrt(2.0 * core::f64::consts::LN_2)), truncation_sigmas)
    }

    /// Bandwidth `sigma`.
    #[must_use]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Full width at half maximum.
    #[must_use]
    pub fn fwhm(&self) -> f64 {
        self.sigma * 2.0 * libm::sqrt(2.0 * core::f64::consts::LN_2)
    }

    /// Truncation radius in physical units.
    #[must_use]
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// One-axis kernel value `k(u)`; zero beyond the truncation radius.
    #[must_use]
    pub fn value(&self, u: f64) -> f64 {
        if libm::fabs(u) > self.radius {
            return 0.0;
        }
        let s2 = self.sigma * self.sigma;
        libm::exp(-0.5 * u * u / s2) / (self.sigma * libm::sqrt(2.0 * core::f64::consts::PI))
    }

    /// First derivative `k'(u) = -(u / sigma^2) k(u)`.
    #[must_use]
    pub fn deriv1(&self, u: f64) -> f64 {
        -(u / (self.sigma * self.sigma)) * self.value(u)
    }

    /// Second derivative `k''(u) = (u^2 / sigma^4 - 1 / sigma^2) k(u)`.
    #[must_use]
    pub fn deriv2(&self, u: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        (u * u / (s2 * s2) - 1.0 / s2) * self.value(u)
    }
}

/// One axis's kernel window: the lattice index range within the truncation
/// radius plus the kernel and its two derivatives at each offset.
struct AxisWindow {
    start: usize,
    len: usize,
    k: [f64; WINDOW_CAP],
    k1: [f64; WINDOW_CAP],
    k2: [f64; WINDOW_CAP],
}

impl AxisWindow {
    fn build(lattice: &Lattice, kernel: &GaussianKernel, d: usize, s: f64) -> Self {
        let sp = lattice.spacing(d);
        let lo = libm::floor((s - kernel.radius() - lattice.origin[d]) / sp) as isize;
        let hi = libm::ceil((s - lattice.origin[d] + kernel.radius()) / sp) as isize;
        let start = lo.max(0) as usize;
        let stop = (hi.min(lattice.extent(d) as isize - 1)).max(0) as usize;
        let len = stop + 1 - start;
        debug_assert!(len <= WINDOW_CAP);
        let mut w = Self {
            start,
            len,
            k: [0.0; WINDOW_CAP],
            k1: [0.0; WINDOW_CAP],
            k2: [0.0; WINDOW_CAP],
        };
        for i in 0..len {
            let u = s - lattice.coord(d, start + i);
            w.k[i] = kernel.value(u);
            w.k1[i] = kernel.deriv1(u);
            w.k2[i] = kernel.deriv2(u);
        }
        w
    }

    /// Sums of `k^2` and its two derivatives `2 k k'` and `2 (k'^2 + k k'')`
    /// over the window — the axis factors of the squared-kernel sum.
    fn square_sums(&self) -> (f64, f64, f64) {
        let (mut a, mut a1, mut a2) = (0.0, 0.0, 0.0);
        for i in 0..self.len {
            a += self.k[i] * self.k[i];
            a1 += 2.0 * self.k[i] * self.k1[i];
            a2 += 2.0 * (self.k1[i] * self.k1[i] + self.k[i] * self.k2[i]);
        }
        (a, a1, a2)
    }
}

/// Lattice observations convolved with a Gaussian kernel, optionally
/// standardized to unit noise variance; a twice-differentiable field.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothField {
    sample: LatticeSample,
    kernel: GaussianKernel,
    standardize: bool,
    domain: DomainBox,
}

impl SmoothField {
    /// Smooth `sample` with `kernel`; with `standardize` the result is
    /// divided by the square root of the kernel's local sum of squares.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] when the lattice is too small to leave any
    /// domain after the truncation-radius inset, or the kernel window would
    /// span more than [`WINDOW_CAP`] sites on some axis.
    pub fn new(sample: LatticeSample, kernel: GaussianKernel, standardize: bool) -> Result<Self> {
        let lattice = *sample.lattice();
        for d in 0..lattice.dim() {
            let max_window = 2.0 * kernel.radius() / lattice.spacing(d) + 3.0;
            if max_window > WINDOW_CAP as f64 {
                return Err(Error::invalid("kernel window exceeds supported width"));
            }
        }
        let domain = lattice
            .bounding_box()?
            .shrink(kernel.radius())
            .map_err(|_| Error::invalid("lattice too small for the kernel truncation radius"))?;
        Ok(Self { sample, kernel, standardize, domain })
    }

    /// The smoothed sample.
    #[must_use]
    pub fn sample(&self) -> &LatticeSample {
        &self.sample
    }

    /// The smoothing kernel.
    #[must_use]
    pub fn kernel(&self) -> &GaussianKernel {
        &self.kernel
    }

    /// Whether values are standardized by the local noise scale.
    #[must_use]
    pub fn is_standardized(&self) -> bool {
        self.standardize
    }

    /// Raw (unstandardized) convolution jet at `s`.
    ///
    /// # Errors
    /// [`Error::OutOfDomain`] outside the inset domain.
    pub fn raw_jet(&self, s: &DVec) -> Result<Jet> {
        self.check_point(s)?;
        let lattice = self.sample.lattice();
        let dim = lattice.dim();
        let w0 = AxisWindow::build(lattice, &self.kernel, 0, s[0]);
        let data = self.sample.values();
        if dim == 1 {
            let (mut y, mut g, mut h) = (0.0, 0.0, 0.0);
            for i in 0..w0.len {
                let x = data[w0.start + i];
                y += w0.k[i] * x;
                g += w0.k1[i] * x;
                h += w0.k2[i] * x;
            }
            return Ok(Jet::new(y, DVec::from_slice(&[g]), DMat::from_rows(1, &[h])));
        }
        let w1 = AxisWindow::build(lattice, &self.kernel, 1, s[1]);
        let n1 = lattice.extent(1);
        // contract the fast axis first: c, c1, c2 hold the axis-1 sums
        // weighted by k, k', k'' for each row of the axis-0 window
        let (mut y, mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..w0.len {
            let row = (w0.start + i) * n1 + w1.start;
            let (mut c, mut c1, mut c2) = (0.0, 0.0, 0.0);
            for j in 0..w1.len {
                let x = data[row + j];
                c += w1.k[j] * x;
                c1 += w1.k1[j] * x;
                c2 += w1.k2[j] * x;
            }
            y += w0.k[i] * c;
            g0 += w0.k1[i] * c;
            g1 += w0.k[i] * c1;
            h00 += w0.k2[i] * c;
            h01 += w0.k1[i] * c1;
            h11 += w0.k[i] * c2;
        }
        Ok(Jet::new(
            y,
            DVec::from_slice(&[g0, g1]),
            DMat::from_rows(2, &[h00, h01, h01, h11]),
        ))
    }

    /// Jet of the local noise scale `m(s) = sqrt(sum of squared kernel
    /// weights)` — the divisor used when standardizing.
    ///
    /// # Errors
    /// [`Error::OutOfDomain`] outside the inset domain.
    pub fn scale_jet(&self, s: &DVec) -> Result<Jet> {
        self.check_point(s)?;
        let lattice = self.sample.lattice();
        let dim = lattice.dim();
        let (q, gq, hq);
        if dim == 1 {
            let w0 = AxisWindow::build(lattice, &self.kernel, 0, s[0]);
            let (a, a1, a2) = w0.square_sums();
            q = a;
            gq = DVec::from_slice(&[a1]);
            hq = DMat::from_rows(1, &[a2]);
        } else {
            let w0 = AxisWindow::build(lattice, &self.kernel, 0, s[0]);
            let w1 = AxisWindow::build(lattice, &self.kernel, 1, s[1]);
            let (a, a1, a2) = w0.square_sums();
            let (b, b1, b2) = w1.square_sums();
            q = a * b;
            gq = DVec::from_slice(&[a1 * b, a * b1]);
            hq = DMat::from_rows(2, &[a2 * b, a1 * b1, a1 * b1, a * b2]);
        }
        debug_assert!(q > 0.0, "squared-kernel sum vanished inside the domain");
        let m = libm::sqrt(q);
        // m = sqrt(q): grad m = grad q / (2m); hess m = hess q / (2m)
        //   - (grad q)(grad q)^T / (4 q^(3/2))
        let gm = gq.scale(0.5 / m);
        let hm = hq.scale(0.5 / m).sub(&gq.outer(&gq).scale(0.25 / (q * m)));
        Ok(Jet::new(m, gm, hm))
    }

    fn check_point(&self, s: &DVec) -> Result<()> {
        if s.len() != self.domain.dim() || !s.is_finite() || !self.domain.contains(s) {
            return Err(Error::OutOfDomain);
        }
        Ok(())
    }

    fn value_only(&self, s: &DVec) -> Result<f64> {
        self.check_point(s)?;
        let lattice = self.sample.lattice();
        let w0 = AxisWindow::build(lattice, &self.kernel, 0, s[0]);
        let data = self.sample.values();
        let mut y = 0.0;
        if lattice.dim() == 1 {
            for i in 0..w0.len {
                y += w0.k[i] * data[w0.start + i];
            }
        } else {
            let w1 = AxisWindow::build(lattice, &self.kernel, 1, s[1]);
            let n1 = lattice.extent(1);
            for i in 0..w0.len {
                let row = (w0.start + i) * n1 + w1.start;
                let mut c = 0.0;
                for j in 0..w1.len {
                    c += w1.k[j] * data[row + j];
                }
                y += w0.k[i] * c;
            }
        }
        if self.standardize {
            let mut q = 1.0;
            for d in 0..lattice.dim() {
                let w = AxisWindow::build(lattice, &self.kernel, d, s[d]);
                let mut a = 0.0;
                for i in 0..w.len {
                    a += w.k[i] * w.k[i];
                }
                q *= a;
            }
            y /= libm::sqrt(q);
        }
        Ok(y)
    }
}

/// Jet of the quotient `y / m` from the jets of `y` and `m`.
#[must_use]
pub fn quotient_jet(y: &Jet, m: &Jet) -> Jet {
    let mv = m.value;
    let v = y.value / mv;
    // grad(y/m) = grad y / m - y grad m / m^2
    let g = y.gradient.scale(1.0 / mv).sub(&m.gradient.scale(y.value / (mv * mv)));
    // hess(y/m) = hess y / m - (grad y grad m^T + grad m grad y^T) / m^2
    //   - y hess m / m^2 + 2 y grad m grad m^T / m^3
    let cross = y
        .gradient
        .outer(&m.gradient)
        .add(&m.gradient.outer(&y.gradient))
        .scale(1.0 / (mv * mv));
    let h = y
        .hessian
        .scale(1.0 / mv)
        .sub(&cross)
        .sub(&m.hessian.scale(y.value / (mv * mv)))
        .add(&m.gradient.outer(&m.gradient).scale(2.0 * y.value / (mv * mv * mv)));
    Jet::new(v, g, h)
}

impl ScalarField for SmoothField {
    fn dim(&self) -> usize {
        self.sample.lattice().dim()
    }

    fn domain(&self) -> DomainBox {
        self.domain
    }

    fn grid_step(&self) -> f64 {
        self.sample.lattice().min_spacing()
    }

    fn jet(&self, s: &DVec) -> Result<Jet> {
        let raw = self.raw_jet(s)?;
        if !self.standardize {
            return Ok(raw);
        }
        let scale = self.scale_jet(s)?;
        Ok(quotient_jet(&raw, &scale))
    }

    fn value(&self, s: &DVec) -> Result<f64> {
        self.value_only(s)
    }
}
