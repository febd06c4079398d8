//! Small fixed-capacity linear algebra for spatial dimension D in {1, 2}.
//!
//! Spatial vectors/matrices ([`DVec`], [`DMat`]) hold gradients, Hessians and
//! D x D covariance objects; half-vectorization vectors/matrices ([`HVec`],
//! [`HMat`]) hold vech(Hessian) values and their covariance, whose dimension
//! is D(D+1)/2 in {1, 3}. Everything is `Copy`, allocation-free and backed by
//! fixed arrays, which keeps the Monte Carlo draw loop free of heap traffic.
//!
//! Eigendecompositions use cyclic Jacobi rotations (exact in one sweep for
//! 2 x 2, quadratically convergent for 3 x 3); Cholesky and inverses are the
//! closed small-dimension forms.

use crate::error::{Error, Result};

/// Maximum spatial dimension.
pub const MAX_DIM: usize = 2;
/// Maximum vech dimension, D(D+1)/2 at D = 2.
pub const MAX_VECH: usize = 3;

macro_rules! small_vec {
    ($(#[$doc:meta])* $name:ident, $cap:expr) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name {
            len: usize,
            data: [f64; $cap],
        }

        impl $name {
            /// Zero vector of the given length.
            #[must_use]
            pub fn zeros(len: usize) -> Self {
                assert!((1..=$cap).contains(&len), "vector length {len} out of range");
                Self { len, data: [0.0; $cap] }
            }

            /// Vector with the given entries.
            #[must_use]
            pub fn from_slice(v: &[f64]) -> Self {
                let mut out = Self::zeros(v.len());
                out.data[..v.len()].copy_from_slice(v);
                out
            }

            /// Number of entries.
            #[must_use]
            pub fn len(&self) -> usize {
                self.len
            }

            /// Always false: lengths are in 1..=capacity.
            #[must_use]
            pub fn is_empty(&self) -> bool {
                false
            }

            /// Entries as a slice.
            #[must_use]
            pub fn as_slice(&self) -> &[f64] {
                &self.data[..self.len]
            }

            /// Mutable entries as a slice.
            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.data[..self.len]
            }

            /// Elementwise sum.
            #[must_use]
            pub fn add(&self, other: &Self) -> Self {
                debug_assert_eq!(self.len, other.len);
                let mut out = *self;
                for i in 0..self.len {
                    out.data[i] += other.data[i];
                }
                out
            }

            /// Elementwise difference.
            #[must_use]
            pub fn sub(&self, other: &Self) -> Self {
                debug_assert_eq!(self.len, other.len);
                let mut out = *self;
                for i in 0..self.len {
                    out.data[i] -= other.data[i];
                }
                out
            }

            /// Scalar multiple.
            #[must_use]
            pub fn scale(&self, c: f64) -> Self {
                let mut out = *self;
                for i in 0..self.len {
                    out.data[i] *= c;
                }
                out
            }

            /// Dot product.
            #[must_use]
            pub fn dot(&self, other: &Self) -> f64 {
                debug_assert_eq!(self.len, other.len);
                let mut acc = 0.0;
                for i in 0..self.len {
                    acc += self.data[i] * other.data[i];
                }
                acc
            }

            /// Euclidean norm.
            #[must_use]
            pub fn norm(&self) -> f64 {
                libm::sqrt(self.dot(self))
            }

            /// Maximum absolute entry.
            #[must_use]
            pub fn max_abs(&self) -> f64 {
                let mut m = 0.0f64;
                for i in 0..self.len {
                    m = m.max(libm::fabs(self.data[i]));
                }
                m
            }

            /// True if every entry is finite.
            #[must_use]
            pub fn is_finite(&self) -> bool {
                self.as_slice().iter().all(|v| v.is_finite())
            }
        }

        impl core::ops::Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                debug_assert!(i < self.len);
                &self.data[i]
            }
        }

        impl core::ops::IndexMut<usize> for $name {
            fn index_mut(&mut self, i: usize) -> &mut f64 {
                debug_assert!(i < self.len);
                &mut self.data[i]
            }
        }

        #[cfg(feature = "serde")]
        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
                s.collect_seq(self.as_slice())
            }
        }

        #[cfg(feature = "serde")]
        impl<'de> serde::Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
                let v = alloc::vec::Vec::<f64>::deserialize(d)?;
                if v.is_empty() || v.len() > $cap {
                    return Err(serde::de::Error::invalid_length(
                        v.len(),
                        &concat!("between 1 and ", stringify!($cap), " entries"),
                    ));
                }
                Ok(Self::from_slice(&v))
            }
        }
    };
}

macro_rules! small_mat {
    ($(#[$doc:meta])* $name:ident, $vec:ident, $cap:expr) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name {
            n: usize,
            data: [f64; $cap * $cap],
        }

        impl $name {
            /// Zero matrix of side `n`.
            #[must_use]
            pub fn zeros(n: usize) -> Self {
                assert!((1..=$cap).contains(&n), "matrix side {n} out of range");
                Self { n, data: [0.0; $cap * $cap] }
            }

            /// Identity matrix of side `n`.
            #[must_use]
            pub fn identity(n: usize) -> Self {
                let mut out = Self::zeros(n);
                for i in 0..n {
                    out.data[i * $cap + i] = 1.0;
                }
                out
            }

            /// Matrix from row-major entries (`rows.len() == n*n`).
            #[must_use]
            pub fn from_rows(n: usize, rows: &[f64]) -> Self {
                assert_eq!(rows.len(), n * n, "row-major entry count mismatch");
                let mut out = Self::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        out.data[i * $cap + j] = rows[i * n + j];
                    }
                }
                out
            }

            /// Side length.
            #[must_use]
            pub fn n(&self) -> usize {
                self.n
            }

            /// Entry (i, j).
            #[must_use]
            pub fn get(&self, i: usize, j: usize) -> f64 {
                debug_assert!(i < self.n && j < self.n);
                self.data[i * $cap + j]
            }

            /// Set entry (i, j).
            pub fn set(&mut self, i: usize, j: usize, v: f64) {
                debug_assert!(i < self.n && j < self.n);
                self.data[i * $cap + j] = v;
            }

            /// Elementwise sum.
            #[must_use]
            pub fn add(&self, other: &Self) -> Self {
                debug_assert_eq!(self.n, other.n);
                let mut out = *self;
                for i in 0..$cap * $cap {
                    out.data[i] += other.data[i];
                }
                out
            }

            /// Elementwise difference.
            #[must_use]
            pub fn sub(&self, other: &Self) -> Self {
                debug_assert_eq!(self.n, other.n);
                let mut out = *self;
                for i in 0..$cap * $cap {
                    out.data[i] -= other.data[i];
                }
                out
            }

            /// Scalar multiple.
            #[must_use]
            pub fn scale(&self, c: f64) -> Self {
                let mut out = *self;
                for i in 0..$cap * $cap {
                    out.data[i] *= c;
                }
                out
            }

            /// Matrix-vector product.
            #[must_use]
            pub fn mul_vec(&self, v: &$vec) -> $vec {
                debug_assert_eq!(self.n, v.len());
                let mut out = $vec::zeros(self.n);
                for i in 0..self.n {
                    let mut acc = 0.0;
                    for j in 0..self.n {
                        acc += self.get(i, j) * v[j];
                    }
                    out[i] = acc;
                }
                out
            }

            /// Matrix product.
            #[must_use]
            pub fn mul(&self, other: &Self) -> Self {
                debug_assert_eq!(self.n, other.n);
                let mut out = Self::zeros(self.n);
                for i in 0..self.n {
                    for j in 0..self.n {
                        let mut acc = 0.0;
                        for k in 0..self.n {
                            acc += self.get(i, k) * other.get(k, j);
                        }
                        out.set(i, j, acc);
                    }
                }
                out
            }

            /// Transpose.
            #[must_use]
            pub fn transpose(&self) -> Self {
                let mut out = Self::zeros(self.n);
                for i in 0..self.n {
                    for j in 0..self.n {
                        out.set(i, j, self.get(j, i));
                    }
                }
                out
            }

            /// (A + A^T) / 2.
            #[must_use]
            pub fn symmetrize(&self) -> Self {
                let mut out = Self::zeros(self.n);
                for i in 0..self.n {
                    for j in 0..self.n {
                        out.set(i, j, 0.5 * (self.get(i, j) + self.get(j, i)));
                    }
                }
                out
            }

            /// Maximum absolute asymmetry max |A_ij - A_ji|.
            #[must_use]
            pub fn asymmetry(&self) -> f64 {
                let mut m = 0.0f64;
                for i in 0..self.n {
                    for j in (i + 1)..self.n {
                        m = m.max(libm::fabs(self.get(i, j) - self.get(j, i)));
                    }
                }
                m
            }

            /// v^T A v.
            #[must_use]
            pub fn quad_form(&self, v: &$vec) -> f64 {
                self.mul_vec(v).dot(v)
            }

            /// Trace.
            #[must_use]
            pub fn trace(&self) -> f64 {
                let mut acc = 0.0;
                for i in 0..self.n {
                    acc += self.get(i, i);
                }
                acc
            }

            /// Maximum absolute entry.
            #[must_use]
            pub fn max_abs(&self) -> f64 {
                let mut m = 0.0f64;
                for i in 0..self.n {
                    for j in 0..self.n {
                        m = m.max(libm::fabs(self.get(i, j)));
                    }
                }
                m
            }

            /// True if every entry is finite.
            #[must_use]
            pub fn is_finite(&self) -> bool {
                for i in 0..self.n {
                    for j in 0..self.n {
                        if !self.get(i, j).is_finite() {
                            return false;
                        }
                    }
                }
                true
            }

            /// Determinant (closed form, n <= 3).
            #[must_use]
            pub fn det(&self) -> f64 {
                let g = |i, j| self.get(i, j);
                match self.n {
                    1 => g(0, 0),
                    2 => g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0),
                    _ => {
                        g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
                            - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                            + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
                    }
                }
            }

            /// Inverse via the adjugate; `None` when the determinant underflows
            /// relative to the entry scale.
            #[must_use]
            pub fn inverse(&self) -> Option<Self> {
                let det = self.det();
                let scale = self.max_abs().max(f64::MIN_POSITIVE);
                let mut scale_pow = 1.0;
                for _ in 0..self.n {
                    scale_pow *= scale;
                }
                if !det.is_finite() || libm::fabs(det) <= 1e-14 * scale_pow {
                    return None;
                }
                let g = |i, j| self.get(i, j);
                let mut out = Self::zeros(self.n);
                match self.n {
                    1 => out.set(0, 0, 1.0 / det),
                    2 => {
                        out.set(0, 0, g(1, 1) / det);
                        out.set(0, 1, -g(0, 1) / det);
                        out.set(1, 0, -g(1, 0) / det);
                        out.set(1, 1, g(0, 0) / det);
                    }
                    _ => {
                        for i in 0..3 {
                            for j in 0..3 {
                                // inv_ij = cofactor_ji / det, cofactors in
                                // cyclic (sign-free) form
                                let (a, b) = ((j + 1) % 3, (j + 2) % 3);
                                let (c, d) = ((i + 1) % 3, (i + 2) % 3);
                                out.set(i, j, (g(a, c) * g(b, d) - g(a, d) * g(b, c)) / det);
                            }
                        }
                    }
                }
                Some(out)
            }

            /// Solve A x = b.
            #[must_use]
            pub fn solve(&self, b: &$vec) -> Option<$vec> {
                Some(self.inverse()?.mul_vec(b))
            }

            /// Eigenvalues (ascending) of the symmetric part.
            #[must_use]
            pub fn sym_eigenvalues(&self) -> $vec {
                let (vals, _) = jacobi_eigen(self.n, &self.to_buf());
                $vec::from_slice(&vals[..self.n])
            }

            /// Eigendecomposition of the symmetric part: ascending eigenvalues
            /// and the matrix whose columns are the matching eigenvectors.
            #[must_use]
            pub fn sym_eigen(&self) -> ($vec, Self) {
                let (vals, vecs) = jacobi_eigen(self.n, &self.to_buf());
                let mut m = Self::zeros(self.n);
                for i in 0..self.n {
                    for j in 0..self.n {
                        m.set(i, j, vecs[i * MAX_VECH + j]);
                    }
                }
                ($vec::from_slice(&vals[..self.n]), m)
            }

            /// Spectral condition number |lambda|_max / |lambda|_min of the
            /// symmetric part; infinite when the smallest magnitude is zero.
            #[must_use]
            pub fn sym_condition(&self) -> f64 {
                let vals = self.sym_eigenvalues();
                let mut lo = f64::INFINITY;
                let mut hi = 0.0f64;
                for i in 0..self.n {
                    let a = libm::fabs(vals[i]);
                    lo = lo.min(a);
                    hi = hi.max(a);
                }
                if lo == 0.0 {
                    f64::INFINITY
                } else {
                    hi / lo
                }
            }

            /// Lower-triangular Cholesky factor; `None` unless positive definite.
            #[must_use]
            pub fn cholesky(&self) -> Option<Self> {
                let buf = cholesky(self.n, &self.to_buf())?;
                let mut out = Self::zeros(self.n);
                for i in 0..self.n {
                    for j in 0..self.n {
                        out.set(i, j, buf[i * MAX_VECH + j]);
                    }
                }
                Some(out)
            }

            /// Symmetric square root with eigenvalue clipping.
            ///
            /// Eigenvalues within `-clip_tol * trace` of zero are clipped to 0;
            /// anything more negative is an error. The result L satisfies
            /// L L^T = A (after clipping) and works for singular A, so it serves
            /// as the factor for multivariate normal sampling.
            ///
            /// # Errors
            /// [`Error::NotPositiveSemidefinite`] when an eigenvalue is more
            /// negative than the clipping band allows.
            pub fn psd_sqrt(&self, clip_tol: f64) -> Result<Self> {
                let (vals, vecs) = self.sym_eigen();
                let band = clip_tol * libm::fabs(self.trace()).max(f64::MIN_POSITIVE);
                let mut out = Self::zeros(self.n);
                for k in 0..self.n {
                    let lam = vals[k];
                    if lam < -band {
                        return Err(Error::NotPositiveSemidefinite { min_eig: lam });
                    }
                    let root = libm::sqrt(lam.max(0.0));
                    for i in 0..self.n {
                        for j in 0..self.n {
                            let v = out.get(i, j) + root * vecs.get(i, k) * vecs.get(j, k);
                            out.set(i, j, v);
                        }
                    }
                }
                Ok(out)
            }

            fn to_buf(self) -> [f64; MAX_VECH * MAX_VECH] {
                let mut buf = [0.0; MAX_VECH * MAX_VECH];
                for i in 0..self.n {
                    for j in 0..self.n {
                        buf[i * MAX_VECH + j] = self.get(i, j);
                    }
                }
                buf
            }
        }

        #[cfg(feature = "serde")]
        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
                use serde::ser::SerializeSeq;
                let mut seq = s.serialize_seq(Some(self.n))?;
                for i in 0..self.n {
                    let row: alloc::vec::Vec<f64> = (0..self.n).map(|j| self.get(i, j)).collect();
                    seq.serialize_element(&row)?;
                }
                seq.end()
            }
        }

        #[cfg(feature = "serde")]
        impl<'de> serde::Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
                let rows = alloc::vec::Vec::<alloc::vec::Vec<f64>>::deserialize(d)?;
                let n = rows.len();
                if n == 0 || n > $cap || rows.iter().any(|r| r.len() != n) {
                    return Err(serde::de::Error::custom("expected a square matrix"));
                }
                let mut out = Self::zeros(n);
                for (i, row) in rows.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        out.set(i, j, v);
                    }
                }
                Ok(out)
            }
        }
    };
}

small_vec!(
    /// Spatial vector of dimension 1 or 2 (locations, gradients).
    DVec,
    MAX_DIM
);
small_vec!(
    /// Half-vectorization vector of dimension 1 or 3 (vech of a Hessian).
    HVec,
    MAX_VECH
);
small_mat!(
    /// Spatial matrix (Hessians, gradient covariances, region shapes).
    DMat,
    DVec,
    MAX_DIM
);
small_mat!(
    /// Half-vectorization-space matrix (covariance of vech of a Hessian).
    HMat,
    HVec,
    MAX_VECH
);

macro_rules! impl_outer {
    ($vec:ident, $mat:ident) => {
        impl $vec {
            /// Outer product v w^T.
            #[must_use]
            pub fn outer(&self, other: &$vec) -> $mat {
                debug_assert_eq!(self.len(), other.len());
                let mut out = $mat::zeros(self.len());
                for i in 0..self.len() {
                    for j in 0..other.len() {
                        out.set(i, j, self[i] * other[j]);
                    }
                }
                out
            }
        }
    };
}

impl_outer!(DVec, DMat);
impl_outer!(HVec, HMat);

/// Cyclic Jacobi eigendecomposition of the symmetric part of an n x n matrix
/// (n <= 3) stored row-major with stride `MAX_VECH`. Returns eigenvalues in
/// ascending order and eigenvectors as columns of the second buffer.
fn jacobi_eigen(n: usize, a: &[f64; MAX_VECH * MAX_VECH]) -> ([f64; MAX_VECH], [f64; MAX_VECH * MAX_VECH]) {
    let mut m = [0.0; MAX_VECH * MAX_VECH];
    for i in 0..n {
        for j in 0..n {
            m[i * MAX_VECH + j] = 0.5 * (a[i * MAX_VECH + j] + a[j * MAX_VECH + i]);
        }
    }
    let mut v = [0.0; MAX_VECH * MAX_VECH];
    for i in 0..n {
        v[i * MAX_VECH + i] = 1.0;
    }
    let scale = {
        let mut s = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                s = s.max(libm::fabs(m[i * MAX_VECH + j]));
            }
        }
        s.max(f64::MIN_POSITIVE)
    };
    for _sweep in 0..30 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(libm::fabs(m[i * MAX_VECH + j]));
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * MAX_VECH + q];
                if libm::fabs(apq) <= 1e-300 {
                    continue;
                }
                let app = m[p * MAX_VECH + p];
                let aqq = m[q * MAX_VECH + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    1.0 / (theta - libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * MAX_VECH + p];
                    let akq = m[k * MAX_VECH + q];
                    m[k * MAX_VECH + p] = c * akp - s * akq;
                    m[k * MAX_VECH + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * MAX_VECH + k];
                    let aqk = m[q * MAX_VECH + k];
                    m[p * MAX_VECH + k] = c * apk - s * aqk;
                    m[q * MAX_VECH + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * MAX_VECH + p];
                    let vkq = v[k * MAX_VECH + q];
                    v[k * MAX_VECH + p] = c * vkp - s * vkq;
                    v[k * MAX_VECH + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut vals = [0.0; MAX_VECH];
    for i in 0..n {
        vals[i] = m[i * MAX_VECH + i];
    }
    // selection sort ascending, swapping eigenvector columns along
    for i in 0..n {
        let mut best = i;
        for j in (i + 1)..n {
            if vals[j] < vals[best] {
                best = j;
            }
        }
        if best != i {
            vals.swap(i, best);
            for k in 0..n {
                v.swap(k * MAX_VECH + i, k * MAX_VECH + best);
            }
        }
    }
    (vals, v)
}

/// Lower-triangular Cholesky of an n x n matrix (n <= 3) stored row-major with
/// stride `MAX_VECH`; `None` unless strictly positive definite.
fn cholesky(n: usize, a: &[f64; MAX_VECH * MAX_VECH]) -> Option<[f64; MAX_VECH * MAX_VECH]> {
    let mut l = [0.0; MAX_VECH * MAX_VECH];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a[i * MAX_VECH + j];
            for k in 0..j {
                acc -= l[i * MAX_VECH + k] * l[j * MAX_VECH + k];
            }
            if i == j {
                if acc <= 0.0 {
                    return None;
                }
                l[i * MAX_VECH + i] = libm::sqrt(acc);
            } else {
                l[i * MAX_VECH + j] = acc / l[j * MAX_VECH + j];
            }
        }
    }
    Some(l)
}
