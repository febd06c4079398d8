//! Cross-subject statistic fields built from a cohort of smoothed subjects.
//!
//! Given N subject fields observed on a common design, every pointwise
//! statistic of the sample — mean, sample variance, Cohen's d, the one-sample
//! t statistic — is itself a twice-differentiable field whose jet follows
//! from the subject jets by exact differentiation of the defining formula.
//! These derived fields implement [`ScalarField`], so peak finding and
//! confidence-region construction apply to them unchanged.

use crate::error::{Error, Result};
use crate::field::{DomainBox, Jet, ScalarField};
use crate::grid_field::{GaussianKernel, LatticeSample, SmoothField};
use crate::linalg::{DMat, DVec};
use alloc::vec::Vec;

/// Default floor below which the cross-subject sample variance is treated as
/// degenerate.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Which statistic field a peak/region analysis targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TargetStat {
    /// Cross-subject mean field.
    Mean,
    /// Cohen's d field (mean over standard deviation).
    CohensD,
}

/// A cohort of subject fields on one common domain.
#[derive(Debug, Clone)]
pub struct FieldCohort<F> {
    subjects: Vec<F>,
}

impl<F: ScalarField> FieldCohort<F> {
    /// New cohort; needs at least two subjects agreeing on dimension, domain
    /// and grid step.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] when fewer than two subjects are supplied or
    /// the subjects disagree on their domain geometry.
    pub fn new(subjects: Vec<F>) -> Result<Self> {
        let first = match subjects.first() {
            Some(f) => f,
            None => return Err(Error::invalid("cohort needs at least two subjects")),
        };
        if subjects.len() < 2 {
            return Err(Error::invalid("cohort needs at least two subjects"));
        }
        let (dim, domain, step) = (first.dim(), first.domain(), first.grid_step());
        for f in &subjects[1..] {
            if f.dim() != dim || f.domain() != domain || f.grid_step() != step {
                return Err(Error::invalid("cohort subjects disagree on domain geometry"));
            }
        }
        Ok(Self { subjects })
    }

    /// Number of subjects N.
    #[must_use]
    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    /// Always false (constructor requires two subjects).
    #[must_use]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Subject fields.
    #[must_use]
    pub fn subjects(&self) -> &[F] {
        &self.subjects
    }

    /// Spatial dimension.
    #[must_use]
    pub fn dim(&self) -> usize {
        self.subjects[0].dim()
    }

    /// Common domain.
    #[must_use]
    pub fn domain(&self) -> DomainBox {
        self.subjects[0].domain()
    }

    /// Common grid step.
    #[must_use]
    pub fn grid_step(&self) -> f64 {
        self.subjects[0].grid_step()
    }

    /// Jets of every subject at `s`.
    ///
    /// # Errors
    /// Propagates the first subject evaluation failure.
    pub fn subject_jets(&self, s: &DVec) -> Result<Vec<Jet>> {
        self.subjects.iter().map(|f| f.jet(s)).collect()
    }

    /// Cross-subject mean and sample-variance jets at `s`.
    ///
    /// # Errors
    /// Propagates subject evaluation failures.
    pub fn moments(&self, s: &DVec) -> Result<CohortMoments> {
        let jets = self.subject_jets(s)?;
        Ok(CohortMoments::from_jets(&jets))
    }

    /// Mean-field view.
    #[must_use]
    pub fn mean_field(&self) -> MeanField<'_, F> {
        MeanField { cohort: self }
    }

    /// Sample-variance-field view.
    #[must_use]
    pub fn variance_field(&self) -> VarianceField<'_, F> {
        VarianceField { cohort: self }
    }

    /// Cohen's d field view.
    #[must_use]
    pub fn cohens_d_field(&self) -> CohensDField<'_, F> {
        CohensDField { cohort: self }
    }

    /// One-sample t-statistic field view (`sqrt(N)` times Cohen's d).
    #[must_use]
    pub fn t_stat_field(&self) -> TStatField<'_, F> {
        TStatField { cohort: self }
    }
}

impl FieldCohort<SmoothField> {
    /// Smooth each lattice sample with `kernel` and assemble the cohort.
    ///
    /// # Errors
    /// Propagates [`SmoothField::new`] and cohort-construction failures.
    pub fn from_samples(
        samples: Vec<LatticeSample>,
        kernel: GaussianKernel,
        standardize: bool,
    ) -> Result<Self> {
        let subjects = samples
            .into_iter()
            .map(|s| SmoothField::new(s, kernel, standardize))
            .collect::<Result<Vec<_>>>()?;
        Self::new(subjects)
    }

    /// Mean field realized as a single smoothed field over the sitewise
    /// average of the subject lattices. Smoothing is linear (and the
    /// standardizing divisor is shared), so this equals the subject-loop mean
    /// field up to rounding while costing one subject's evaluation.
    ///
    /// # Errors
    /// Propagates lattice-averaging and smoothing failures.
    pub fn pooled_mean_field(&self) -> Result<SmoothField> {
        let samples: Vec<LatticeSample> =
            self.subjects.iter().map(|f| f.sample().clone()).collect();
        let avg = LatticeSample::average(&samples)?;
        SmoothField::new(avg, *self.subjects[0].kernel(), self.subjects[0].is_standardized())
    }
}

/// Jets of the cross-subject mean and sample variance at one point.
#[derive(Debug, Clone, Copy)]
pub struct CohortMoments {
    n: usize,
    mean: Jet,
    variance: Jet,
}

impl CohortMoments {
    /// Compute moments from per-subject jets (at least two).
    #[must_use]
    pub fn from_jets(jets: &[Jet]) -> Self {
        let n = jets.len();
        assert!(n >= 2, "moments need at least two subjects");
        let dim = jets[0].gradient.len();
        let inv_n = 1.0 / n as f64;
        let mut mean = Jet::zeros(dim);
        for j in jets {
            mean.value += j.value;
            mean.gradient = mean.gradient.add(&j.gradient);
            mean.hessian = mean.hessian.add(&j.hessian);
        }
        mean.value *= inv_n;
        mean.gradient = mean.gradient.scale(inv_n);
        mean.hessian = mean.hessian.scale(inv_n);

        // sample variance v = sum (Y_n - mu)^2 / (N - 1) and its jet:
        //   grad v = 2 sum (Y_n - mu)(grad Y_n - grad mu) / (N - 1)
        //   hess v = 2 sum [(grad Y_n - grad mu)(grad Y_n - grad mu)^T
        //                   + (Y_n - mu)(hess Y_n - hess mu)] / (N - 1)
        let mut v = 0.0;
        let mut gv = DVec::zeros(dim);
        let mut hv = DMat::zeros(dim);
        for j in jets {
            let dy = j.value - mean.value;
            let dg = j.gradient.sub(&mean.gradient);
            let dh = j.hessian.sub(&mean.hessian);
            v += dy * dy;
            gv = gv.add(&dg.scale(2.0 * dy));
            hv = hv.add(&dg.outer(&dg).scale(2.0)).add(&dh.scale(2.0 * dy));
        }
        let inv_nm1 = 1.0 / (n as f64 - 1.0);
        let variance = Jet::new(v * inv_nm1, gv.scale(inv_nm1), hv.scale(inv_nm1));
        Self { n, mean, variance }
    }

    /// Number of subjects.
    #[must_use]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mean jet.
    #[must_use]
    pub fn mean(&self) -> &Jet {
        &self.mean
    }

    /// Sample-variance jet.
    #[must_use]
    pub fn variance(&self) -> &Jet {
        &self.variance
    }

    /// Jet of Cohen's d, `mean / sqrt(variance)`.
    ///
    /// # Errors
    /// [`Error::DegenerateVariance`] when the variance is at or below the
    /// floor.
    pub fn cohens_d(&self) -> Result<Jet> {
        let v = self.variance.value;
        if !(v > VARIANCE_FLOOR) {
            return Err(Error::DegenerateVariance { floor: VARIANCE_FLOOR });
        }
        let m = self.mean.value;
        let (gm, gv) = (self.mean.gradient, self.variance.gradient);
        let (hm, hv) = (self.mean.hessian, self.variance.hessian);
        let sqrt_v = libm::sqrt(v);
        let v32 = v * sqrt_v;
        let v52 = v32 * v;
        let value = m / sqrt_v;
        // grad d = grad m / v^(1/2) - m grad v / (2 v^(3/2))
        let g = gm.scale(1.0 / sqrt_v).sub(&gv.scale(m / (2.0 * v32)));
        // hess d = hess m / v^(1/2)
        //   - (grad m grad v^T + grad v grad m^T) / (2 v^(3/2))
        //   - m hess v / (2 v^(3/2)) + 3 m grad v grad v^T / (4 v^(5/2))
        let h = hm
            .scale(1.0 / sqrt_v)
            .sub(&gm.outer(&gv).add(&gv.outer(&gm)).scale(0.5 / v32))
            .sub(&hv.scale(m / (2.0 * v32)))
            .add(&gv.outer(&gv).scale(3.0 * m / (4.0 * v52)));
        Ok(Jet::new(value, g, h))
    }

    /// Jet of the one-sample t statistic, `sqrt(N)` times Cohen's d.
    ///
    /// # Errors
    /// As for [`CohortMoments::cohens_d`].
    pub fn t_stat(&self) -> Result<Jet> {
        let d = self.cohens_d()?;
        let root_n = libm::sqrt(self.n as f64);
        Ok(Jet::new(d.value * root_n, d.gradient.scale(root_n), d.hessian.scale(root_n)))
    }
}

macro_rules! cohort_view {
    ($(#[$doc:meta])* $name:ident, $eval:expr) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy)]
        pub struct $name<'a, F> {
            cohort: &'a FieldCohort<F>,
        }

        impl<'a, F: ScalarField> ScalarField for $name<'a, F> {
            fn dim(&self) -> usize {
                self.cohort.dim()
            }
            fn domain(&self) -> DomainBox {
                self.cohort.domain()
            }
            fn grid_step(&self) -> f64 {
                self.cohort.grid_step()
            }
            fn jet(&self, s: &DVec) -> Result<Jet> {
                let moments = self.cohort.moments(s)?;
                let eval: fn(&CohortMoments) -> Result<Jet> = $eval;
                eval(&moments)
            }
        }
    };
}

cohort_view!(
    /// Cross-subject mean as a field.
    MeanField,
    |m| Ok(*m.mean())
);
cohort_view!(
    /// Cross-subject sample variance as a field.
    VarianceField,
    |m| Ok(*m.variance())
);
cohort_view!(
    /// Cohen's d (mean over standard deviation) as a field.
    CohensDField,
    CohortMoments::cohens_d
);
cohort_view!(
    /// One-sample t statistic as a field.
    TStatField,
    CohortMoments::t_stat
);
