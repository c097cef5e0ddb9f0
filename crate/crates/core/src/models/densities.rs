use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::sampling::{Density, Sampler};
use crate::{Error, Point, Result};

/// Multivariate normal `N(mean, covariance)` with SPD covariance.
#[derive(Debug, Clone)]
pub struct GaussianDensity {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl GaussianDensity {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let p = mean.len();
        if p == 0 || covariance.shape() != (p, p) {
            return Err(Error::InvalidArgument(format!(
                "mean of length {p} with covariance {:?}",
                covariance.shape()
            )));
        }
        if (&covariance - covariance.transpose()).amax() > 1e-12 * covariance.amax() {
            return Err(Error::InvalidArgument("covariance is not symmetric".into()));
        }
        let chol = Cholesky::new(covariance)
            .ok_or_else(|| Error::InvalidArgument("covariance is not positive definite".into()))?;
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let log_norm = -0.5 * (p as f64 * (2.0 * PI).ln() + log_det);
        Ok(GaussianDensity {
            mean: DVector::from_vec(mean),
            chol,
            log_norm,
        })
    }

    pub fn isotropic(mean: Vec<f64>, sd: f64) -> Result<Self> {
        let p = mean.len();
        Self::new(mean, DMatrix::identity(p, p) * (sd * sd))
    }

    pub fn diagonal(mean: Vec<f64>, variances: &[f64]) -> Result<Self> {
        Self::new(mean, DMatrix::from_diagonal(&DVector::from_column_slice(variances)))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(x) - &self.mean;
        let z = self
            .chol
            .l()
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        self.log_norm - 0.5 * z.norm_squared()
    }

    pub fn density_at(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }
}

impl Density for GaussianDensity {
    fn density(&self, x: &[f64]) -> f64 {
        self.density_at(x)
    }
}

impl Sampler for GaussianDensity {
    fn sample(&self, rng: &mut dyn RngCore) -> Point {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.mean + self.chol.l() * z).as_slice().to_vec()
    }
}

/// Uniform density on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformDensity {
    lo: f64,
    hi: f64,
}

impl UniformDensity {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(UniformDensity { lo, hi })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

impl Density for UniformDensity {
    fn density(&self, x: &[f64]) -> f64 {
        if x[0] >= self.lo && x[0] <= self.hi {
            1.0 / (self.hi - self.lo)
        } else {
            0.0
        }
    }
}

impl Sampler for UniformDensity {
    fn sample(&self, rng: &mut dyn RngCore) -> Point {
        vec![rng.random_range(self.lo..self.hi)]
    }
}
