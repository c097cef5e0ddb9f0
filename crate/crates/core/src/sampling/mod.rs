//! Streaming self-normalized importance sampling, uncompressed and compressed.

mod problem;
mod schedule;
mod state;

pub use problem::{Density, Particle, ProblemSpec, Reference, Sampler, StreamRng, TestFn};
pub use schedule::BudgetSchedule;
pub use state::{Diagnostics, EstimatorState, StepRecord};

use crate::{Error, Point, Result};

/// Weighted Dirac measure `Σ_u g(u) δ_{d_u}` with its running normalizer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParticleMeasure {
    atoms: Vec<Point>,
    weights: Vec<f64>,
    normalizer: f64,
}

impl ParticleMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_parts(atoms: Vec<Point>, weights: Vec<f64>, normalizer: f64) -> Self {
        assert_eq!(atoms.len(), weights.len(), "atoms and weights must align");
        ParticleMeasure {
            atoms,
            weights,
            normalizer,
        }
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Running `Σ g`: historical for the uncompressed stream, current for the
    /// compressed one.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `Σ_u w̄(u) φ(d_u)` with `w̄ = g / Σ g` over the current atoms.
    pub fn estimate<F>(&self, phi: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        let sum: f64 = self.weights.iter().sum();
        check_normalizer(sum)?;
        let weighted: f64 = self
            .atoms
            .iter()
            .zip(&self.weights)
            .map(|(x, g)| g * phi(x))
            .sum();
        let out = weighted / sum;
        if !out.is_finite() {
            return Err(Error::NonFinite(format!("estimate {out}")));
        }
        Ok(out)
    }
}

pub(crate) fn check_normalizer(sum: f64) -> Result<()> {
    if !(sum.abs() >= 1e-300) || !sum.is_finite() {
        return Err(Error::DegenerateNormalizer { sum });
    }
    Ok(())
}

/// Plug-in estimate of `π(g²) / π(g)²`, i.e. `n Σg² / (Σg)²` (= n / ESS).
pub fn estimate_rho(weights: &[f64]) -> Result<f64> {
    if weights.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 weights, got {}",
            weights.len()
        )));
    }
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|g| g * g).sum();
    rho_from_sums(weights.len(), sum, sum_sq)
}

pub(crate) fn rho_from_sums(n: usize, sum: f64, sum_sq: f64) -> Result<f64> {
    check_normalizer(sum)?;
    Ok(n as f64 * sum_sq / (sum * sum))
}
