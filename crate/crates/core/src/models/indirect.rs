use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::densities::UniformDensity;
use super::quadrature::integrate;
use crate::sampling::ProblemSpec;

/// Bayesian posterior over a scalar location with Gaussian likelihood and
/// Gaussian prior, sampled from `U[3, 7]`.
///
/// Observations follow `y_k = b + sin(2π x_true) + η_k`, `η_k ~ N(0, σ²)`.
/// The likelihood is centered at `x` itself:
/// `(2πσ₁²)^{-K/2} exp(-Σ_k (y_k − x)² / 2σ₁²)`, and the prior is
/// `exp(-x² / 2σ₂²) / (2πσ₂²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndirectSpec {
    pub observations: Vec<f64>,
    pub offset: f64,
    pub obs_sd: f64,
    pub lik_sd: f64,
    pub prior_sd: f64,
    pub true_x: f64,
    pub support: (f64, f64),
}

impl IndirectSpec {
    pub const K: usize = 10;

    pub fn generate(seed: u64) -> Self {
        let offset = 5.0;
        let obs_sd = 0.1;
        let true_x = 5.0;
        let mut rng = super::data_rng(seed);
        let observations = (0..Self::K)
            .map(|_| {
                offset
                    + (2.0 * PI * true_x).sin()
                    + obs_sd * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        IndirectSpec {
            observations,
            offset,
            obs_sd,
            lik_sd: 0.4,
            prior_sd: 1.6,
            true_x,
            support: (3.0, 7.0),
        }
    }

    pub fn likelihood(&self, x: f64) -> f64 {
        let k = self.observations.len() as f64;
        let s2 = self.lik_sd * self.lik_sd;
        let sq: f64 = self.observations.iter().map(|y| (y - x) * (y - x)).sum();
        (2.0 * PI * s2).powf(-k / 2.0) * (-sq / (2.0 * s2)).exp()
    }

    pub fn prior(&self, x: f64) -> f64 {
        let s2 = self.prior_sd * self.prior_sd;
        (-x * x / (2.0 * s2)).exp() / (2.0 * PI * s2)
    }

    pub fn target_unnorm(&self, x: f64) -> f64 {
        self.likelihood(x) * self.prior(x)
    }

    /// Posterior mean restricted to the proposal support, by quadrature.
    pub fn posterior_mean(&self) -> f64 {
        let (lo, hi) = self.support;
        let num = integrate(|x| x * self.target_unnorm(x), lo, hi, 400, 1e-16);
        let den = integrate(|x| self.target_unnorm(x), lo, hi, 400, 1e-16);
        num / den
    }

    pub fn problem(&self) -> ProblemSpec {
        let this = self.clone();
        let (lo, hi) = self.support;
        ProblemSpec::new(
            "indirect",
            1,
            Arc::new(move |x: &[f64]| this.target_unnorm(x[0])),
            Arc::new(UniformDensity::new(lo, hi).expect("valid support")),
            Arc::new(|x: &[f64]| x[0]),
        )
        .with_reference(
            self.posterior_mean(),
            "double-exponential quadrature of x q(x) / q(x) on [3,7]",
        )
    }
}

pub fn indirect_is_spec(seed: u64) -> ProblemSpec {
    IndirectSpec::generate(seed).problem()
}
