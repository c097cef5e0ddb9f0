use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::{Error, Point, Result};

/// Seedable generator used for every particle stream. ChaCha output is
/// specified bit-for-bit, so seeded runs reproduce across platforms.
pub type StreamRng = rand_chacha::ChaCha8Rng;

pub type TestFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Pointwise (possibly unnormalized) density.
pub trait Density: Send + Sync {
    fn density(&self, x: &[f64]) -> f64;
}

/// A proposal: a density that can also be sampled.
pub trait Sampler: Density {
    fn sample(&self, rng: &mut dyn RngCore) -> Point;
}

impl<F> Density for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn density(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Independently computed value of the target expectation, with the method
/// that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub value: f64,
    pub method: String,
}

/// A drawn sample with its unnormalized weight `q̃(x)/π(x)` and `φ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub point: Point,
    pub weight: f64,
    pub phi: f64,
}

/// Target `q̃`, proposal `π` and test function `φ`.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    dim: usize,
    target: Arc<dyn Density>,
    proposal: Arc<dyn Sampler>,
    test_fn: TestFn,
    reference: Option<Reference>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("reference", &self.reference)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        target: Arc<dyn Density>,
        proposal: Arc<dyn Sampler>,
        test_fn: TestFn,
    ) -> Self {
        ProblemSpec {
            name: name.into(),
            dim,
            target,
            proposal,
            test_fn,
            reference: None,
        }
    }

    pub fn with_reference(mut self, value: f64, method: impl Into<String>) -> Self {
        self.reference = Some(Reference {
            value,
            method: method.into(),
        });
        self
    }

    pub fn with_test_fn(mut self, test_fn: TestFn) -> Self {
        self.test_fn = test_fn;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reference(&self) -> Option<&Reference> {
        self.reference.as_ref()
    }

    pub fn target_unnorm(&self, x: &[f64]) -> f64 {
        self.target.density(x)
    }

    pub fn proposal_density(&self, x: &[f64]) -> f64 {
        self.proposal.density(x)
    }

    pub fn sample_proposal(&self, rng: &mut dyn RngCore) -> Point {
        self.proposal.sample(rng)
    }

    pub fn test_fn(&self, x: &[f64]) -> f64 {
        (self.test_fn)(x)
    }

    pub fn test_fn_handle(&self) -> TestFn {
        Arc::clone(&self.test_fn)
    }

    /// `g(x) = q̃(x) / π(x)`.
    pub fn weight(&self, x: &[f64]) -> Result<f64> {
        let q = self.target.density(x);
        let p = self.proposal.density(x);
        if !(p > 0.0) {
            return Err(Error::AbsoluteContinuity { point: x.to_vec() });
        }
        let g = q / p;
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::NonFinite(format!("importance weight {g} at {x:?}")));
        }
        Ok(g)
    }

    /// Draws `x ~ π` and evaluates its weight and `φ(x)`.
    pub fn draw(&self, rng: &mut dyn RngCore) -> Result<Particle> {
        let point = self.proposal.sample(rng);
        let weight = self.weight(&point)?;
        let phi = (self.test_fn)(&point);
        if !phi.is_finite() {
            return Err(Error::NonFinite(format!("test function {phi} at {point:?}")));
        }
        Ok(Particle { point, weight, phi })
    }
}
