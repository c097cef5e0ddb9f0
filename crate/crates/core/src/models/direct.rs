use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use super::densities::GaussianDensity;
use super::quadrature::integrate;
use crate::sampling::{Density, ProblemSpec, TestFn};
use crate::{Error, Result};

/// `φ(x) = 2 sin(π / 1.5x)`; evaluated as written, so `φ(0)` is non-finite.
pub fn direct_phi(x: &[f64]) -> f64 {
    2.0 * (PI / (1.5 * x[0])).sin()
}

fn target() -> GaussianDensity {
    GaussianDensity::isotropic(vec![1.0], 1.0).expect("valid")
}

/// `E_q[φ]` for `q = N(1, 1)`.
///
/// The oscillation of `φ` near zero is handled by integrating `|x| < 1` in
/// `t = 1/|x|`, where the two half-lines combine into an integrand decaying
/// like `t⁻³`.
pub fn direct_reference() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        let q = target();
        let f = |x: f64| direct_phi(&[x]) * q.density(&[x]);
        let outer = integrate(f, -10.0, -1.0, 18, 1e-13) + integrate(f, 1.0, 12.0, 22, 1e-13);
        let inner = |t: f64| (f(1.0 / t) + f(-1.0 / t)) / (t * t);
        // φ(±1/t) has period 3 in t; the tail beyond t = 3001 is below 1e-10
        let core = integrate(inner, 1.0, 3001.0, 2000, 1e-12);
        outer + core
    })
}

pub const DIRECT_REFERENCE_METHOD: &str =
    "double-exponential quadrature on [-10,12], |x|<1 via t=1/|x| up to t=3001";

/// Target `q = N(1, 1)`, proposal `π = N(1, 2)`, `φ(x) = 2 sin(π / 1.5x)`.
pub fn direct_is_spec() -> ProblemSpec {
    let proposal = GaussianDensity::isotropic(vec![1.0], 2f64.sqrt()).expect("valid");
    ProblemSpec::new(
        "direct",
        1,
        Arc::new(target()),
        Arc::new(proposal),
        Arc::new(direct_phi),
    )
    .with_reference(direct_reference(), DIRECT_REFERENCE_METHOD)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CustomPhi {
    Identity,
    Square,
    Sin,
}

impl CustomPhi {
    fn test_fn(self) -> TestFn {
        match self {
            CustomPhi::Identity => Arc::new(|x: &[f64]| x[0]),
            CustomPhi::Square => Arc::new(|x: &[f64]| x[0] * x[0]),
            CustomPhi::Sin => Arc::new(|x: &[f64]| x[0].sin()),
        }
    }
}

impl std::str::FromStr for CustomPhi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "x" => Ok(CustomPhi::Identity),
            "square" | "x2" => Ok(CustomPhi::Square),
            "sin" => Ok(CustomPhi::Sin),
            other => Err(Error::InvalidArgument(format!(
                "unknown test function {other:?} (identity, square, sin)"
            ))),
        }
    }
}

/// One-dimensional Gaussian target and Gaussian proposal.
pub fn custom_gaussian_spec(
    target_mean: f64,
    target_sd: f64,
    proposal_mean: f64,
    proposal_sd: f64,
    phi: CustomPhi,
) -> Result<ProblemSpec> {
    let q = GaussianDensity::isotropic(vec![target_mean], target_sd)?;
    let proposal = GaussianDensity::isotropic(vec![proposal_mean], proposal_sd)?;
    let test_fn = phi.test_fn();
    let reference = {
        let (lo, hi) = (target_mean - 12.0 * target_sd, target_mean + 12.0 * target_sd);
        integrate(|x| test_fn(&[x]) * q.density(&[x]), lo, hi, 48, 1e-12)
    };
    Ok(ProblemSpec::new("custom", 1, Arc::new(q), Arc::new(proposal), test_fn)
        .with_reference(reference, "double-exponential quadrature on mean ± 12 sd"))
}
