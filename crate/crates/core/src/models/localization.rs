use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::densities::GaussianDensity;
use crate::sampling::{Density, ProblemSpec};
use crate::{Error, Result};

pub const SENSORS: [[f64; 2]; 6] = [
    [1.0, -8.0],
    [8.0, 10.0],
    [-15.0, -17.0],
    [-8.0, 1.0],
    [10.0, 0.0],
    [0.0, 10.0],
];

pub const TRUE_LOCATION: [f64; 2] = [3.5, 3.5];

const MIN_RANGE: f64 = 1e-12;

static CLAMPED_RANGES: AtomicU64 = AtomicU64::new(0);

/// Number of range evaluations so far that hit a sensor position and were
/// clamped.
pub fn clamped_range_count() -> u64 {
    CLAMPED_RANGES.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    E,
    Ten,
}

impl LogBase {
    pub fn log(self, r: f64) -> f64 {
        match self {
            LogBase::E => r.ln(),
            LogBase::Ten => r.log10(),
        }
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" | "E" | "ln" => Ok(LogBase::E),
            "10" => Ok(LogBase::Ten),
            _ => Err(Error::InvalidArgument(format!("log base must be e or 10, got {s:?}"))),
        }
    }
}

/// Range-only localization of a static 2-D source from six sensors.
///
/// Each sensor reports `y = −20 log ‖x − h_i‖ + η` with `η ~ N(0, 1)`. The
/// prior `N(TRUE_LOCATION, I)` doubles as the proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationSpec {
    pub sensors: Vec<[f64; 2]>,
    /// `measurements[i]` holds the readings of sensor `i`.
    pub measurements: Vec<Vec<f64>>,
    pub noise_sd: f64,
    pub prior_mean: [f64; 2],
    pub log_base: LogBase,
}

impl LocalizationSpec {
    pub fn generate(seed: u64, per_sensor: usize, log_base: LogBase) -> Result<Self> {
        if per_sensor == 0 {
            return Err(Error::InvalidArgument("need at least one measurement per sensor".into()));
        }
        let mut rng = super::data_rng(seed);
        let noise_sd = 1.0;
        let measurements = SENSORS
            .iter()
            .map(|h| {
                let clean = range_model(&TRUE_LOCATION, h, log_base);
                (0..per_sensor)
                    .map(|_| clean + noise_sd * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        Ok(LocalizationSpec {
            sensors: SENSORS.to_vec(),
            measurements,
            noise_sd,
            prior_mean: TRUE_LOCATION,
            log_base,
        })
    }

    pub fn prior(&self) -> GaussianDensity {
        GaussianDensity::isotropic(self.prior_mean.to_vec(), 1.0).expect("valid")
    }

    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        let s2 = self.noise_sd * self.noise_sd;
        let log_norm = -0.5 * (2.0 * std::f64::consts::PI * s2).ln();
        let mut acc = 0.0;
        for (h, ys) in self.sensors.iter().zip(&self.measurements) {
            let pred = range_model(x, h, self.log_base);
            for y in ys {
                let r = y - pred;
                acc += log_norm - r * r / (2.0 * s2);
            }
        }
        acc
    }

    pub fn likelihood(&self, x: &[f64]) -> f64 {
        self.log_likelihood(x).exp()
    }

    pub fn target_unnorm(&self, x: &[f64]) -> f64 {
        (self.log_likelihood(x) + self.prior().log_density(x)).exp()
    }

    /// Posterior mean by a midpoint rule on a 2000×2000 grid covering seven
    /// prior standard deviations around the prior mean.
    pub fn posterior_mean(&self) -> [f64; 2] {
        let n = 2000;
        let half = 7.0;
        let step = 2.0 * half / n as f64;
        let prior = self.prior();
        // shift by the max log-density to keep the sums in range
        let mut logs = Vec::with_capacity(n * n);
        let mut peak = f64::NEG_INFINITY;
        for i in 0..n {
            let x0 = self.prior_mean[0] - half + (i as f64 + 0.5) * step;
            for j in 0..n {
                let x1 = self.prior_mean[1] - half + (j as f64 + 0.5) * step;
                let x = [x0, x1];
                let l = self.log_likelihood(&x) + prior.log_density(&x);
                peak = peak.max(l);
                logs.push(l);
            }
        }
        let (mut z, mut m0, mut m1) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let x0 = self.prior_mean[0] - half + (i as f64 + 0.5) * step;
            for j in 0..n {
                let x1 = self.prior_mean[1] - half + (j as f64 + 0.5) * step;
                let w = (logs[i * n + j] - peak).exp();
                z += w;
                m0 += w * x0;
                m1 += w * x1;
            }
        }
        [m0 / z, m1 / z]
    }

    /// IS problem estimating coordinate `coord` of the posterior mean.
    pub fn problem(&self, coord: usize) -> Result<ProblemSpec> {
        if coord > 1 {
            return Err(Error::InvalidArgument(format!("coordinate {coord} out of range for 2-D")));
        }
        let this = self.clone();
        let target = move |x: &[f64]| this.target_unnorm(x);
        let reference = self.posterior_mean()[coord];
        Ok(ProblemSpec::new(
            format!("localize[x{coord}]"),
            2,
            Arc::new(target) as Arc<dyn Density>,
            Arc::new(self.prior()),
            Arc::new(move |x: &[f64]| x[coord]),
        )
        .with_reference(reference, "midpoint rule, 2000x2000 grid over prior mean ± 7"))
    }
}

/// Noiseless reading `−20 log ‖x − h‖`, with the range clamped away from 0.
pub fn range_model(x: &[f64], h: &[f64; 2], base: LogBase) -> f64 {
    let r = ((x[0] - h[0]).powi(2) + (x[1] - h[1]).powi(2)).sqrt();
    let r = if r < MIN_RANGE {
        CLAMPED_RANGES.fetch_add(1, Ordering::Relaxed);
        MIN_RANGE
    } else {
        r
    };
    -20.0 * base.log(r)
}

/// First coordinate of the localization problem with one reading per sensor
/// and natural log ranges.
pub fn localization_spec(seed: u64) -> ProblemSpec {
    LocalizationSpec::generate(seed, 1, LogBase::E)
        .and_then(|s| s.problem(0))
        .expect("default localization parameters are valid")
}
