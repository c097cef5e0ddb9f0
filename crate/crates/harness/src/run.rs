use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ckis_core::compression::CONTRACT_SLACK;
use ckis_core::models::{
    custom_gaussian_spec, direct_is_spec, indirect_is_spec, LocalizationSpec,
};
use ckis_core::sampling::{Reference, StreamRng};
use ckis_core::{Error, EstimatorState, Kernel, ProblemSpec};
use rand::SeedableRng;

use crate::config::{Problem, RunConfig};
use crate::error::{HarnessError, Result};

pub const CSV_HEADER: [&str; 9] = [
    "n",
    "estimate_compressed",
    "estimate_uncompressed",
    "abs_diff",
    "model_order",
    "epsilon_n",
    "achieved_mmd",
    "cumulative_budget",
    "rho_hat",
];

/// One CSV line. The uncompressed columns are empty unless the run pairs
/// both estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub estimate_compressed: f64,
    pub estimate_uncompressed: Option<f64>,
    pub abs_diff: Option<f64>,
    pub model_order: usize,
    pub epsilon_n: f64,
    pub achieved_mmd: f64,
    pub cumulative_budget: f64,
    pub rho_hat: f64,
}

impl TraceRow {
    fn fields(&self) -> [String; 9] {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        [
            self.n.to_string(),
            fmt_f64(self.estimate_compressed),
            opt(self.estimate_uncompressed),
            opt(self.abs_diff),
            self.model_order.to_string(),
            fmt_f64(self.epsilon_n),
            fmt_f64(self.achieved_mmd),
            fmt_f64(self.cumulative_budget),
            fmt_f64(self.rho_hat),
        ]
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub rows: Vec<TraceRow>,
    pub reference: Option<Reference>,
    pub elapsed: Duration,
    /// Set when the stream stopped early; `rows` holds the completed steps.
    pub failure: Option<Error>,
}

impl RunOutcome {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn final_error(&self) -> Option<f64> {
        Some((self.last()?.estimate_compressed - self.reference.as_ref()?.value).abs())
    }

    pub fn final_error_uncompressed(&self) -> Option<f64> {
        Some((self.last()?.estimate_uncompressed? - self.reference.as_ref()?.value).abs())
    }

    pub fn manifest(&self) -> String {
        let mut pairs = self.config.to_pairs();
        let mut push = |k: &str, v: String| pairs.push((k.to_string(), v));
        if let Some(r) = &self.reference {
            push("reference_value", r.value.to_string());
            push("reference_method", r.method.clone());
        }
        push("library", "ckis-core".into());
        push("library_version", ckis_core::VERSION.into());
        push("harness_version", env!("CARGO_PKG_VERSION").into());
        push("steps_completed", self.rows.len().to_string());
        if let Some(last) = self.last() {
            push("final_estimate_compressed", last.estimate_compressed.to_string());
            if let Some(u) = last.estimate_uncompressed {
                push("final_estimate_uncompressed", u.to_string());
            }
            push("final_model_order", last.model_order.to_string());
        }
        match &self.failure {
            None => push("status", "ok".into()),
            Some(e) => {
                push("status", "failed".into());
                push("error", e.to_string());
            }
        }
        push("wall_time_s", format!("{:.6}", self.elapsed.as_secs_f64()));
        let mut out = String::new();
        for (k, v) in pairs {
            out.push_str(&k);
            out.push('=');
            out.push_str(&v.replace(['\n', '\r'], " "));
            out.push('\n');
        }
        out
    }
}

pub fn build_spec(config: &RunConfig) -> Result<ProblemSpec> {
    let spec = match &config.problem {
        Problem::Direct => direct_is_spec(),
        Problem::Indirect => indirect_is_spec(config.seed),
        Problem::Localize {
            log_base,
            per_sensor,
            coord,
        } => LocalizationSpec::generate(config.seed, *per_sensor, *log_base)
            .and_then(|s| s.problem(*coord))
            .map_err(|e| HarnessError::Config(e.to_string()))?,
        Problem::Custom {
            target_mean,
            target_sd,
            proposal_mean,
            proposal_sd,
            phi,
        } => custom_gaussian_spec(*target_mean, *target_sd, *proposal_mean, *proposal_sd, *phi)
            .map_err(|e| HarnessError::Config(e.to_string()))?,
    };
    Ok(spec)
}

/// Runs the stream in memory. Numerical failures mid-run end the stream and
/// are reported through [`RunOutcome::failure`]; bad configuration is an
/// error.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let spec = build_spec(config)?;
    let kernel = Kernel::new(config.bandwidth, spec.dim())
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut compressed = EstimatorState::compressed(kernel, config.schedule, config.seed)
        .with_batch(config.batch)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut shadow = config
        .compare_uncompressed
        .then(|| EstimatorState::uncompressed(kernel, config.seed));
    // one draw feeds both estimators
    let mut rng = StreamRng::seed_from_u64(config.seed);
    let mut rows = Vec::with_capacity(config.n);
    let mut failure = None;
    for _ in 0..config.n {
        match advance(&spec, &mut rng, &mut compressed, shadow.as_mut()) {
            Ok(row) => rows.push(row),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    Ok(RunOutcome {
        config: config.clone(),
        rows,
        reference: spec.reference().cloned(),
        elapsed: start.elapsed(),
        failure,
    })
}

fn advance(
    spec: &ProblemSpec,
    rng: &mut StreamRng,
    compressed: &mut EstimatorState,
    shadow: Option<&mut EstimatorState>,
) -> ckis_core::Result<TraceRow> {
    let particle = spec.draw(rng)?;
    let uncompressed = match shadow {
        Some(s) => {
            s.absorb(particle.clone())?;
            Some(s.current_estimate()?)
        }
        None => None,
    };
    let record = compressed.absorb(particle)?;
    if record.achieved_mmd > record.epsilon + CONTRACT_SLACK {
        return Err(Error::Contract {
            achieved: record.achieved_mmd,
            budget: record.epsilon,
        });
    }
    let estimate = compressed.current_estimate()?;
    let row = TraceRow {
        n: record.n,
        estimate_compressed: estimate,
        estimate_uncompressed: uncompressed,
        abs_diff: uncompressed.map(|u| (estimate - u).abs()),
        model_order: record.model_order,
        epsilon_n: record.epsilon,
        achieved_mmd: record.achieved_mmd,
        cumulative_budget: record.cumulative_budget,
        rho_hat: compressed.rho_hat()?,
    };
    let values = [
        Some(row.estimate_compressed),
        row.estimate_uncompressed,
        row.abs_diff,
        Some(row.achieved_mmd),
        Some(row.cumulative_budget),
        Some(row.rho_hat),
    ];
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("trace row at n={}", row.n)));
    }
    Ok(row)
}

pub fn render_csv(rows: &[TraceRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    // writing into a Vec cannot fail
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in rows {
        w.write_record(row.fields()).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest")
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| HarnessError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// [`execute`] plus the CSV and manifest files when the config names an
/// output path. A mid-run failure is written to the manifest and then
/// returned as the error.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let outcome = execute(config)?;
    if let Some(path) = &config.output {
        write_file(path, &render_csv(&outcome.rows))?;
        write_file(&manifest_path(path), outcome.manifest().as_bytes())?;
    }
    match &outcome.failure {
        Some(e) => Err(HarnessError::Core(e.clone())),
        None => Ok(outcome),
    }
}
