use std::path::Path;

use ckis_core::Execution;

use crate::config::{overlay, ExperimentKind, RunConfig, Settings};
use crate::error::{HarnessError, Result};
use crate::run::{execute, fmt_f64, write_file, RunOutcome};

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub kind: ExperimentKind,
    pub base: Settings,
    /// `(key, values)`; the sweep visits the cartesian product, first key
    /// varying slowest.
    pub grid: Vec<(String, Vec<String>)>,
    pub replicates: usize,
    pub seed_base: u64,
}

/// Mean and spread over the replicates of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub values: Vec<(String, String)>,
    pub replicates: usize,
    pub mean_abs_error: f64,
    pub sd_abs_error: f64,
    pub mse: f64,
    pub mean_model_order: f64,
    pub sd_model_order: f64,
    pub mean_abs_error_uncompressed: Option<f64>,
    pub mse_uncompressed: Option<f64>,
    pub mean_abs_diff: Option<f64>,
}

/// Parses `key=v1,v2,...`.
pub fn parse_grid_arg(arg: &str) -> Result<(String, Vec<String>)> {
    let (k, vs) = arg
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("grid entry {arg:?} is not key=v1,v2,...")))?;
    let values: Vec<String> = vs.split(',').map(|v| v.trim().to_string()).collect();
    if values.iter().any(String::is_empty) {
        return Err(HarnessError::Config(format!("empty value in grid entry {arg:?}")));
    }
    Ok((k.trim().to_string(), values))
}

impl SweepPlan {
    fn points(&self) -> Vec<Vec<(String, String)>> {
        let mut points = vec![Vec::new()];
        for (key, values) in &self.grid {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push((key.clone(), v.clone()));
                        q
                    })
                })
                .collect();
        }
        points
    }

    fn config(&self, point: &[(String, String)], replicate: usize) -> Result<RunConfig> {
        let mut settings = self.base.clone();
        let overrides: Settings = point.iter().cloned().collect();
        overlay(&mut settings, &overrides);
        if point.iter().any(|(k, _)| k == "seed") {
            return Err(HarnessError::Config("seed cannot be a grid axis".into()));
        }
        settings.insert("seed".into(), (self.seed_base + replicate as u64).to_string());
        settings.remove("out");
        RunConfig::from_settings(self.kind, &settings)
    }
}

/// Runs every `(grid point, replicate)` pair under `exec`. Replicate `r`
/// uses seed `seed_base + r`.
pub fn sweep(plan: &SweepPlan, exec: Execution) -> Result<Vec<PointSummary>> {
    if plan.replicates == 0 {
        return Err(HarnessError::Config("replicates must be at least 1".into()));
    }
    let points = plan.points();
    let mut jobs = Vec::with_capacity(points.len() * plan.replicates);
    for point in &points {
        for r in 0..plan.replicates {
            jobs.push(plan.config(point, r)?);
        }
    }
    let outcomes = exec.map_indices(jobs.len(), |i| execute(&jobs[i]));
    let mut outcomes = outcomes.into_iter();
    let mut summaries = Vec::with_capacity(points.len());
    for point in points {
        let runs = outcomes
            .by_ref()
            .take(plan.replicates)
            .map(|o| {
                let o = o?;
                match o.failure {
                    Some(e) => Err(HarnessError::Core(e)),
                    None => Ok(o),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        summaries.push(summarize(point, &runs));
    }
    Ok(summaries)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn mean_sq(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
}

fn summarize(values: Vec<(String, String)>, runs: &[RunOutcome]) -> PointSummary {
    let errors: Vec<f64> = runs.iter().map(|o| o.final_error().unwrap_or(f64::NAN)).collect();
    let orders: Vec<f64> = runs
        .iter()
        .map(|o| o.last().map_or(0.0, |r| r.model_order as f64))
        .collect();
    let unc: Option<Vec<f64>> = runs.iter().map(RunOutcome::final_error_uncompressed).collect();
    let diffs: Option<Vec<f64>> = runs.iter().map(|o| o.last().and_then(|r| r.abs_diff)).collect();
    let (mean_abs_error, sd_abs_error) = mean_sd(&errors);
    let (mean_model_order, sd_model_order) = mean_sd(&orders);
    PointSummary {
        values,
        replicates: runs.len(),
        mean_abs_error,
        sd_abs_error,
        mse: mean_sq(&errors),
        mean_model_order,
        sd_model_order,
        mean_abs_error_uncompressed: unc.as_deref().map(|u| mean_sd(u).0),
        mse_uncompressed: unc.as_deref().map(mean_sq),
        mean_abs_diff: diffs.as_deref().map(|d| mean_sd(d).0),
    }
}

pub fn render_summary(kind: ExperimentKind, summaries: &[PointSummary]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let keys: Vec<String> = summaries
        .first()
        .map(|s| s.values.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut header = vec!["experiment".to_string()];
    header.extend(keys);
    header.extend(
        [
            "replicates",
            "mean_abs_error",
            "sd_abs_error",
            "mse",
            "mean_model_order",
            "sd_model_order",
            "mean_abs_error_uncompressed",
            "mse_uncompressed",
            "mean_abs_diff",
        ]
        .map(String::from),
    );
    w.write_record(&header).expect("in-memory write");
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for s in summaries {
        let mut rec = vec![kind.to_string()];
        rec.extend(s.values.iter().map(|(_, v)| v.clone()));
        rec.extend([
            s.replicates.to_string(),
            fmt_f64(s.mean_abs_error),
            fmt_f64(s.sd_abs_error),
            fmt_f64(s.mse),
            fmt_f64(s.mean_model_order),
            fmt_f64(s.sd_model_order),
            opt(s.mean_abs_error_uncompressed),
            opt(s.mse_uncompressed),
            opt(s.mean_abs_diff),
        ]);
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_summary(path: &Path, kind: ExperimentKind, summaries: &[PointSummary]) -> Result<()> {
    write_file(path, &render_summary(kind, summaries))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}
