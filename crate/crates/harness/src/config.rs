use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ckis_core::models::{CustomPhi, LogBase};
use ckis_core::BudgetSchedule;

use crate::error::{HarnessError, Result};

/// Raw `key=value` settings. Config files and command-line flags both land
/// here, with later layers overriding earlier ones.
pub type Settings = BTreeMap<String, String>;

pub const KEYS: &[&str] = &[
    "n",
    "epsilon",
    "alpha",
    "h",
    "seed",
    "batch",
    "compare-uncompressed",
    "out",
    "log-base",
    "measurements-per-sensor",
    "coord",
    "target-mean",
    "target-sd",
    "proposal-mean",
    "proposal-sd",
    "phi",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Direct,
    Indirect,
    Localize,
    Custom,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Direct => "direct",
            ExperimentKind::Indirect => "indirect",
            ExperimentKind::Localize => "localize",
            ExperimentKind::Custom => "custom",
        }
    }

    /// `(n, epsilon, h)` used when neither file nor flags set them.
    fn defaults(self) -> (usize, f64, f64) {
        match self {
            ExperimentKind::Direct => (5000, 3.0, 0.01),
            ExperimentKind::Indirect => (5000, 1e-3, 0.012),
            ExperimentKind::Localize => (3000, 0.002, 1e-4),
            ExperimentKind::Custom => (2000, 0.05, 0.1),
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(ExperimentKind::Direct),
            "indirect" => Ok(ExperimentKind::Indirect),
            "localize" => Ok(ExperimentKind::Localize),
            "custom" => Ok(ExperimentKind::Custom),
            _ => Err(HarnessError::Config(format!("unknown experiment {s:?}"))),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Direct,
    Indirect,
    Localize {
        log_base: LogBase,
        per_sensor: usize,
        coord: usize,
    },
    Custom {
        target_mean: f64,
        target_sd: f64,
        proposal_mean: f64,
        proposal_sd: f64,
        phi: CustomPhi,
    },
}

impl Problem {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Problem::Direct => ExperimentKind::Direct,
            Problem::Indirect => ExperimentKind::Indirect,
            Problem::Localize { .. } => ExperimentKind::Localize,
            Problem::Custom { .. } => ExperimentKind::Custom,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub n: usize,
    pub schedule: BudgetSchedule,
    pub bandwidth: f64,
    pub seed: u64,
    pub batch: usize,
    pub compare_uncompressed: bool,
    /// CSV path; the manifest goes next to it. `None` keeps results in memory.
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn kind(&self) -> ExperimentKind {
        self.problem.kind()
    }

    pub fn from_settings(kind: ExperimentKind, settings: &Settings) -> Result<Self> {
        if let Some(bad) = settings.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(HarnessError::Config(format!("unknown setting {bad:?}")));
        }
        let (n_default, eps_default, h_default) = kind.defaults();
        let get = |key: &str| settings.get(key).map(String::as_str);

        let n: usize = parse_or(settings, "n", n_default)?;
        if n == 0 {
            return Err(HarnessError::Config("n must be at least 1".into()));
        }
        let schedule = match (get("epsilon"), get("alpha")) {
            (Some(_), Some(_)) => {
                return Err(HarnessError::Config("epsilon and alpha are mutually exclusive".into()))
            }
            (_, Some(a)) => BudgetSchedule::geometric(parse_value("alpha", a)?),
            (e, None) => BudgetSchedule::constant(match e {
                Some(e) => parse_value("epsilon", e)?,
                None => eps_default,
            }),
        }
        .map_err(|e| HarnessError::Config(e.to_string()))?;
        let bandwidth: f64 = parse_or(settings, "h", h_default)?;
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(HarnessError::Config(format!("h must be positive, got {bandwidth}")));
        }
        let batch: usize = parse_or(settings, "batch", 1)?;
        if batch == 0 {
            return Err(HarnessError::Config("batch must be at least 1".into()));
        }
        let seed = parse_or(settings, "seed", 1)?;
        let compare_uncompressed = match get("compare-uncompressed") {
            None => false,
            Some(v) => parse_bool(v)?,
        };
        let output = get("out").map(PathBuf::from);

        let only_for = |keys: &[&str], owner: &str| -> Result<()> {
            match keys.iter().find(|k| settings.contains_key(**k)) {
                Some(k) => Err(HarnessError::Config(format!(
                    "setting {k:?} only applies to {owner}"
                ))),
                None => Ok(()),
            }
        };
        let localize_keys = ["log-base", "measurements-per-sensor", "coord"];
        let custom_keys = ["target-mean", "target-sd", "proposal-mean", "proposal-sd", "phi"];

        let problem = match kind {
            ExperimentKind::Direct | ExperimentKind::Indirect => {
                only_for(&localize_keys, "localize")?;
                only_for(&custom_keys, "custom")?;
                if kind == ExperimentKind::Direct {
                    Problem::Direct
                } else {
                    Problem::Indirect
                }
            }
            ExperimentKind::Localize => {
                only_for(&custom_keys, "custom")?;
                let log_base = match get("log-base") {
                    Some(v) => v.parse().map_err(|e: ckis_core::Error| HarnessError::Config(e.to_string()))?,
                    None => LogBase::E,
                };
                let per_sensor = parse_or(settings, "measurements-per-sensor", 1)?;
                if per_sensor == 0 {
                    return Err(HarnessError::Config("measurements-per-sensor must be at least 1".into()));
                }
                let coord = parse_or(settings, "coord", 0)?;
                if coord > 1 {
                    return Err(HarnessError::Config(format!("coord must be 0 or 1, got {coord}")));
                }
                Problem::Localize {
                    log_base,
                    per_sensor,
                    coord,
                }
            }
            ExperimentKind::Custom => {
                only_for(&localize_keys, "localize")?;
                let phi = match get("phi") {
                    Some(v) => v.parse().map_err(|e: ckis_core::Error| HarnessError::Config(e.to_string()))?,
                    None => CustomPhi::Identity,
                };
                let target_sd = parse_or(settings, "target-sd", 1.0)?;
                let proposal_sd = parse_or(settings, "proposal-sd", 2.0)?;
                if !(target_sd > 0.0 && proposal_sd > 0.0) {
                    return Err(HarnessError::Config("standard deviations must be positive".into()));
                }
                Problem::Custom {
                    target_mean: parse_or(settings, "target-mean", 0.0)?,
                    target_sd,
                    proposal_mean: parse_or(settings, "proposal-mean", 0.0)?,
                    proposal_sd,
                    phi,
                }
            }
        };

        Ok(RunConfig {
            problem,
            n,
            schedule,
            bandwidth,
            seed,
            batch,
            compare_uncompressed,
            output,
        })
    }

    /// Every field as `key=value` pairs, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("experiment".to_string(), self.kind().to_string()),
            ("n".into(), self.n.to_string()),
        ];
        match self.schedule {
            BudgetSchedule::Constant(e) => {
                out.push(("schedule".into(), "constant".into()));
                out.push(("epsilon".into(), e.to_string()));
            }
            BudgetSchedule::Geometric(a) => {
                out.push(("schedule".into(), "geometric".into()));
                out.push(("alpha".into(), a.to_string()));
            }
        }
        out.push(("h".into(), self.bandwidth.to_string()));
        out.push(("seed".into(), self.seed.to_string()));
        out.push(("batch".into(), self.batch.to_string()));
        out.push(("compare-uncompressed".into(), self.compare_uncompressed.to_string()));
        match &self.problem {
            Problem::Direct | Problem::Indirect => {}
            Problem::Localize {
                log_base,
                per_sensor,
                coord,
            } => {
                let base = match log_base {
                    LogBase::E => "e",
                    LogBase::Ten => "10",
                };
                out.push(("log-base".into(), base.into()));
                out.push(("measurements-per-sensor".into(), per_sensor.to_string()));
                out.push(("coord".into(), coord.to_string()));
            }
            Problem::Custom {
                target_mean,
                target_sd,
                proposal_mean,
                proposal_sd,
                phi,
            } => {
                out.push(("target-mean".into(), target_mean.to_string()));
                out.push(("target-sd".into(), target_sd.to_string()));
                out.push(("proposal-mean".into(), proposal_mean.to_string()));
                out.push(("proposal-sd".into(), proposal_sd.to_string()));
                let name = match phi {
                    CustomPhi::Identity => "identity",
                    CustomPhi::Square => "square",
                    CustomPhi::Sin => "sin",
                };
                out.push(("phi".into(), name.into()));
            }
        }
        if let Some(p) = &self.output {
            out.push(("out".into(), p.display().to_string()));
        }
        out
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| HarnessError::Config(format!("bad value {raw:?} for {key}: {e}")))
}

fn parse_or<T: FromStr>(settings: &Settings, key: &str, default: T) -> Result<T>
where
    T::Err: fmt::Display,
{
    match settings.get(key) {
        Some(raw) => parse_value(key, raw),
        None => Ok(default),
    }
}

fn parse_bool(raw: &str) -> Result<bool> {
    match raw.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(HarnessError::Config(format!("expected a boolean, got {raw:?}"))),
    }
}

/// Parses `key=value` lines. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_settings(text: &str) -> Result<Settings> {
    let mut out = Settings::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected key=value", i + 1)))?;
        let k = k.trim().replace('_', "-");
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(HarnessError::Config(format!("line {}: duplicate key {k:?}", i + 1)));
        }
    }
    Ok(out)
}

pub fn read_settings(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_settings(&text)
}

/// Applies `overrides` on top of `base`. Setting one of `epsilon` / `alpha`
/// drops the other, so a flag can switch schedule kinds set in a file.
pub fn overlay(base: &mut Settings, overrides: &Settings) {
    for (k, v) in overrides {
        match k.as_str() {
            "epsilon" => {
                base.remove("alpha");
            }
            "alpha" => {
                base.remove("epsilon");
            }
            _ => {}
        }
        base.insert(k.clone(), v.clone());
    }
}
