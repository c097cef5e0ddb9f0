use std::path::PathBuf;
use std::process::ExitCode;

use ckis_core::Execution;
use ckis_harness::config::{overlay, read_settings};
use ckis_harness::sweep::{parse_grid_arg, write_summary};
use ckis_harness::{run, sweep, ExperimentKind, Result, RunConfig, Settings, SweepPlan};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ckis", version, about = "Compressed kernelized importance sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// 1-D Gaussian target, wider Gaussian proposal, oscillating test function
    Direct(Common),
    /// Posterior over a scalar location from 10 noisy observations
    Indirect(Common),
    /// 2-D range-only source localization from six sensors
    Localize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        localize: LocalizeArgs,
    },
    /// 1-D Gaussian target and proposal with a chosen test function
    Custom {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        custom: CustomArgs,
    },
    /// Replicated runs over a parameter grid
    Sweep(SweepArgs),
}

#[derive(Args, Default)]
struct Common {
    /// Number of particles
    #[arg(long)]
    n: Option<usize>,
    /// Constant compression budget
    #[arg(long, conflicts_with = "alpha")]
    epsilon: Option<f64>,
    /// Geometric budget `alpha^n`
    #[arg(long)]
    alpha: Option<f64>,
    /// Kernel bandwidth
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Compress after every `batch` particles
    #[arg(long)]
    batch: Option<usize>,
    /// Also run the uncompressed estimator on the same draws
    #[arg(long)]
    compare_uncompressed: bool,
    /// CSV output path; the manifest is written alongside with extension `.manifest`
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` settings file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Default)]
struct LocalizeArgs {
    /// Base of the log in the range model: e or 10
    #[arg(long)]
    log_base: Option<String>,
    #[arg(long)]
    measurements_per_sensor: Option<usize>,
    /// Posterior-mean coordinate to estimate (0 or 1)
    #[arg(long)]
    coord: Option<usize>,
}

#[derive(Args, Default)]
struct CustomArgs {
    #[arg(long, allow_hyphen_values = true)]
    target_mean: Option<f64>,
    #[arg(long)]
    target_sd: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    proposal_mean: Option<f64>,
    #[arg(long)]
    proposal_sd: Option<f64>,
    /// identity, square or sin
    #[arg(long)]
    phi: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// direct, indirect, localize or custom
    #[arg(long)]
    experiment: String,
    /// Grid axis `key=v1,v2,...`; repeatable
    #[arg(long = "grid")]
    grid: Vec<String>,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    /// Replicate `r` uses seed `seed + r`
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Run replicates one after another
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    localize: LocalizeArgs,
    #[command(flatten)]
    custom: CustomArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, conflicts_with = "alpha")]
    epsilon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    compare_uncompressed: bool,
    /// Aggregate CSV path
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn put<T: ToString>(s: &mut Settings, key: &str, v: Option<T>) {
    if let Some(v) = v {
        s.insert(key.to_string(), v.to_string());
    }
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let mut base = match &self.config {
            Some(p) => read_settings(p)?,
            None => Settings::new(),
        };
        let mut flags = Settings::new();
        put(&mut flags, "n", self.n);
        put(&mut flags, "epsilon", self.epsilon);
        put(&mut flags, "alpha", self.alpha);
        put(&mut flags, "h", self.h);
        put(&mut flags, "seed", self.seed);
        put(&mut flags, "batch", self.batch);
        if self.compare_uncompressed {
            flags.insert("compare-uncompressed".into(), "true".into());
        }
        put(&mut flags, "out", self.out.as_ref().map(|p| p.display()));
        overlay(&mut base, &flags);
        Ok(base)
    }
}

impl LocalizeArgs {
    fn add(&self, s: &mut Settings) {
        put(s, "log-base", self.log_base.as_ref());
        put(s, "measurements-per-sensor", self.measurements_per_sensor);
        put(s, "coord", self.coord);
    }
}

impl CustomArgs {
    fn add(&self, s: &mut Settings) {
        put(s, "target-mean", self.target_mean);
        put(s, "target-sd", self.target_sd);
        put(s, "proposal-mean", self.proposal_mean);
        put(s, "proposal-sd", self.proposal_sd);
        put(s, "phi", self.phi.as_ref());
    }
}

fn single(kind: ExperimentKind, settings: Settings) -> Result<()> {
    let config = RunConfig::from_settings(kind, &settings)?;
    let outcome = run(&config)?;
    if let Some(last) = outcome.last() {
        print!(
            "{kind}: n={} estimate={} model_order={}",
            last.n, last.estimate_compressed, last.model_order
        );
        if let Some(r) = &outcome.reference {
            print!(" reference={}", r.value);
        }
        println!();
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Direct(c) => single(ExperimentKind::Direct, c.settings()?),
        Command::Indirect(c) => single(ExperimentKind::Indirect, c.settings()?),
        Command::Localize { common, localize } => {
            let mut s = common.settings()?;
            localize.add(&mut s);
            single(ExperimentKind::Localize, s)
        }
        Command::Custom { common, custom } => {
            let mut s = common.settings()?;
            custom.add(&mut s);
            single(ExperimentKind::Custom, s)
        }
        Command::Sweep(a) => {
            let kind: ExperimentKind = a.experiment.parse()?;
            let common = Common {
                n: a.n,
                epsilon: a.epsilon,
                alpha: a.alpha,
                h: a.h,
                seed: None,
                batch: a.batch,
                compare_uncompressed: a.compare_uncompressed,
                out: None,
                config: a.config.clone(),
            };
            let mut base = common.settings()?;
            a.localize.add(&mut base);
            a.custom.add(&mut base);
            let grid = a
                .grid
                .iter()
                .map(|g| parse_grid_arg(g))
                .collect::<Result<Vec<_>>>()?;
            let plan = SweepPlan {
                kind,
                base,
                grid,
                replicates: a.replicates,
                seed_base: a.seed,
            };
            let exec = if a.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let summaries = sweep(&plan, exec)?;
            write_summary(&a.out, kind, &summaries)?;
            println!("{} grid points x {} replicates -> {}", summaries.len(), a.replicates, a.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            ExitCode::from(u8::try_from(code).unwrap_or(1))
        }
    }
}
