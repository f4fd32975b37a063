//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 for input or configuration errors, 2 when the
//! data do not support an estimate (no admissible model, truncated fit).

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{
    best_fixed, fit_von_mises_estimate, fixed_m_oracle_scan, run_mise, AdaptiveEstimator,
};
use crate::io::{
    read_config, read_sample_path, write_density_grid, write_mise_report, write_oracle_scan, write_sample_csv,
    write_selection_trace, ScenarioConfig,
};
use crate::selection::{adaptive_estimate, CalibrationStrategy, KappaChoice, ModelGrid, DEFAULT_GRID_CAP};
use crate::simulate::{generate_sample, Benchmark, StreamRng};

pub const SEED_ENV: &str = "CIRCENSE_SEED";
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "circense", version, about = "Density estimation for arc-censored circular data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct EstimateFlags {
    /// Fixed penalty constant; calibrated from the data when omitted.
    #[arg(long)]
    pub kappa: Option<f64>,

    /// κ calibration: `djump` or `slope`.
    #[arg(long, default_value = "djump")]
    pub strategy: CalibrationStrategy,

    /// Largest frequency m in the model grid.
    #[arg(long, default_value_t = DEFAULT_GRID_CAP)]
    pub grid_cap: usize,
}

impl EstimateFlags {
    fn estimator(&self) -> Result<AdaptiveEstimator> {
        let kappa = match self.kappa {
            Some(k) if !(k > 0.0 && k.is_finite()) => {
                return Err(Error::InvalidParameter(format!("--kappa must be positive, got {k}")))
            }
            Some(k) => KappaChoice::Fixed(k),
            None => KappaChoice::Calibrated(self.strategy),
        };
        Ok(AdaptiveEstimator {
            grid_cap: self.grid_cap,
            kappa,
        })
    }
}

#[derive(Debug, Args, Clone)]
pub struct StudyFlags {
    /// Scenario config (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Overrides the config's replication count.
    #[arg(long)]
    pub replications: Option<u64>,

    /// Worker threads; all cores by default.
    #[arg(long)]
    pub jobs: Option<usize>,

    /// CSV report path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select and fit a density to a `delta,x,l,u` sample.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Directory receiving `density.csv` and `trace.csv`.
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        flags: EstimateFlags,
        #[arg(long, default_value_t = 1024)]
        resolution: usize,
    },
    /// Draw one censored sample from a scenario.
    Simulate {
        #[arg(long, conflicts_with = "model", required_unless_present = "model")]
        config: Option<PathBuf>,
        /// Benchmark model (`model1` … `model4`) instead of a config.
        #[arg(long)]
        model: Option<Benchmark>,
        /// Sample size; defaults to the first size in the config.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Stream id, for drawing several independent samples under one seed.
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Sample CSV path; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo MISE of the adaptive estimator.
    Mise {
        #[command(flatten)]
        study: StudyFlags,
        #[command(flatten)]
        flags: EstimateFlags,
    },
    /// MISE of every fixed model, on the same samples as `mise`.
    OracleScan {
        #[command(flatten)]
        study: StudyFlags,
        /// Sample size; defaults to the largest size in the config.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_GRID_CAP)]
        grid_cap: usize,
    },
    /// Fit von Mises parameters to the selected estimate of a sample.
    FitVonmises {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        flags: EstimateFlags,
    },
}

fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidParameter(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// Flag, then config, then environment, then the built-in default.
fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    Ok(seed_from_env()?.unwrap_or(DEFAULT_SEED))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidParameter("--jobs must be at least 1".into())),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn study_config(study: &StudyFlags) -> Result<(ScenarioConfig, u64, u64)> {
    let config = read_config(&study.config)?;
    let seed = resolve_seed(study.seed, config.seed)?;
    let replications = study.replications.unwrap_or(config.replications);
    Ok((config, seed, replications))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Estimate {
            input,
            output,
            flags,
            resolution,
        } => {
            let sample = read_sample_path(&input)?;
            let estimator = flags.estimator()?;
            let grid = ModelGrid::new(sample.len(), estimator.grid_cap)?;
            let fit = adaptive_estimate(&sample, &grid, estimator.kappa)?;
            fs::create_dir_all(&output)?;
            let mut density = create(&output.join("density.csv"))?;
            write_density_grid(&fit.estimate, resolution, &mut density)?;
            density.flush()?;
            let mut trace = create(&output.join("trace.csv"))?;
            write_selection_trace(&fit.trace, &mut trace)?;
            trace.flush()?;
            let chosen = fit.trace.chosen();
            let source = match fit.trace.calibration() {
                None => "fixed".to_string(),
                Some(c) if c.fallback => format!("{}, fallback", c.strategy),
                Some(c) => c.strategy.to_string(),
            };
            writeln!(
                out,
                "m = {} (D = {}), kappa = {:.6} ({source}), truncated = {}",
                chosen.m(),
                chosen.dim(),
                fit.trace.kappa(),
                fit.estimate.is_truncated()
            )?;
        }
        Command::Simulate {
            config,
            model,
            n,
            seed,
            stream,
            output,
        } => {
            let (spec, sizes, config_seed) = match (config, model) {
                (Some(path), _) => {
                    let cfg = read_config(path)?;
                    (cfg.spec, cfg.sizes, cfg.seed)
                }
                (None, Some(m)) => (m.spec(), crate::io::DEFAULT_SIZES.to_vec(), None),
                (None, None) => unreachable!("clap requires one of --config and --model"),
            };
            let n = n.unwrap_or(sizes[0]);
            let seed = resolve_seed(seed, config_seed)?;
            let sample = generate_sample(&spec, n, &mut StreamRng::new(seed, stream))?;
            match output {
                Some(path) => {
                    let mut w = create(&path)?;
                    write_sample_csv(&sample, &mut w)?;
                    w.flush()?;
                }
                None => write_sample_csv(&sample, &mut *out)?,
            }
        }
        Command::Mise { study, flags } => {
            let (config, seed, replications) = study_config(&study)?;
            let estimator = flags.estimator()?;
            let report = with_pool(study.jobs, || {
                run_mise(&config.spec, &config.sizes, replications, seed, &estimator)
            })??;
            if let Some(path) = &study.output {
                let mut w = create(path)?;
                write_mise_report(&report, &mut w)?;
                w.flush()?;
            }
            write!(out, "{report}")?;
            for row in report.rows.iter().filter(|r| r.failures > 0) {
                writeln!(err, "warning: n = {}: {} replications had no usable estimate", row.n, row.failures)?;
            }
        }
        Command::OracleScan { study, n, grid_cap } => {
            let (config, seed, replications) = study_config(&study)?;
            let n = n.unwrap_or_else(|| *config.sizes.iter().max().expect("config has sizes"));
            let grid = ModelGrid::new(n, grid_cap)?;
            let scan = with_pool(study.jobs, || fixed_m_oracle_scan(&config.spec, n, replications, seed, &grid))??;
            if let Some(path) = &study.output {
                let mut w = create(path)?;
                write_oracle_scan(&config.spec.name, n, &scan, &mut w)?;
                w.flush()?;
            }
            writeln!(out, "scenario {} n = {n} N = {replications}", config.spec.name)?;
            writeln!(out, "{:>4} {:>4} {:>10} {:>10}", "m", "D", "MISE", "stderr")?;
            for r in &scan {
                writeln!(out, "{:>4} {:>4} {:>10.5} {:>10.5}", r.model.m(), r.model.dim(), r.mise, r.stderr)?;
            }
            if let Some(best) = best_fixed(&scan) {
                writeln!(out, "best fixed m = {} (MISE {:.5})", best.model.m(), best.mise)?;
            }
        }
        Command::FitVonmises { input, flags } => {
            let sample = read_sample_path(&input)?;
            let estimator = flags.estimator()?;
            let grid = ModelGrid::new(sample.len(), estimator.grid_cap)?;
            let fit = adaptive_estimate(&sample, &grid, estimator.kappa)?;
            let vm = fit_von_mises_estimate(&fit.estimate)?;
            if vm.flat {
                writeln!(err, "warning: estimate is flat; mean direction is undefined and reported as 0")?;
            }
            writeln!(out, "mu = {:.6}", vm.mean.radians())?;
            writeln!(out, "kappa = {:.6}", vm.concentration)?;
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_statistical() {
                2
            } else {
                1
            }
        }
    }
}

