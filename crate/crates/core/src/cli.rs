//! Command-line front end. Exit codes: 0 success, 1 internal error,
//! 2 configuration or usage error, 3 data or file error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{bench, calibrate_table, run_seeds, write_csv_file, write_json_file};
use crate::config::ExperimentConfig;
use crate::driver::{initial_table, Strategy};
use crate::error::{Error, Result};
use crate::lookup::{load_table, save_table, TABLE_EXTENSION};
use crate::stats::mean;

pub const WORKERS_ENV: &str = "ALCURVE_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "alcurve",
    version,
    about = "Reinforcement-learning active learning on synthetic tasks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic task and write it as JSON.
    GenTask {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one strategy over the configured seeds.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run several strategies on paired seeds and compare them.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Comma-separated strategy names.
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<String>>,
    },
    /// Build or inspect a lookup table.
    Table {
        #[command(subcommand)]
        action: TableAction,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds; overrides the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum TableAction {
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    Inspect {
        #[arg(long)]
        table: PathBuf,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::NotFound(_)
        | Error::Version { .. }
        | Error::Parse { .. }
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_) => 3,
        _ => 1,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn worker_count(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(flag),
    }
}

fn with_workers<T: Send>(flag: Option<usize>, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count(flag)? {
        if n == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(job)
}

fn out_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = flag
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set out_dir".into()))?;
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn parse_strategy(name: &str) -> Result<Strategy> {
    name.parse()
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::GenTask { config, seed, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let seed = seed.or(cfg.task_seed).unwrap_or(cfg.seeds[0]);
            let task = crate::oracle::generate_synthetic_task(&cfg.task, seed)?;
            let dir = out_dir(out, &cfg)?;
            let path = dir.join(format!("task-{seed}.json"));
            task.save(&path)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Run {
            common,
            strategy,
            seed,
        } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let strategy = match strategy {
                Some(s) => parse_strategy(&s)?,
                None => cfg.experiment.strategy,
            };
            let seeds = match (seed, common.seeds) {
                (Some(s), _) => vec![s],
                (None, Some(list)) => list,
                (None, None) => cfg.seeds.clone(),
            };
            let dir = out_dir(common.out, &cfg)?;
            let runs = with_workers(common.workers, || run_seeds(&cfg, strategy, &seeds))?;
            let csv = dir.join(format!("run-{strategy}.csv"));
            write_csv_file(&csv, &runs)?;
            write_json_file(&dir.join(format!("run-{strategy}.json")), &runs)?;
            let finals: Vec<f64> = runs.iter().map(|r| r.final_perf()).collect();
            println!(
                "{strategy}: {} seed(s), mean final perf {:.6}; wrote {}",
                runs.len(),
                mean(&finals),
                csv.display()
            );
            Ok(())
        }
        Command::Bench { common, strategies } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let strategies: Vec<Strategy> = match strategies {
                Some(names) => names.iter().map(|n| parse_strategy(n)).collect::<Result<_>>()?,
                None => Strategy::ALL.to_vec(),
            };
            if strategies.len() < 2 {
                return Err(Error::Config("bench needs at least two strategies".into()));
            }
            let seeds = common.seeds.clone().unwrap_or_else(|| cfg.seeds.clone());
            let dir = out_dir(common.out, &cfg)?;
            let (runs, summary) = with_workers(common.workers, || bench(&cfg, &strategies, &seeds))?;
            write_csv_file(&dir.join("bench.csv"), &runs)?;
            write_json_file(&dir.join("bench-runs.json"), &runs)?;
            write_json_file(&dir.join("summary.json"), &summary)?;
            for s in &summary.strategies {
                println!(
                    "{:>8}: mean {:.6}  std {:.6}  (n={})",
                    s.strategy.name(),
                    s.mean_final,
                    s.std_final,
                    s.runs
                );
            }
            for p in &summary.pairs {
                println!(
                    "{} vs {}: diff {:+.6}  p(a>b) {:.4}  p(b>a) {:.4}",
                    p.a, p.b, p.mean_diff, p.p_a_greater, p.p_b_greater
                );
            }
            Ok(())
        }
        Command::Table { action } => match action {
            TableAction::Build {
                config,
                seed,
                out,
                workers,
            } => {
                let cfg = ExperimentConfig::load(&config)?;
                let seed = seed.unwrap_or(cfg.seeds[0]);
                let dir = out_dir(out, &cfg)?;
                let task = cfg.task_for_seed(seed)?;
                let al = &cfg.experiment;
                let (state, table) = with_workers(workers, || initial_table(al, &task, seed))?;
                let path = dir.join(format!("table-{seed}.{TABLE_EXTENSION}"));
                save_table(&table, &path)?;
                let cal = calibrate_table(&table, &task, &state, al.oracle, al.budget, 100, seed ^ 0xC0FFEE)?;
                write_json_file(&dir.join(format!("table-{seed}.calibration.json")), &cal)?;
                println!("wrote {} ({} records)", path.display(), table.len());
                println!(
                    "held-out median error {:.6} (weighted) / {:.6} (with fallback), perf range {:.6}",
                    cal.median_weighted_error, cal.median_resolved_error, cal.perf_range
                );
                Ok(())
            }
            TableAction::Inspect { table } => {
                let summary = inspect(&table)?;
                print!("{summary}");
                Ok(())
            }
        },
    }
}

#[derive(Debug, Serialize)]
struct InspectSummary {
    records: usize,
    quantiles: usize,
    mu_d: f64,
    sigma_d: f64,
    perf_min: f64,
    perf_mean: f64,
    perf_max: f64,
}

/// Human-readable summary of a table file.
pub fn inspect(path: &Path) -> Result<String> {
    let t = load_table(path)?;
    let perfs: Vec<f64> = t.records.iter().map(|r| r.perf).collect();
    let (lo, hi) = t.perf_range().unwrap_or((f64::NAN, f64::NAN));
    let s = InspectSummary {
        records: t.len(),
        quantiles: t.quantiles,
        mu_d: t.mu_d,
        sigma_d: t.sigma_d,
        perf_min: lo,
        perf_mean: mean(&perfs),
        perf_max: hi,
    };
    Ok(format!(
        "M = {}\nQ = {}\nmu_d = {}\nsigma_d = {}\nperf min/mean/max = {} / {} / {}\n",
        s.records, s.quantiles, s.mu_d, s.sigma_d, s.perf_min, s.perf_mean, s.perf_max
    ))
}
