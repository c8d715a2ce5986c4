//! Multi-seed runs, CSV/JSON reports and strategy comparisons.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::driver::{run_experiment, ALState, CycleLog, Strategy};
use crate::error::{Error, Result};
use crate::lookup::{build_sketch, estimate_performance, random_subset, LookupTable};
use crate::numerics::derive_seed;
use crate::oracle::{proxy_performance, OracleKind, SyntheticTask};
use crate::stats::{mean, median, paired_t_test_greater, std_dev};

pub const CSV_HEADER: [&str; 7] = [
    "strategy",
    "seed",
    "cycle",
    "labeled_size",
    "perf",
    "fallback_count",
    "duration_ms",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: Strategy,
    pub seed: u64,
    pub logs: Vec<CycleLog>,
}

impl RunRecord {
    pub fn final_perf(&self) -> f64 {
        self.logs.last().map_or(f64::NAN, |l| l.perf)
    }
}

/// Runs one strategy for every seed. Seeds run concurrently on the current
/// rayon pool; results come back in seed order.
pub fn run_seeds(cfg: &ExperimentConfig, strategy: Strategy, seeds: &[u64]) -> Result<Vec<RunRecord>> {
    let mut al = cfg.experiment.clone();
    al.strategy = strategy;
    seeds
        .par_iter()
        .map(|&seed| {
            let task = cfg.task_for_seed(seed)?;
            let logs = run_experiment(&al, &task, seed)
                .map_err(|e| Error::invalid(format!("strategy {strategy}, seed {seed}: {e}")))?;
            Ok(RunRecord { strategy, seed, logs })
        })
        .collect()
}

pub fn write_csv<W: Write>(out: W, runs: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for run in runs {
        for log in &run.logs {
            w.write_record([
                run.strategy.name().to_string(),
                run.seed.to_string(),
                log.cycle.to_string(),
                log.labeled_size.to_string(),
                log.perf.to_string(),
                log.fallback_count.to_string(),
                format!("{:.3}", log.durations.total_ms),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, runs: &[RunRecord]) -> Result<()> {
    write_csv(File::create(path)?, runs)
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub runs: usize,
    pub mean_final: f64,
    pub std_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub a: Strategy,
    pub b: Strategy,
    /// Mean of `final(a) - final(b)` over paired seeds.
    pub mean_diff: f64,
    /// One-sided paired t-test p-value for `a > b`.
    pub p_a_greater: f64,
    /// One-sided paired t-test p-value for `b > a`.
    pub p_b_greater: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub seeds: Vec<u64>,
    pub strategies: Vec<StrategySummary>,
    pub pairs: Vec<PairSummary>,
}

/// Aggregates final performances; `groups[i]` holds the runs of one
/// strategy in seed order.
pub fn summarize(seeds: &[u64], groups: &[Vec<RunRecord>]) -> BenchSummary {
    let finals: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| g.iter().map(RunRecord::final_perf).collect())
        .collect();
    let strategies = groups
        .iter()
        .zip(&finals)
        .map(|(g, f)| StrategySummary {
            strategy: g.first().map_or(Strategy::Random, |r| r.strategy),
            runs: f.len(),
            mean_final: mean(f),
            std_final: std_dev(f),
        })
        .collect::<Vec<_>>();
    let mut pairs = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let diffs: Vec<f64> = finals[i].iter().zip(&finals[j]).map(|(a, b)| a - b).collect();
            pairs.push(PairSummary {
                a: strategies[i].strategy,
                b: strategies[j].strategy,
                mean_diff: mean(&diffs),
                p_a_greater: paired_t_test_greater(&finals[i], &finals[j]),
                p_b_greater: paired_t_test_greater(&finals[j], &finals[i]),
            });
        }
    }
    BenchSummary {
        seeds: seeds.to_vec(),
        strategies,
        pairs,
    }
}

/// Runs every strategy on every seed and summarizes the final performances.
pub fn bench(
    cfg: &ExperimentConfig,
    strategies: &[Strategy],
    seeds: &[u64],
) -> Result<(Vec<RunRecord>, BenchSummary)> {
    if strategies.len() < 2 {
        return Err(Error::Config("bench needs at least two strategies".into()));
    }
    let groups = strategies
        .iter()
        .map(|&s| run_seeds(cfg, s, seeds))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(seeds, &groups);
    Ok((groups.into_iter().flatten().collect(), summary))
}

/// Accuracy of a lookup table on held-out random batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCalibration {
    pub queries: usize,
    /// Median |weighted estimate − direct proxy|, threshold ignored.
    pub median_weighted_error: f64,
    /// Median error of the thresholded estimator, where fallback queries
    /// are answered by direct evaluation.
    pub median_resolved_error: f64,
    pub fallback_fraction: f64,
    /// Spread of performance over records and queries.
    pub perf_range: f64,
}

pub fn calibrate_table(
    table: &LookupTable,
    task: &SyntheticTask,
    state: &ALState,
    kind: OracleKind,
    budget: usize,
    queries: usize,
    seed: u64,
) -> Result<TableCalibration> {
    let mut weighted = Vec::with_capacity(queries);
    let mut resolved = Vec::with_capacity(queries);
    let mut fallbacks = 0;
    let (mut lo, mut hi) = table.perf_range().unwrap_or((f64::INFINITY, f64::NEG_INFINITY));
    for q in 0..queries {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, q as u64));
        let batch = random_subset(&state.unlabeled, budget, &mut rng);
        let truth = proxy_performance(&state.labeled, &batch, task, kind)?;
        lo = lo.min(truth);
        hi = hi.max(truth);
        let sketch = build_sketch(&task.pool_features.select_rows(&batch), table.quantiles)?;
        weighted.push((table.weighted_estimate(&sketch)? - truth).abs());
        let est = estimate_performance(table, &sketch)?;
        match est.value {
            Some(v) => resolved.push((v - truth).abs()),
            None => {
                fallbacks += 1;
                resolved.push(0.0);
            }
        }
    }
    Ok(TableCalibration {
        queries,
        median_weighted_error: median(&weighted),
        median_resolved_error: median(&resolved),
        fallback_fraction: fallbacks as f64 / queries.max(1) as f64,
        perf_range: (hi - lo).max(0.0),
    })
}
