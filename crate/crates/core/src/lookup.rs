//! Pre-computed performance records with Wasserstein-distance lookup.
//!
//! A batch is summarized by per-dimension quantile sketches. The distance
//! between two sketches is the discretized 1-D Wasserstein-1 distance,
//! averaged over dimensions. A query close enough to the stored records is
//! answered by inverse-distance weighting of its nearest neighbors; a query
//! farther than `mean - multiplier * std` of the record-to-record distances
//! is flagged for direct evaluation.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{derive_seed, Matrix};

pub const TABLE_FORMAT: &str = "alcurve-lookup";
pub const TABLE_VERSION: u32 = 1;
pub const TABLE_EXTENSION: &str = "alut.jsonl";

/// Per-dimension empirical quantiles at levels `(j + 0.5) / Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSketch {
    pub dims: usize,
    pub levels: usize,
    /// Row-major `dims × levels`.
    pub quantiles: Vec<f64>,
}

impl QuantileSketch {
    pub fn row(&self, dim: usize) -> &[f64] {
        &self.quantiles[dim * self.levels..(dim + 1) * self.levels]
    }

    pub fn level(&self, j: usize) -> f64 {
        (j as f64 + 0.5) / self.levels as f64
    }
}

/// Quantile sketch of a batch (rows are points). Order statistics sit at
/// positions `(i - 0.5) / B`; levels between them are linearly
/// interpolated and levels outside them clamp to the extremes.
pub fn build_sketch(batch: &Matrix, levels: usize) -> Result<QuantileSketch> {
    if batch.rows == 0 {
        return Err(Error::invalid("cannot sketch an empty batch"));
    }
    if levels == 0 {
        return Err(Error::invalid("sketch needs at least one quantile level"));
    }
    let b = batch.rows;
    let mut quantiles = Vec::with_capacity(batch.cols * levels);
    let mut column = vec![0.0; b];
    for dim in 0..batch.cols {
        for (i, v) in column.iter_mut().enumerate() {
            *v = batch.data[i * batch.cols + dim];
        }
        column.sort_by(f64::total_cmp);
        for j in 0..levels {
            let level = (j as f64 + 0.5) / levels as f64;
            // Fractional order-statistic index: position (i + 0.5) / B.
            let pos = level * b as f64 - 0.5;
            let q = if pos <= 0.0 {
                column[0]
            } else if pos >= (b - 1) as f64 {
                column[b - 1]
            } else {
                let lo = pos.floor() as usize;
                let frac = pos - lo as f64;
                if frac == 0.0 {
                    column[lo]
                } else {
                    column[lo] + frac * (column[lo + 1] - column[lo])
                }
            };
            quantiles.push(q);
        }
    }
    Ok(QuantileSketch {
        dims: batch.cols,
        levels,
        quantiles,
    })
}

/// Mean over dimensions and levels of `|q_a - q_b|`.
pub fn wasserstein1(a: &QuantileSketch, b: &QuantileSketch) -> Result<f64> {
    Error::check_len("sketch dimensions", a.dims, b.dims)?;
    Error::check_len("sketch levels", a.levels, b.levels)?;
    Ok(sketch_distance(a, b))
}

fn sketch_distance(a: &QuantileSketch, b: &QuantileSketch) -> f64 {
    let total: f64 = a
        .quantiles
        .iter()
        .zip(&b.quantiles)
        .map(|(x, y)| (x - y).abs())
        .sum();
    total / a.quantiles.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LookupRecord {
    pub sketch: QuantileSketch,
    pub perf: f64,
    pub member_ids: Vec<usize>,
    pub seed: u64,
    pub cycle_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TableParams {
    pub records: usize,
    pub quantiles: usize,
    pub neighbors: usize,
    pub eps_w: f64,
    /// τ = mean − tau_multiplier · std of record-to-record distances.
    pub tau_multiplier: f64,
    /// Append directly evaluated fallback queries as new records.
    pub append_fallback: bool,
}

impl Default for TableParams {
    fn default() -> Self {
        TableParams {
            records: 200,
            quantiles: 64,
            neighbors: 5,
            eps_w: 1e-9,
            tau_multiplier: 1.0,
            append_fallback: true,
        }
    }
}

impl TableParams {
    pub fn validate(&self) -> Result<()> {
        if self.records == 0 || self.quantiles == 0 || self.neighbors == 0 {
            return Err(Error::Config(
                "table records, quantiles and neighbors must be at least 1".into(),
            ));
        }
        if self.eps_w.is_nan() || self.eps_w <= 0.0 || !self.tau_multiplier.is_finite() {
            return Err(Error::Config("table eps_w must be positive".into()));
        }
        Ok(())
    }
}

/// Records plus the distance statistics that define the fallback threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    pub records: Vec<LookupRecord>,
    pub quantiles: usize,
    pub dims: usize,
    pub k: usize,
    pub eps_w: f64,
    pub tau_multiplier: f64,
    pub mu_d: f64,
    pub sigma_d: f64,
    pair_sum: f64,
    pair_sumsq: f64,
}

/// Result of a table query.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: Option<f64>,
    pub min_distance: f64,
    pub fallback: bool,
    /// `(record index, normalized weight)` of the neighbors used.
    pub used: Vec<(usize, f64)>,
}

impl LookupTable {
    pub fn new(dims: usize, quantiles: usize, k: usize, eps_w: f64, tau_multiplier: f64) -> Self {
        LookupTable {
            records: Vec::new(),
            quantiles,
            dims,
            k,
            eps_w,
            tau_multiplier,
            mu_d: f64::NAN,
            sigma_d: f64::NAN,
            pair_sum: 0.0,
            pair_sumsq: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn pair_count(&self) -> usize {
        let m = self.records.len();
        m * m.saturating_sub(1) / 2
    }

    /// Fallback threshold; `None` while fewer than two records exist.
    pub fn tau(&self) -> Option<f64> {
        (self.records.len() >= 2).then_some(self.mu_d - self.tau_multiplier * self.sigma_d)
    }

    /// Adds a record and folds its distances to all earlier records into the
    /// pairwise statistics.
    pub fn push_record(&mut self, record: LookupRecord) -> Result<()> {
        Error::check_len("record sketch dimensions", self.dims, record.sketch.dims)?;
        Error::check_len("record sketch levels", self.quantiles, record.sketch.levels)?;
        for earlier in &self.records {
            let d = sketch_distance(&earlier.sketch, &record.sketch);
            self.pair_sum += d;
            self.pair_sumsq += d * d;
        }
        self.records.push(record);
        self.refresh_stats();
        Ok(())
    }

    fn refresh_stats(&mut self) {
        let n = self.pair_count();
        if n == 0 {
            self.mu_d = f64::NAN;
            self.sigma_d = f64::NAN;
        } else {
            let mean = self.pair_sum / n as f64;
            self.mu_d = mean;
            self.sigma_d = (self.pair_sumsq / n as f64 - mean * mean).max(0.0).sqrt();
        }
    }

    pub fn perf_range(&self) -> Option<(f64, f64)> {
        let mut it = self.records.iter().map(|r| r.perf);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| (lo.min(p), hi.max(p))))
    }

    fn distances(&self, query: &QuantileSketch) -> Result<Vec<f64>> {
        if self.records.is_empty() {
            return Err(Error::invalid("lookup table has no records"));
        }
        Error::check_len("query sketch dimensions", self.dims, query.dims)?;
        Error::check_len("query sketch levels", self.quantiles, query.levels)?;
        Ok(self
            .records
            .iter()
            .map(|r| sketch_distance(&r.sketch, query))
            .collect())
    }

    fn weighted(&self, dist: &[f64]) -> (f64, Vec<(usize, f64)>) {
        let mut idx: Vec<usize> = (0..dist.len()).collect();
        idx.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        idx.truncate(self.k.min(dist.len()));
        let raw: Vec<f64> = idx.iter().map(|&j| 1.0 / (dist[j] + self.eps_w)).collect();
        let total: f64 = raw.iter().sum();
        let used: Vec<(usize, f64)> = idx.iter().zip(&raw).map(|(&j, w)| (j, w / total)).collect();
        let value = used.iter().map(|&(j, w)| w * self.records[j].perf).sum::<f64>();
        let (lo, hi) = used
            .iter()
            .map(|&(j, _)| self.records[j].perf)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
                (l.min(p), h.max(p))
            });
        (value.clamp(lo, hi), used)
    }

    /// Inverse-distance estimate from the k nearest records, ignoring the
    /// fallback threshold.
    pub fn weighted_estimate(&self, query: &QuantileSketch) -> Result<f64> {
        let dist = self.distances(query)?;
        Ok(self.weighted(&dist).0)
    }
}

pub fn estimate_performance(table: &LookupTable, query: &QuantileSketch) -> Result<Estimate> {
    let dist = table.distances(query)?;
    let (nearest, min_distance) = dist.iter().copied().enumerate().fold(
        (0, f64::INFINITY),
        |(bi, bd), (i, d)| if d < bd { (i, d) } else { (bi, bd) },
    );
    if min_distance == 0.0 {
        return Ok(Estimate {
            value: Some(table.records[nearest].perf),
            min_distance,
            fallback: false,
            used: vec![(nearest, 1.0)],
        });
    }
    match table.tau() {
        Some(tau) if min_distance <= tau => {
            let (value, used) = table.weighted(&dist);
            Ok(Estimate {
                value: Some(value),
                min_distance,
                fallback: false,
                used,
            })
        }
        _ => Ok(Estimate {
            value: None,
            min_distance,
            fallback: true,
            used: Vec::new(),
        }),
    }
}

/// Draws `budget` distinct ids uniformly from `ids`, preserving no order.
pub fn random_subset(ids: &[usize], budget: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    rand::seq::index::sample(rng, ids.len(), budget)
        .into_iter()
        .map(|i| ids[i])
        .collect()
}

/// Builds `params.records` records, each from an independent uniform
/// `budget`-subset of `unlabeled_ids` scored by `evaluator(labeled,
/// subset)`. Records are evaluated in parallel; record `j` uses the seed
/// `derive_seed(seed, j)`, so the table does not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn build_table<F>(
    pool_features: &Matrix,
    unlabeled_ids: &[usize],
    labeled_ids: &[usize],
    evaluator: F,
    params: &TableParams,
    budget: usize,
    seed: u64,
    cycle_index: usize,
) -> Result<LookupTable>
where
    F: Fn(&[usize], &[usize]) -> Result<f64> + Sync,
{
    params.validate()?;
    if budget == 0 || budget > unlabeled_ids.len() {
        return Err(Error::invalid(format!(
            "budget {budget} must lie in 1..={}",
            unlabeled_ids.len()
        )));
    }
    let records: Vec<LookupRecord> = (0..params.records)
        .into_par_iter()
        .map(|j| {
            let record_seed = derive_seed(seed, j as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(record_seed);
            let mut members = random_subset(unlabeled_ids, budget, &mut rng);
            members.sort_unstable();
            let sketch = build_sketch(&pool_features.select_rows(&members), params.quantiles)?;
            let perf = evaluator(labeled_ids, &members)?;
            Ok(LookupRecord {
                sketch,
                perf,
                member_ids: members,
                seed: record_seed,
                cycle_index,
            })
        })
        .collect::<Result<_>>()?;

    let mut table = LookupTable::new(
        pool_features.cols,
        params.quantiles,
        params.neighbors,
        params.eps_w,
        params.tau_multiplier,
    );
    for r in records {
        table.push_record(r)?;
    }
    Ok(table)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    quantiles: usize,
    dims: usize,
    k: usize,
    eps_w: f64,
    tau_multiplier: f64,
    mu_d: Option<f64>,
    sigma_d: Option<f64>,
    records: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    perf: f64,
    member_ids: Vec<usize>,
    seed: u64,
    cycle_index: usize,
    quantiles: Vec<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Writes the table as JSON lines: one header, then one line per record.
pub fn save_table(table: &LookupTable, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let header = Header {
        format: TABLE_FORMAT.to_string(),
        version: TABLE_VERSION,
        quantiles: table.quantiles,
        dims: table.dims,
        k: table.k,
        eps_w: table.eps_w,
        tau_multiplier: table.tau_multiplier,
        mu_d: finite(table.mu_d),
        sigma_d: finite(table.sigma_d),
        records: table.records.len(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for r in &table.records {
        let line = RecordLine {
            perf: r.perf,
            member_ids: r.member_ids.clone(),
            seed: r.seed,
            cycle_index: r.cycle_index,
            quantiles: r.sketch.quantiles.clone(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_table(path: &Path) -> Result<LookupTable> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut lines = BufReader::new(file).lines();
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    let first = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty table file".into()))??;
    let raw: serde_json::Value = serde_json::from_str(&first).map_err(|e| parse_err(1, e.to_string()))?;
    let version = raw.get("version").and_then(|v| v.as_u64());
    if version != Some(TABLE_VERSION as u64) {
        return Err(Error::Version {
            found: version.unwrap_or(0) as u32,
            supported: TABLE_VERSION,
        });
    }
    let header: Header = serde_json::from_value(raw).map_err(|e| parse_err(1, e.to_string()))?;
    if header.format != TABLE_FORMAT {
        return Err(parse_err(1, format!("unexpected format tag {:?}", header.format)));
    }

    let mut table = LookupTable::new(
        header.dims,
        header.quantiles,
        header.k,
        header.eps_w,
        header.tau_multiplier,
    );
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: RecordLine = serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        if r.quantiles.len() != header.dims * header.quantiles {
            return Err(parse_err(
                lineno,
                "sketch has the wrong number of quantiles".into(),
            ));
        }
        if !(0.0..=1.0).contains(&r.perf) {
            return Err(parse_err(lineno, format!("perf {} outside [0, 1]", r.perf)));
        }
        table.push_record(LookupRecord {
            sketch: QuantileSketch {
                dims: header.dims,
                levels: header.quantiles,
                quantiles: r.quantiles,
            },
            perf: r.perf,
            member_ids: r.member_ids,
            seed: r.seed,
            cycle_index: r.cycle_index,
        })?;
    }
    if table.records.len() != header.records {
        return Err(parse_err(
            0,
            format!(
                "header announces {} records, file holds {}",
                header.records,
                table.records.len()
            ),
        ));
    }
    let stats_match = |stored: Option<f64>, derived: f64| match stored {
        Some(s) => s == derived,
        None => derived.is_nan(),
    };
    if !stats_match(header.mu_d, table.mu_d) || !stats_match(header.sigma_d, table.sigma_d) {
        return Err(parse_err(
            1,
            "distance statistics disagree with the records".into(),
        ));
    }
    Ok(table)
}
