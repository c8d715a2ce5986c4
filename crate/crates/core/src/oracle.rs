//! Synthetic tasks and the performance evaluators that stand in for a
//! trained model's score.
//!
//! Two evaluator families are provided: a label-free weighted cell-coverage
//! score and a nearest-centroid accuracy on a held-out evaluation set. Each
//! has a proxy that scores a candidate batch without its labels.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{squared_distance, Matrix};

pub const TASK_FORMAT: &str = "alcurve-task";
pub const TASK_VERSION: u32 = 1;

/// Which evaluator (and proxy) a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    #[default]
    Coverage,
    Prototype,
}

impl std::fmt::Display for OracleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OracleKind::Coverage => "coverage",
            OracleKind::Prototype => "prototype",
        })
    }
}

/// How cell importances are assigned before normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CellWeighting {
    Uniform,
    /// Importance `1 / (rank + 1)^exponent`. Ranks follow a seeded shuffle,
    /// or ascending cell population when `rare_first` is set.
    Zipf {
        exponent: f64,
        #[serde(default)]
        rare_first: bool,
    },
    Explicit {
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskConfig {
    pub pool_size: usize,
    pub eval_size: usize,
    pub feat_dim: usize,
    pub classes: usize,
    pub cells: usize,
    /// Per-coordinate standard deviation of points around their class mean.
    pub spread: f64,
    /// Per-coordinate standard deviation of the class means.
    pub class_sep: f64,
    /// Relative class frequencies; empty means balanced.
    pub imbalance: Vec<f64>,
    pub coverage_min: usize,
    pub cell_weighting: CellWeighting,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            pool_size: 1000,
            eval_size: 500,
            feat_dim: 32,
            classes: 10,
            cells: 50,
            spread: 1.0,
            class_sep: 1.0,
            imbalance: Vec::new(),
            coverage_min: 1,
            cell_weighting: CellWeighting::Uniform,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.pool_size == 0 || self.eval_size == 0 || self.feat_dim == 0 {
            return bad("pool_size, eval_size and feat_dim must be at least 1");
        }
        if self.classes == 0 || self.cells == 0 || self.coverage_min == 0 {
            return bad("classes, cells and coverage_min must be at least 1");
        }
        if self.classes > self.pool_size {
            return Err(Error::Config(format!(
                "classes ({}) exceeds pool_size ({})",
                self.classes, self.pool_size
            )));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite())
            || !(self.class_sep >= 0.0 && self.class_sep.is_finite())
        {
            return bad("spread and class_sep must be finite and non-negative");
        }
        if !self.imbalance.is_empty() {
            if self.imbalance.len() != self.classes {
                return bad("imbalance must list one ratio per class");
            }
            if self.imbalance.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return bad("imbalance ratios must be positive");
            }
        }
        match &self.cell_weighting {
            CellWeighting::Uniform => {}
            CellWeighting::Zipf { exponent, .. } => {
                if !(exponent.is_finite() && *exponent >= 0.0) {
                    return bad("zipf exponent must be finite and non-negative");
                }
            }
            CellWeighting::Explicit { weights } => {
                if weights.len() != self.cells {
                    return bad("explicit cell weights must list one weight per cell");
                }
                if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || weights.iter().sum::<f64>() <= 0.0
                {
                    return bad("explicit cell weights must be non-negative with positive sum");
                }
            }
        }
        Ok(())
    }
}

/// Pool and evaluation data plus the coverage structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTask {
    pub config: TaskConfig,
    pub seed: u64,
    pub pool_features: Matrix,
    pub pool_labels: Vec<usize>,
    pub eval_features: Matrix,
    pub eval_labels: Vec<usize>,
    pub cells: Vec<usize>,
    pub cell_weights: Vec<f64>,
    pub coverage_min: usize,
}

#[derive(Serialize, Deserialize)]
struct TaskFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    task: SyntheticTask,
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
}

fn gaussian_point<R: Rng>(rng: &mut R, center: &[f64], sd: f64, out: &mut [f64]) {
    for (o, c) in out.iter_mut().zip(center) {
        let z: f64 = StandardNormal.sample(rng);
        *o = c + sd * z;
    }
}

fn draw_class<R: Rng>(rng: &mut R, cumulative: &[f64]) -> usize {
    let u: f64 = rng.random();
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

pub fn generate_synthetic_task(cfg: &TaskConfig, seed: u64) -> Result<SyntheticTask> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = cfg.feat_dim;

    let mut means = Matrix::zeros(cfg.classes, d);
    for c in 0..cfg.classes {
        gaussian_point(&mut rng, &vec![0.0; d], cfg.class_sep, means.row_mut(c));
    }

    let mut ratios = if cfg.imbalance.is_empty() {
        vec![1.0; cfg.classes]
    } else {
        cfg.imbalance.clone()
    };
    normalize(&mut ratios);
    let cumulative: Vec<f64> = ratios
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect();

    let sample = |rng: &mut ChaCha8Rng, n: usize| {
        let mut feats = Matrix::zeros(n, d);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let c = draw_class(rng, &cumulative);
            gaussian_point(rng, means.row(c), cfg.spread, feats.row_mut(i));
            labels.push(c);
        }
        (feats, labels)
    };
    let (pool_features, pool_labels) = sample(&mut rng, cfg.pool_size);
    let (eval_features, eval_labels) = sample(&mut rng, cfg.eval_size);

    // Anchors are spread round-robin over the classes, jittered around the
    // class mean so each class region is split into several cells.
    let mut anchors = Matrix::zeros(cfg.cells, d);
    for g in 0..cfg.cells {
        let c = g % cfg.classes;
        gaussian_point(&mut rng, means.row(c), cfg.spread, anchors.row_mut(g));
    }
    let cells: Vec<usize> = (0..cfg.pool_size)
        .map(|i| nearest_row(&anchors, pool_features.row(i)))
        .collect();

    let mut cell_weights = match &cfg.cell_weighting {
        CellWeighting::Uniform => vec![1.0; cfg.cells],
        CellWeighting::Zipf { exponent, rare_first } => {
            let mut ranked: Vec<usize> = (0..cfg.cells).collect();
            if *rare_first {
                let mut pop = vec![0usize; cfg.cells];
                cells.iter().for_each(|&g| pop[g] += 1);
                ranked.sort_by_key(|&g| (pop[g], g));
            } else {
                ranked.shuffle(&mut rng);
            }
            let mut w = vec![0.0; cfg.cells];
            for (rank, &g) in ranked.iter().enumerate() {
                w[g] = 1.0 / ((rank + 1) as f64).powf(*exponent);
            }
            w
        }
        CellWeighting::Explicit { weights } => weights.clone(),
    };
    normalize(&mut cell_weights);

    Ok(SyntheticTask {
        config: cfg.clone(),
        seed,
        pool_features,
        pool_labels,
        eval_features,
        eval_labels,
        cells,
        cell_weights,
        coverage_min: cfg.coverage_min,
    })
}

fn nearest_row(m: &Matrix, x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for r in 0..m.rows {
        let d = squared_distance(m.row(r), x);
        if d < best_d {
            best_d = d;
            best = r;
        }
    }
    best
}

impl SyntheticTask {
    pub fn pool_size(&self) -> usize {
        self.pool_features.rows
    }

    pub fn num_classes(&self) -> usize {
        self.config.classes
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        let n = self.pool_size();
        match ids.iter().find(|&&i| i >= n) {
            Some(&bad) => Err(Error::UnknownId(bad)),
            None => Ok(()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = TaskFile {
            format: TASK_FORMAT.to_string(),
            version: TASK_VERSION,
            task: self.clone(),
        };
        fs::write(path, serde_json::to_vec(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != TASK_VERSION {
            return Err(Error::Version {
                found: version,
                supported: TASK_VERSION,
            });
        }
        let file: TaskFile = serde_json::from_value(value).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        if file.format != TASK_FORMAT {
            return Err(Error::Parse {
                line: 0,
                message: format!("unexpected format tag {:?}", file.format),
            });
        }
        Ok(file.task)
    }
}

/// Weighted share of cells holding at least `coverage_min` labeled points.
pub fn coverage_performance(labeled_ids: &[usize], task: &SyntheticTask) -> Result<f64> {
    task.check_ids(labeled_ids)?;
    Ok(coverage_of(task, labeled_ids.iter().copied()))
}

fn coverage_of(task: &SyntheticTask, ids: impl Iterator<Item = usize>) -> f64 {
    let mut seen = vec![false; task.pool_size()];
    let mut counts = vec![0usize; task.cell_weights.len()];
    for i in ids {
        if !seen[i] {
            seen[i] = true;
            counts[task.cells[i]] += 1;
        }
    }
    let total: f64 = counts
        .iter()
        .zip(&task.cell_weights)
        .filter(|(c, _)| **c >= task.coverage_min)
        .map(|(_, w)| w)
        .sum();
    total.clamp(0.0, 1.0)
}

/// Per-class centroids of labeled points; `None` for classes with no point.
pub fn class_centroids(
    task: &SyntheticTask,
    labeled: impl IntoIterator<Item = (usize, usize)>,
) -> Vec<Option<Vec<f64>>> {
    let d = task.pool_features.cols;
    let mut sums = vec![vec![0.0; d]; task.num_classes()];
    let mut counts = vec![0usize; task.num_classes()];
    for (id, label) in labeled {
        for (s, x) in sums[label].iter_mut().zip(task.pool_features.row(id)) {
            *s += x;
        }
        counts[label] += 1;
    }
    sums.into_iter()
        .zip(counts)
        .map(|(mut s, c)| {
            (c > 0).then(|| {
                s.iter_mut().for_each(|v| *v /= c as f64);
                s
            })
        })
        .collect()
}

/// Index of the nearest available centroid (lowest class on ties).
pub fn nearest_centroid(centroids: &[Option<Vec<f64>>], x: &[f64]) -> Option<usize> {
    let mut best = None;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        if let Some(m) = centroid {
            let d = squared_distance(m, x);
            if d < best_d {
                best_d = d;
                best = Some(c);
            }
        }
    }
    best
}

fn accuracy(task: &SyntheticTask, centroids: &[Option<Vec<f64>>]) -> f64 {
    if centroids.iter().all(Option::is_none) {
        return 0.0;
    }
    let e = task.eval_features.rows;
    let correct = (0..e)
        .filter(|&i| nearest_centroid(centroids, task.eval_features.row(i)) == Some(task.eval_labels[i]))
        .count();
    correct as f64 / e as f64
}

fn dedup(ids: &[usize]) -> Vec<usize> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Nearest-centroid accuracy on the evaluation set using the true labels of
/// `labeled_ids`. An empty labeled set scores 0.
pub fn prototype_performance(labeled_ids: &[usize], task: &SyntheticTask) -> Result<f64> {
    task.check_ids(labeled_ids)?;
    let ids = dedup(labeled_ids);
    let centroids = class_centroids(task, ids.iter().map(|&i| (i, task.pool_labels[i])));
    Ok(accuracy(task, &centroids))
}

pub fn evaluate(kind: OracleKind, labeled_ids: &[usize], task: &SyntheticTask) -> Result<f64> {
    match kind {
        OracleKind::Coverage => coverage_performance(labeled_ids, task),
        OracleKind::Prototype => prototype_performance(labeled_ids, task),
    }
}

/// Scores `labeled ∪ candidates` without looking at candidate labels.
///
/// Coverage ignores labels, so the proxy is exact. For the prototype kind the
/// candidates are pseudo-labeled by the labeled-only centroid model, then
/// centroids are refit on labeled plus pseudo-labeled points.
pub fn proxy_performance(
    labeled_ids: &[usize],
    candidate_ids: &[usize],
    task: &SyntheticTask,
    kind: OracleKind,
) -> Result<f64> {
    task.check_ids(labeled_ids)?;
    task.check_ids(candidate_ids)?;
    let labeled = dedup(labeled_ids);
    let candidates = dedup(candidate_ids);
    if let Some(&c) = candidates.iter().find(|c| labeled.binary_search(c).is_ok()) {
        return Err(Error::Overlap(c));
    }
    match kind {
        OracleKind::Coverage => Ok(coverage_of(task, labeled.iter().chain(&candidates).copied())),
        OracleKind::Prototype => {
            let base = class_centroids(task, labeled.iter().map(|&i| (i, task.pool_labels[i])));
            if candidates.is_empty() || base.iter().all(Option::is_none) {
                return Ok(accuracy(task, &base));
            }
            let pseudo = candidates.iter().map(|&i| {
                let label =
                    nearest_centroid(&base, task.pool_features.row(i)).expect("at least one centroid exists");
                (i, label)
            });
            let refit = class_centroids(
                task,
                labeled
                    .iter()
                    .map(|&i| (i, task.pool_labels[i]))
                    .collect::<Vec<_>>()
                    .into_iter()
                    .chain(pseudo),
            );
            Ok(accuracy(task, &refit))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_cfg() -> TaskConfig {
        TaskConfig {
            pool_size: 200,
            eval_size: 100,
            feat_dim: 4,
            classes: 3,
            cells: 8,
            ..TaskConfig::default()
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_synthetic_task(&small_cfg(), 9).unwrap();
        let b = generate_synthetic_task(&small_cfg(), 9).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_task(&small_cfg(), 10).unwrap();
        assert_ne!(a.pool_features, c.pool_features);
    }

    #[test]
    fn labels_and_weights_are_well_formed() {
        let t = generate_synthetic_task(&small_cfg(), 1).unwrap();
        assert!(t.pool_labels.iter().chain(&t.eval_labels).all(|&l| l < 3));
        assert!((t.cell_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(t.cells.iter().all(|&g| g < 8));
    }

    #[test]
    fn imbalance_ratio_is_respected() {
        let cfg = TaskConfig {
            pool_size: 1000,
            classes: 2,
            imbalance: vec![9.0, 1.0],
            ..small_cfg()
        };
        for seed in 0..5 {
            let t = generate_synthetic_task(&cfg, seed).unwrap();
            let zeros = t.pool_labels.iter().filter(|&&l| l == 0).count();
            assert!((850..=950).contains(&zeros), "seed {seed}: {zeros}");
        }
    }

    #[test]
    fn degenerate_config_is_rejected() {
        let cfg = TaskConfig {
            pool_size: 2,
            classes: 3,
            ..small_cfg()
        };
        assert!(matches!(generate_synthetic_task(&cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn zipf_rare_first_favors_small_cells() {
        let cfg = TaskConfig {
            cell_weighting: CellWeighting::Zipf {
                exponent: 1.0,
                rare_first: true,
            },
            ..small_cfg()
        };
        let t = generate_synthetic_task(&cfg, 4).unwrap();
        let mut pop = [0usize; 8];
        t.cells.iter().for_each(|&g| pop[g] += 1);
        let heaviest = (0..8)
            .max_by(|&a, &b| t.cell_weights[a].total_cmp(&t.cell_weights[b]))
            .unwrap();
        assert_eq!(pop[heaviest], *pop.iter().min().unwrap());
    }

    fn two_cell_task() -> SyntheticTask {
        let pool = Matrix::from_rows(&[vec![0.0], vec![0.1], vec![5.0]]).unwrap();
        SyntheticTask {
            config: TaskConfig {
                pool_size: 3,
                eval_size: 1,
                feat_dim: 1,
                classes: 2,
                cells: 2,
                ..TaskConfig::default()
            },
            seed: 0,
            pool_features: pool,
            pool_labels: vec![0, 0, 1],
            eval_features: Matrix::from_rows(&[vec![0.0]]).unwrap(),
            eval_labels: vec![0],
            cells: vec![0, 0, 1],
            cell_weights: vec![0.7, 0.3],
            coverage_min: 1,
        }
    }

    #[test]
    fn coverage_examples() {
        let t = two_cell_task();
        assert_eq!(coverage_performance(&[], &t).unwrap(), 0.0);
        assert_eq!(coverage_performance(&[1], &t).unwrap(), 0.7);
        assert!((coverage_performance(&[0, 1, 2], &t).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(coverage_performance(&[3], &t), Err(Error::UnknownId(3))));
        let mut t2 = t.clone();
        t2.coverage_min = 2;
        assert_eq!(coverage_performance(&[0, 2], &t2).unwrap(), 0.0);
        assert_eq!(coverage_performance(&[0, 1], &t2).unwrap(), 0.7);
    }

    #[test]
    fn prototype_single_class_predicts_that_class() {
        let t = generate_synthetic_task(&small_cfg(), 2).unwrap();
        let zero_ids: Vec<usize> = (0..t.pool_size())
            .filter(|&i| t.pool_labels[i] == 0)
            .take(5)
            .collect();
        let acc = prototype_performance(&zero_ids, &t).unwrap();
        let frac = t.eval_labels.iter().filter(|&&l| l == 0).count() as f64 / t.eval_labels.len() as f64;
        assert_eq!(acc, frac);
        assert_eq!(prototype_performance(&[], &t).unwrap(), 0.0);
    }

    #[test]
    fn separable_task_is_solved_by_one_point_per_class() {
        let cfg = TaskConfig {
            pool_size: 300,
            eval_size: 300,
            feat_dim: 4,
            classes: 3,
            cells: 3,
            spread: 0.1,
            class_sep: 10.0,
            ..TaskConfig::default()
        };
        let mut t = generate_synthetic_task(&cfg, 3).unwrap();
        // Plant one pool point exactly at each empirical class mean.
        let mut ids = Vec::new();
        for c in 0..3 {
            let members: Vec<usize> = (0..t.pool_size()).filter(|&i| t.pool_labels[i] == c).collect();
            let mut mean = vec![0.0; 4];
            for &i in &members {
                for (m, x) in mean.iter_mut().zip(t.pool_features.row(i)) {
                    *m += x / members.len() as f64;
                }
            }
            t.pool_features.row_mut(members[0]).copy_from_slice(&mean);
            ids.push(members[0]);
        }
        assert!(prototype_performance(&ids, &t).unwrap() > 0.99);
    }

    #[test]
    fn proxy_edge_cases() {
        let t = generate_synthetic_task(&small_cfg(), 5).unwrap();
        let labeled = [0, 3, 7, 20, 41];
        for kind in [OracleKind::Coverage, OracleKind::Prototype] {
            assert_eq!(
                proxy_performance(&labeled, &[], &t, kind).unwrap(),
                evaluate(kind, &labeled, &t).unwrap()
            );
            assert!(matches!(
                proxy_performance(&labeled, &[3, 9], &t, kind),
                Err(Error::Overlap(3))
            ));
        }
        let cands = [1, 2, 50, 60];
        let all = [0, 3, 7, 20, 41, 1, 2, 50, 60];
        assert_eq!(
            proxy_performance(&labeled, &cands, &t, OracleKind::Coverage).unwrap(),
            coverage_performance(&all, &t).unwrap()
        );
    }

    #[test]
    fn task_file_roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let t = generate_synthetic_task(&small_cfg(), 6).unwrap();
        let path = dir.path().join("task.json");
        t.save(&path).unwrap();
        assert_eq!(SyntheticTask::load(&path).unwrap(), t);
        assert!(matches!(
            SyntheticTask::load(&dir.path().join("missing.json")),
            Err(Error::NotFound(_))
        ));
        let text = fs::read_to_string(&path)
            .unwrap()
            .replacen("\"version\":1", "\"version\":7", 1);
        fs::write(&path, text).unwrap();
        assert!(matches!(
            SyntheticTask::load(&path),
            Err(Error::Version { found: 7, .. })
        ));
    }

    proptest! {
        #[test]
        fn coverage_is_monotone_and_bounded(seed in 0u64..200, cut in 0usize..60, extra in 0usize..60) {
            let t = generate_synthetic_task(&small_cfg(), seed % 7).unwrap();
            let mut ids: Vec<usize> = (0..t.pool_size()).collect();
            ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let small = &ids[..cut];
            let big = &ids[..cut + extra];
            let (a, b) = (coverage_performance(small, &t).unwrap(), coverage_performance(big, &t).unwrap());
            prop_assert!(a <= b);
            prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
            let p = prototype_performance(big, &t).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert_eq!(p, prototype_performance(big, &t).unwrap());
        }
    }
}
