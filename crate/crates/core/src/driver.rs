//! The pool-based active-learning loop and the selection strategies.

use std::str::FromStr;
use std::time::Instant;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{
    agent_forward, select_top_b, train_agent, AgentConfig, AgentParams, EstimatorOutput,
    PerformanceEstimator, TrainConfig,
};
use crate::error::{Error, Result};
use crate::lookup::{
    build_sketch, build_table, estimate_performance, random_subset, LookupRecord, LookupTable, TableParams,
};
use crate::numerics::{squared_distance, Matrix};
use crate::oracle::{class_centroids, evaluate, proxy_performance, OracleKind, SyntheticTask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Mgral,
    Random,
    Entropy,
    Coreset,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Mgral,
        Strategy::Random,
        Strategy::Entropy,
        Strategy::Coreset,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Mgral => "mgral",
            Strategy::Random => "random",
            Strategy::Entropy => "entropy",
            Strategy::Coreset => "coreset",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Strategy::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!(
                    "unknown strategy {s:?}; valid strategies: {}",
                    names.join(", ")
                ))
            })
    }
}

/// Agent architecture settings; the feature dimension and budget come from
/// the task and the active-learning config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentSettings {
    pub hidden_dim: usize,
    pub decoder_hidden: usize,
    pub temperature: f64,
    pub init_scale: f64,
}

impl Default for AgentSettings {
    fn default() -> Self {
        let d = AgentConfig::default();
        AgentSettings {
            hidden_dim: d.hidden_dim,
            decoder_hidden: d.decoder_hidden,
            temperature: d.temperature,
            init_scale: d.init_scale,
        }
    }
}

impl AgentSettings {
    pub fn agent_config(&self, feat_dim: usize, budget: usize) -> AgentConfig {
        AgentConfig {
            feat_dim,
            hidden_dim: self.hidden_dim,
            decoder_hidden: self.decoder_hidden,
            budget,
            temperature: self.temperature,
            init_scale: self.init_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ALConfig {
    pub initial_labeled: usize,
    pub budget: usize,
    pub cycles: usize,
    pub strategy: Strategy,
    pub oracle: OracleKind,
    pub agent: AgentSettings,
    pub train: TrainConfig,
    pub table: TableParams,
    /// Number of seeded permutations whose scores are averaged at inference.
    pub inference_passes: usize,
    pub warm_start: bool,
}

impl Default for ALConfig {
    fn default() -> Self {
        ALConfig {
            initial_labeled: 50,
            budget: 25,
            cycles: 5,
            strategy: Strategy::Mgral,
            oracle: OracleKind::Coverage,
            agent: AgentSettings::default(),
            train: TrainConfig::default(),
            table: TableParams::default(),
            inference_passes: 1,
            warm_start: false,
        }
    }
}

impl ALConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if self.inference_passes == 0 {
            return Err(Error::Config("inference_passes must be at least 1".into()));
        }
        self.agent.agent_config(1, self.budget).validate()?;
        self.train.validate()?;
        self.table.validate()
    }

    pub fn validate_for(&self, task: &SyntheticTask) -> Result<()> {
        self.validate()?;
        let needed = self.initial_labeled + self.cycles * self.budget;
        if needed > task.pool_size() {
            return Err(Error::Config(format!(
                "initial_labeled + cycles * budget = {needed} exceeds pool size {}",
                task.pool_size()
            )));
        }
        Ok(())
    }
}

/// Labeled/unlabeled partition of the pool; both lists stay sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct ALState {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub cycle: usize,
    pub current_perf: f64,
    pub agent_params: Option<AgentParams>,
}

impl ALState {
    pub fn new(labeled: &[usize], task: &SyntheticTask, kind: OracleKind) -> Result<Self> {
        let n = task.pool_size();
        let mut in_labeled = vec![false; n];
        for &i in labeled {
            if i >= n {
                return Err(Error::UnknownId(i));
            }
            in_labeled[i] = true;
        }
        let labeled: Vec<usize> = (0..n).filter(|&i| in_labeled[i]).collect();
        let unlabeled = (0..n).filter(|&i| !in_labeled[i]).collect();
        let current_perf = evaluate(kind, &labeled, task)?;
        Ok(ALState {
            labeled,
            unlabeled,
            cycle: 0,
            current_perf,
            agent_params: None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseDurations {
    pub table_ms: f64,
    pub train_ms: f64,
    pub select_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleLog {
    pub cycle: usize,
    pub labeled_size: usize,
    pub perf: f64,
    pub selected: Vec<usize>,
    pub train_iterations: usize,
    pub fallback_count: usize,
    pub table_records: usize,
    pub durations: PhaseDurations,
}

fn check_budget(available: usize, budget: usize) -> Result<()> {
    if budget == 0 || budget > available {
        return Err(Error::invalid(format!(
            "budget {budget} must lie in 1..={available}"
        )));
    }
    Ok(())
}

/// Uniform `budget`-subset of the unlabeled ids, returned sorted.
pub fn baseline_random<R: Rng + ?Sized>(
    unlabeled_ids: &[usize],
    budget: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_budget(unlabeled_ids.len(), budget)?;
    let mut picked: Vec<usize> = unlabeled_ids.choose_multiple(rng, budget).copied().collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Highest predictive entropy under softmax(−distance) to the labeled class
/// centroids. Ties go to the lowest id.
pub fn baseline_entropy(
    unlabeled_ids: &[usize],
    labeled_ids: &[usize],
    task: &SyntheticTask,
    budget: usize,
) -> Result<Vec<usize>> {
    check_budget(unlabeled_ids.len(), budget)?;
    let centroids = class_centroids(task, labeled_ids.iter().map(|&i| (i, task.pool_labels[i])));
    let present: Vec<&Vec<f64>> = centroids.iter().flatten().collect();
    if present.is_empty() {
        return Err(Error::invalid(
            "entropy sampling needs at least one labeled class",
        ));
    }
    let mut ids = unlabeled_ids.to_vec();
    ids.sort_unstable();
    let entropies: Vec<f64> = ids
        .iter()
        .map(|&i| {
            let x = task.pool_features.row(i);
            let neg: Vec<f64> = present.iter().map(|c| -squared_distance(c, x).sqrt()).collect();
            let max = neg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = neg.iter().map(|v| (v - max).exp()).collect();
            let total: f64 = w.iter().sum();
            w.iter()
                .map(|wi| wi / total)
                .filter(|&p| p > 0.0)
                .map(|p| -p * p.ln())
                .sum::<f64>()
                .max(0.0)
        })
        .collect();
    let mask = select_top_b(&entropies, budget)?;
    Ok(ids
        .into_iter()
        .zip(mask)
        .filter(|(_, m)| *m)
        .map(|(i, _)| i)
        .collect())
}

/// Greedy k-center: repeatedly take the unlabeled point farthest from
/// everything labeled or already picked. Ties go to the lowest id. Returns
/// ids in pick order.
pub fn baseline_coreset(
    unlabeled_ids: &[usize],
    labeled_ids: &[usize],
    pool_features: &Matrix,
    budget: usize,
) -> Result<Vec<usize>> {
    check_budget(unlabeled_ids.len(), budget)?;
    let mut ids = unlabeled_ids.to_vec();
    ids.sort_unstable();
    let mut min_dist: Vec<f64> = ids
        .iter()
        .map(|&i| {
            labeled_ids
                .iter()
                .map(|&l| squared_distance(pool_features.row(i), pool_features.row(l)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut taken = vec![false; ids.len()];
    let mut picks = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best = None;
        for (pos, &d) in min_dist.iter().enumerate() {
            if taken[pos] {
                continue;
            }
            match best {
                None => best = Some(pos),
                Some(b) if d > min_dist[b] => best = Some(pos),
                _ => {}
            }
        }
        let pos = best.expect("budget does not exceed the unlabeled count");
        taken[pos] = true;
        picks.push(ids[pos]);
        let center = pool_features.row(ids[pos]);
        for (q, &id) in ids.iter().enumerate() {
            if !taken[q] {
                min_dist[q] = min_dist[q].min(squared_distance(pool_features.row(id), center));
            }
        }
    }
    Ok(picks)
}

/// Reward source for agent training: table lookup with direct proxy
/// evaluation on fallback.
pub struct LookupEstimator<'a> {
    pub table: LookupTable,
    pub task: &'a SyntheticTask,
    pub kind: OracleKind,
    pub labeled: &'a [usize],
    /// Maps agent pool positions to global pool ids.
    pub positions: &'a [usize],
    pub append_fallback: bool,
    pub cycle: usize,
    pub fallbacks: usize,
}

impl PerformanceEstimator for LookupEstimator<'_> {
    fn estimate(&mut self, selected: &[usize]) -> Result<EstimatorOutput> {
        let ids: Vec<usize> = selected.iter().map(|&p| self.positions[p]).collect();
        let sketch = build_sketch(&self.task.pool_features.select_rows(&ids), self.table.quantiles)?;
        let est = estimate_performance(&self.table, &sketch)?;
        if let Some(value) = est.value {
            return Ok(EstimatorOutput {
                value,
                fallback: false,
            });
        }
        self.fallbacks += 1;
        let value = proxy_performance(self.labeled, &ids, self.task, self.kind)?;
        if self.append_fallback {
            let mut member_ids = ids;
            member_ids.sort_unstable();
            self.table.push_record(LookupRecord {
                sketch,
                perf: value,
                member_ids,
                seed: 0,
                cycle_index: self.cycle,
            })?;
        }
        Ok(EstimatorOutput {
            value,
            fallback: true,
        })
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// One train–select–annotate round.
pub fn run_cycle<R: Rng + ?Sized>(
    state: &ALState,
    strategy: Strategy,
    task: &SyntheticTask,
    cfg: &ALConfig,
    rng: &mut R,
) -> Result<(ALState, CycleLog)> {
    let b = cfg.budget;
    if state.unlabeled.len() < b {
        return Err(Error::invalid(format!(
            "only {} unlabeled samples left for a budget of {b}",
            state.unlabeled.len()
        )));
    }
    let start = Instant::now();
    let mut durations = PhaseDurations::default();
    let mut train_iterations = 0;
    let mut fallback_count = 0;
    let mut table_records = 0;
    let mut next_params = None;

    let selected = match strategy {
        Strategy::Random => {
            let t = Instant::now();
            let s = baseline_random(&state.unlabeled, b, rng)?;
            durations.select_ms = ms_since(t);
            s
        }
        Strategy::Entropy => {
            let t = Instant::now();
            let s = baseline_entropy(&state.unlabeled, &state.labeled, task, b)?;
            durations.select_ms = ms_since(t);
            s
        }
        Strategy::Coreset => {
            let t = Instant::now();
            let s = baseline_coreset(&state.unlabeled, &state.labeled, &task.pool_features, b)?;
            durations.select_ms = ms_since(t);
            s
        }
        Strategy::Mgral => {
            let table_seed: u64 = rng.random();
            let train_seed: u64 = rng.random();
            let infer_seed: u64 = rng.random();

            let t = Instant::now();
            let kind = cfg.oracle;
            let table = build_table(
                &task.pool_features,
                &state.unlabeled,
                &state.labeled,
                |l, c| proxy_performance(l, c, task, kind),
                &cfg.table,
                b,
                table_seed,
                state.cycle,
            )?;
            durations.table_ms = ms_since(t);

            let t = Instant::now();
            let pool = task.pool_features.select_rows(&state.unlabeled);
            let agent_cfg = cfg.agent.agent_config(task.pool_features.cols, b);
            let mut train_rng = ChaCha8Rng::seed_from_u64(train_seed);
            let init = match (&state.agent_params, cfg.warm_start) {
                (Some(p), true) => p.clone(),
                _ => AgentParams::init(&agent_cfg, &mut train_rng),
            };
            let mut estimator = LookupEstimator {
                table,
                task,
                kind,
                labeled: &state.labeled,
                positions: &state.unlabeled,
                append_fallback: cfg.table.append_fallback,
                cycle: state.cycle,
                fallbacks: 0,
            };
            let (params, history) = train_agent(
                &pool,
                &mut estimator,
                &agent_cfg,
                &cfg.train,
                init,
                &mut train_rng,
            )?;
            durations.train_ms = ms_since(t);
            train_iterations = history.len();
            fallback_count = estimator.fallbacks;
            table_records = estimator.table.len();

            let t = Instant::now();
            let mut infer_rng = ChaCha8Rng::seed_from_u64(infer_seed);
            let mut scores = vec![0.0; pool.rows];
            let mut order: Vec<usize> = (0..pool.rows).collect();
            for _ in 0..cfg.inference_passes {
                order.shuffle(&mut infer_rng);
                let (_, s) = agent_forward(&pool, &order, &params)?;
                scores.iter_mut().zip(&s).for_each(|(a, v)| *a += v);
            }
            let mask = select_top_b(&scores, b)?;
            durations.select_ms = ms_since(t);
            next_params = Some(params);
            state
                .unlabeled
                .iter()
                .zip(mask)
                .filter(|(_, m)| *m)
                .map(|(&i, _)| i)
                .collect()
        }
    };

    let mut is_selected = vec![false; task.pool_size()];
    for &i in &selected {
        is_selected[i] = true;
    }
    if selected.len() != b || state.labeled.iter().any(|&i| is_selected[i]) {
        return Err(Error::invalid("strategy returned an invalid selection"));
    }
    let mut labeled: Vec<usize> = state.labeled.iter().chain(&selected).copied().collect();
    labeled.sort_unstable();
    let unlabeled: Vec<usize> = state
        .unlabeled
        .iter()
        .copied()
        .filter(|&i| !is_selected[i])
        .collect();
    let perf = evaluate(cfg.oracle, &labeled, task)?;
    durations.total_ms = ms_since(start);

    let next = ALState {
        labeled,
        unlabeled,
        cycle: state.cycle + 1,
        current_perf: perf,
        agent_params: next_params.or_else(|| state.agent_params.clone()),
    };
    let log = CycleLog {
        cycle: next.cycle,
        labeled_size: next.labeled.len(),
        perf,
        selected,
        train_iterations,
        fallback_count,
        table_records,
        durations,
    };
    Ok((next, log))
}

/// The seeded initial labeled set and the generator that drives the
/// remaining cycles of an experiment.
pub fn initial_state(cfg: &ALConfig, task: &SyntheticTask, seed: u64) -> Result<(ALState, ChaCha8Rng)> {
    cfg.validate_for(task)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<usize> = (0..task.pool_size()).collect();
    let initial = random_subset(&all, cfg.initial_labeled, &mut rng);
    Ok((ALState::new(&initial, task, cfg.oracle)?, rng))
}

/// Builds the lookup table the first selection cycle of `seed` would use.
pub fn initial_table(cfg: &ALConfig, task: &SyntheticTask, seed: u64) -> Result<(ALState, LookupTable)> {
    let (state, mut rng) = initial_state(cfg, task, seed)?;
    let table_seed: u64 = rng.random();
    let kind = cfg.oracle;
    let table = build_table(
        &task.pool_features,
        &state.unlabeled,
        &state.labeled,
        |l, c| proxy_performance(l, c, task, kind),
        &cfg.table,
        cfg.budget,
        table_seed,
        state.cycle,
    )?;
    Ok((state, table))
}

/// Full experiment: a seeded initial labeled set, a cycle-0 log, then one
/// log per cycle.
pub fn run_experiment(cfg: &ALConfig, task: &SyntheticTask, seed: u64) -> Result<Vec<CycleLog>> {
    let (mut state, mut rng) = initial_state(cfg, task, seed)?;
    let mut logs = vec![CycleLog {
        cycle: 0,
        labeled_size: state.labeled.len(),
        perf: state.current_perf,
        selected: state.labeled.clone(),
        train_iterations: 0,
        fallback_count: 0,
        table_records: 0,
        durations: PhaseDurations::default(),
    }];
    for _ in 0..cfg.cycles {
        let (next, log) = run_cycle(&state, cfg.strategy, task, cfg, &mut rng)?;
        state = next;
        logs.push(log);
    }
    Ok(logs)
}
