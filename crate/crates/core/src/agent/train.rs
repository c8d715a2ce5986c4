use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{adam_step, AdamHyper, AdamState, Matrix};

use super::lstm::agent_forward_cached;
use super::policy::{reinforce_grad_cached, sample_selection, Episode};
use super::{update_baseline, AgentConfig, AgentParams, BaselineMode, BaselineTracker};

/// Outer-loop hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub iterations: usize,
    pub lambda: f64,
    pub baseline_mode: BaselineMode,
    pub adam: AdamHyper,
    pub grad_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 200,
            lambda: 0.5,
            baseline_mode: BaselineMode::StandardEma,
            adam: AdamHyper::default(),
            grad_clip: 5.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config("lambda must lie in [0, 1]".into()));
        }
        if self.grad_clip.is_nan() || self.grad_clip <= 0.0 {
            return Err(Error::Config("grad_clip must be positive".into()));
        }
        self.adam.validate().map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOutput {
    pub value: f64,
    pub fallback: bool,
}

/// Maps a selected set of pool positions (sorted ascending) to a performance
/// value.
pub trait PerformanceEstimator {
    fn estimate(&mut self, selected: &[usize]) -> Result<EstimatorOutput>;
}

impl<F> PerformanceEstimator for F
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    fn estimate(&mut self, selected: &[usize]) -> Result<EstimatorOutput> {
        Ok(EstimatorOutput {
            value: self(selected)?,
            fallback: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub estimate: f64,
    pub advantage: f64,
    pub fallback: bool,
    pub grad_norm: f64,
}

/// REINFORCE training of the agent against `estimator`.
///
/// Each iteration shuffles the pool, runs the agent, samples a batch, and
/// takes one clipped Adam step on `-(reward - reference) * logprob`. The
/// reference starts at the first observed reward.
pub fn train_agent<R, E>(
    pool_features: &Matrix,
    estimator: &mut E,
    agent_cfg: &AgentConfig,
    train_cfg: &TrainConfig,
    mut params: AgentParams,
    rng: &mut R,
) -> Result<(AgentParams, Vec<HistoryEntry>)>
where
    R: Rng + ?Sized,
    E: PerformanceEstimator + ?Sized,
{
    agent_cfg.validate()?;
    train_cfg.validate()?;
    params.check()?;
    let n = pool_features.rows;
    if train_cfg.iterations > 0 && agent_cfg.budget > n {
        return Err(Error::invalid(format!(
            "budget {} exceeds pool size {n}",
            agent_cfg.budget
        )));
    }

    let mut adam = AdamState::new(params.len());
    let mut tracker = BaselineTracker::new(train_cfg.lambda, train_cfg.baseline_mode);
    let mut history = Vec::with_capacity(train_cfg.iterations);
    let mut order: Vec<usize> = (0..n).collect();

    for iteration in 0..train_cfg.iterations {
        order.shuffle(rng);
        let cache = agent_forward_cached(pool_features, &order, &params)?;
        let selection = sample_selection(&cache.logits, agent_cfg.budget, agent_cfg.temperature, rng)?;
        let episode = Episode::from_parts(&cache, selection, agent_cfg.temperature);
        let out = estimator
            .estimate(&episode.selected())
            .map_err(|e| Error::Estimator {
                iteration,
                source: Box::new(e),
            })?;
        if !out.value.is_finite() {
            return Err(Error::Estimator {
                iteration,
                source: Box::new(Error::NonFinite("estimated performance".into())),
            });
        }
        if iteration == 0 {
            tracker.reference = out.value;
        }
        let advantage = out.value - tracker.reference;
        tracker = update_baseline(tracker, out.value);

        let mut grads = reinforce_grad_cached(&cache, &episode, advantage, &params)?;
        let grad_norm = grads.clip_norm(train_cfg.grad_clip);
        adam_step(&mut params.values, &grads, &mut adam, &train_cfg.adam)?;
        history.push(HistoryEntry {
            iteration,
            estimate: out.value,
            advantage,
            fallback: out.fallback,
            grad_norm,
        });
    }
    Ok((params, history))
}
