use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, ParamVector};

use super::lstm::{agent_backward, agent_forward_cached, ForwardCache};
use super::AgentParams;

/// Deterministic top-B mask. Ties go to the lowest original index.
pub fn select_top_b(scores: &[f64], budget: usize) -> Result<Vec<bool>> {
    check_budget(scores.len(), budget)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut mask = vec![false; scores.len()];
    for &i in &idx[..budget] {
        mask[i] = true;
    }
    Ok(mask)
}

fn check_budget(n: usize, budget: usize) -> Result<()> {
    if budget == 0 || budget > n {
        return Err(Error::invalid(format!("budget {budget} must lie in 1..={n}")));
    }
    Ok(())
}

/// A sampled batch: the draw sequence, its mask and log-probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub mask: Vec<bool>,
    pub picks: Vec<usize>,
    pub logprob: f64,
}

/// Draws `budget` distinct items one at a time, each with probability
/// proportional to `exp(logit / temperature)` among the items still left.
pub fn sample_selection<R: Rng + ?Sized>(
    logits: &[f64],
    budget: usize,
    temperature: f64,
    rng: &mut R,
) -> Result<Selection> {
    check_budget(logits.len(), budget)?;
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::invalid("temperature must be positive"));
    }
    let n = logits.len();
    let mut mask = vec![false; n];
    let mut picks = Vec::with_capacity(budget);
    let mut logprob = 0.0;
    let mut weights = vec![0.0; n];
    for _ in 0..budget {
        let max = (0..n)
            .filter(|&j| !mask[j])
            .map(|j| logits[j])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for j in 0..n {
            weights[j] = if mask[j] {
                0.0
            } else {
                ((logits[j] - max) / temperature).exp()
            };
            total += weights[j];
        }
        let mut u = rng.random::<f64>() * total;
        let mut chosen = None;
        for j in 0..n {
            if mask[j] {
                continue;
            }
            chosen = Some(j);
            if u < weights[j] {
                break;
            }
            u -= weights[j];
        }
        let j = chosen.expect("at least one item remains");
        logprob += (weights[j] / total).ln();
        mask[j] = true;
        picks.push(j);
    }
    Ok(Selection {
        mask,
        picks,
        logprob: logprob.min(0.0),
    })
}

/// Log-probability of an ordered draw sequence under Plackett–Luce.
pub fn sequence_logprob(logits: &[f64], picks: &[usize], temperature: f64) -> f64 {
    let mut taken = vec![false; logits.len()];
    let mut lp = 0.0;
    for &s in picks {
        let max = (0..logits.len())
            .filter(|&j| !taken[j])
            .map(|j| logits[j])
            .fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = (0..logits.len())
            .filter(|&j| !taken[j])
            .map(|j| ((logits[j] - max) / temperature).exp())
            .sum();
        lp += (logits[s] - max) / temperature - total.ln();
        taken[s] = true;
    }
    lp
}

/// Gradient of the draw-sequence log-probability with respect to the logits.
pub fn logprob_logit_grad(logits: &[f64], picks: &[usize], temperature: f64) -> Vec<f64> {
    let n = logits.len();
    let mut taken = vec![false; n];
    let mut grad = vec![0.0; n];
    let mut w = vec![0.0; n];
    for &s in picks {
        let max = (0..n)
            .filter(|&j| !taken[j])
            .map(|j| logits[j])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for j in 0..n {
            w[j] = if taken[j] {
                0.0
            } else {
                ((logits[j] - max) / temperature).exp()
            };
            total += w[j];
        }
        for j in 0..n {
            grad[j] -= w[j] / total / temperature;
        }
        grad[s] += 1.0 / temperature;
        taken[s] = true;
    }
    grad
}

/// One selection rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub order: Vec<usize>,
    pub logits: Vec<f64>,
    pub scores: Vec<f64>,
    pub mask: Vec<bool>,
    pub picks: Vec<usize>,
    pub logprob: f64,
    pub temperature: f64,
}

impl Episode {
    pub fn from_parts(cache: &ForwardCache, selection: Selection, temperature: f64) -> Self {
        Episode {
            order: cache.order.clone(),
            logits: cache.logits.clone(),
            scores: cache.scores.clone(),
            mask: selection.mask,
            picks: selection.picks,
            logprob: selection.logprob,
            temperature,
        }
    }

    pub fn selected(&self) -> Vec<usize> {
        let mut ids = self.picks.clone();
        ids.sort_unstable();
        ids
    }
}

/// Gradient of `-(reward - baseline) * logprob(episode)` with respect to the
/// agent parameters. The forward pass is recomputed along the episode's
/// order, so the episode must come from these parameters and features.
pub fn reinforce_grad(
    episode: &Episode,
    reward: f64,
    baseline: f64,
    features: &Matrix,
    params: &AgentParams,
) -> Result<ParamVector> {
    let n = features.rows;
    Error::check_len("episode mask", n, episode.mask.len())?;
    Error::check_len("episode logits", n, episode.logits.len())?;
    Error::check_len("episode order", n, episode.order.len())?;
    let cache = agent_forward_cached(features, &episode.order, params)?;
    let stale = cache
        .logits
        .iter()
        .zip(&episode.logits)
        .any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + a.abs()));
    if stale {
        return Err(Error::invalid(
            "episode logits do not match these parameters and features",
        ));
    }
    reinforce_grad_cached(&cache, episode, reward - baseline, params)
}

pub(crate) fn reinforce_grad_cached(
    cache: &ForwardCache,
    episode: &Episode,
    advantage: f64,
    params: &AgentParams,
) -> Result<ParamVector> {
    if advantage == 0.0 {
        return Ok(ParamVector::zeros(params.len()));
    }
    let mut dlogits = logprob_logit_grad(&cache.logits, &episode.picks, episode.temperature);
    for d in &mut dlogits {
        *d *= -advantage;
    }
    agent_backward(params, cache, &dlogits)
}
