//! The batch-selection agent.
//!
//! A single LSTM cell with shared weights scans the unlabeled pool in a given
//! order. Step `i` consumes the sample's feature vector concatenated with the
//! previous step's score (zero for the first step), and a shared two-layer
//! decoder turns the hidden state into a logit. Scores are the logistic of the
//! logits. During training, batches are drawn from the logits with
//! Plackett–Luce sampling and the parameters follow REINFORCE with a moving
//! baseline; at inference the top-B scores are selected.

mod baseline;
mod lstm;
mod policy;
mod train;

pub use baseline::{update_baseline, BaselineMode, BaselineTracker};
pub use lstm::{
    agent_backward, agent_forward, agent_forward_cached, lstm_cell_backward, lstm_cell_forward, CellCache,
    ForwardCache,
};
pub use policy::{
    logprob_logit_grad, reinforce_grad, sample_selection, select_top_b, sequence_logprob, Episode, Selection,
};
pub use train::{train_agent, EstimatorOutput, HistoryEntry, PerformanceEstimator, TrainConfig};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ParamVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub feat_dim: usize,
    pub hidden_dim: usize,
    pub decoder_hidden: usize,
    pub budget: usize,
    pub temperature: f64,
    pub init_scale: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            feat_dim: 32,
            hidden_dim: 64,
            decoder_hidden: 32,
            budget: 25,
            temperature: 1.0,
            init_scale: 0.1,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.feat_dim == 0 || self.hidden_dim == 0 || self.decoder_hidden == 0 {
            return Err(Error::Config("agent dimensions must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("agent budget must be at least 1".into()));
        }
        if self.temperature <= 0.0 || !self.temperature.is_finite() {
            return Err(Error::Config("agent temperature must be positive".into()));
        }
        if self.init_scale < 0.0 || !self.init_scale.is_finite() {
            return Err(Error::Config("agent init_scale must be non-negative".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.feat_dim + 1
    }
}

/// Offsets of each parameter block inside the flat vector.
///
/// LSTM gate rows are stacked in the order input, forget, candidate, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub input: usize,
    pub hidden: usize,
    pub dec_hidden: usize,
    pub w_x: usize,
    pub w_h: usize,
    pub b: usize,
    pub dec_w1: usize,
    pub dec_b1: usize,
    pub dec_w2: usize,
    pub dec_b2: usize,
    pub len: usize,
}

impl Layout {
    pub fn new(feat_dim: usize, hidden: usize, dec_hidden: usize) -> Self {
        let input = feat_dim + 1;
        let g = 4 * hidden;
        let w_x = 0;
        let w_h = w_x + g * input;
        let b = w_h + g * hidden;
        let dec_w1 = b + g;
        let dec_b1 = dec_w1 + dec_hidden * hidden;
        let dec_w2 = dec_b1 + dec_hidden;
        let dec_b2 = dec_w2 + dec_hidden;
        Layout {
            input,
            hidden,
            dec_hidden,
            w_x,
            w_h,
            b,
            dec_w1,
            dec_b1,
            dec_w2,
            dec_b2,
            len: dec_b2 + 1,
        }
    }
}

/// All learnable weights of the LSTM chain and the decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub feat_dim: usize,
    pub hidden_dim: usize,
    pub decoder_hidden: usize,
    pub values: ParamVector,
}

impl AgentParams {
    pub fn zeros(cfg: &AgentConfig) -> Self {
        let layout = Layout::new(cfg.feat_dim, cfg.hidden_dim, cfg.decoder_hidden);
        AgentParams {
            feat_dim: cfg.feat_dim,
            hidden_dim: cfg.hidden_dim,
            decoder_hidden: cfg.decoder_hidden,
            values: ParamVector::zeros(layout.len),
        }
    }

    /// Weights uniform in `[-init_scale, init_scale]`, biases zero.
    pub fn init<R: Rng + ?Sized>(cfg: &AgentConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(cfg);
        let l = p.layout();
        let s = cfg.init_scale;
        let v = p.values.as_mut_slice();
        let weight_ranges = [l.w_x..l.b, l.dec_w1..l.dec_b1, l.dec_w2..l.dec_b2];
        for r in weight_ranges {
            for x in &mut v[r] {
                *x = if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 };
            }
        }
        p
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.feat_dim, self.hidden_dim, self.decoder_hidden)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check(&self) -> Result<Layout> {
        let l = self.layout();
        Error::check_len("agent parameter vector", l.len, self.values.len())?;
        Ok(l)
    }

    /// Same shapes, different values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Error::check_len("agent parameter vector", self.values.len(), values.len())?;
        Ok(AgentParams {
            values: ParamVector(values),
            ..self.clone()
        })
    }

    pub fn gate_bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let l = self.layout();
        let start = l.b + gate as usize * l.hidden;
        &mut self.values.as_mut_slice()[start..start + l.hidden]
    }

    pub fn decoder_bias_mut(&mut self) -> &mut f64 {
        let l = self.layout();
        &mut self.values.as_mut_slice()[l.dec_b2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Candidate = 2,
    Output = 3,
}
