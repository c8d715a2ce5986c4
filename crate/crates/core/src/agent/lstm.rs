use crate::error::{Error, Result};
use crate::numerics::{logistic, Matrix, ParamVector};

use super::{AgentParams, Layout};

/// Activations of one LSTM step, kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

impl CellCache {
    pub fn compute(params: &AgentParams, x: &[f64], h: &[f64], c: &[f64]) -> Result<Self> {
        let l = params.check()?;
        Error::check_len("lstm input", l.input, x.len())?;
        Error::check_len("lstm hidden state", l.hidden, h.len())?;
        Error::check_len("lstm cell state", l.hidden, c.len())?;
        Ok(cell_step(
            params.values.as_slice(),
            &l,
            x.to_vec(),
            h.to_vec(),
            c.to_vec(),
        ))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cell_step(p: &[f64], l: &Layout, x: Vec<f64>, h_prev: Vec<f64>, c_prev: Vec<f64>) -> CellCache {
    let hd = l.hidden;
    let mut z = vec![0.0; 4 * hd];
    for (r, zr) in z.iter_mut().enumerate() {
        let wx = &p[l.w_x + r * l.input..l.w_x + (r + 1) * l.input];
        let wh = &p[l.w_h + r * hd..l.w_h + (r + 1) * hd];
        *zr = p[l.b + r] + dot(wx, &x) + dot(wh, &h_prev);
    }
    let i: Vec<f64> = z[..hd].iter().map(|&v| logistic(v)).collect();
    let f: Vec<f64> = z[hd..2 * hd].iter().map(|&v| logistic(v)).collect();
    let g: Vec<f64> = z[2 * hd..3 * hd].iter().map(|v| v.tanh()).collect();
    let o: Vec<f64> = z[3 * hd..].iter().map(|&v| logistic(v)).collect();
    let c: Vec<f64> = (0..hd).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h = (0..hd).map(|k| o[k] * tanh_c[k]).collect();
    CellCache {
        x,
        h_prev,
        c_prev,
        i,
        f,
        g,
        o,
        c,
        tanh_c,
        h,
    }
}

/// One LSTM step: returns the new `(h, c)`.
pub fn lstm_cell_forward(
    x: &[f64],
    h: &[f64],
    c: &[f64],
    params: &AgentParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let cache = CellCache::compute(params, x, h, c)?;
    Ok((cache.h, cache.c))
}

/// Gate pre-activation gradients for one step.
fn gate_grads(cache: &CellCache, dh: &[f64], dc_in: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let hd = cache.h.len();
    let mut dz = vec![0.0; 4 * hd];
    let mut dc_prev = vec![0.0; hd];
    for k in 0..hd {
        let (i, f, g, o, tc) = (cache.i[k], cache.f[k], cache.g[k], cache.o[k], cache.tanh_c[k]);
        let dc = dc_in[k] + dh[k] * o * (1.0 - tc * tc);
        let d_o = dh[k] * tc;
        dz[k] = dc * g * i * (1.0 - i);
        dz[hd + k] = dc * cache.c_prev[k] * f * (1.0 - f);
        dz[2 * hd + k] = dc * i * (1.0 - g * g);
        dz[3 * hd + k] = d_o * o * (1.0 - o);
        dc_prev[k] = dc * f;
    }
    (dz, dc_prev)
}

/// Accumulates weight gradients for one step and returns `dh_prev`.
/// `dx_out` receives the gradient w.r.t. the input for the requested
/// input columns (`dx_from..input`).
fn accumulate_cell(
    p: &[f64],
    l: &Layout,
    cache: &CellCache,
    dz: &[f64],
    grads: &mut [f64],
    dx_from: usize,
    dx_out: &mut [f64],
) -> Vec<f64> {
    let hd = l.hidden;
    let mut dh_prev = vec![0.0; hd];
    for (r, &d) in dz.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let wx = l.w_x + r * l.input;
        for (gw, xv) in grads[wx..wx + l.input].iter_mut().zip(&cache.x) {
            *gw += d * xv;
        }
        for (j, out) in dx_out.iter_mut().enumerate() {
            *out += d * p[wx + dx_from + j];
        }
        let wh = l.w_h + r * hd;
        for (gw, hv) in grads[wh..wh + hd].iter_mut().zip(&cache.h_prev) {
            *gw += d * hv;
        }
        for (dhp, w) in dh_prev.iter_mut().zip(&p[wh..wh + hd]) {
            *dhp += d * w;
        }
        grads[l.b + r] += d;
    }
    dh_prev
}

/// Backward pass through one LSTM step given upstream gradients on `h'` and
/// `c'`. Parameter gradients are accumulated into `grads`; returns
/// `(dx, dh_prev, dc_prev)`.
pub fn lstm_cell_backward(
    params: &AgentParams,
    cache: &CellCache,
    dh: &[f64],
    dc: &[f64],
    grads: &mut ParamVector,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let l = params.check()?;
    Error::check_len("lstm gradient buffer", l.len, grads.len())?;
    Error::check_len("lstm dh", l.hidden, dh.len())?;
    Error::check_len("lstm dc", l.hidden, dc.len())?;
    let (dz, dc_prev) = gate_grads(cache, dh, dc);
    let mut dx = vec![0.0; l.input];
    let dh_prev = accumulate_cell(
        params.values.as_slice(),
        &l,
        cache,
        &dz,
        grads.as_mut_slice(),
        0,
        &mut dx,
    );
    Ok((dx, dh_prev, dc_prev))
}

#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    pub cell: CellCache,
    pub dec_act: Vec<f64>,
    pub score: f64,
}

/// Everything a forward scan keeps for the backward pass. `logits` and
/// `scores` are indexed by original sample position.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub order: Vec<usize>,
    pub logits: Vec<f64>,
    pub scores: Vec<f64>,
    pub(crate) steps: Vec<StepCache>,
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    Error::check_len("pool order", n, order.len())?;
    let mut seen = vec![false; n];
    for &o in order {
        if o >= n || seen[o] {
            return Err(Error::invalid(format!(
                "order is not a permutation of 0..{n} (offending entry {o})"
            )));
        }
        seen[o] = true;
    }
    Ok(())
}

/// Scans the pool in `order` and returns `(logits, scores)` by original
/// position.
pub fn agent_forward(
    features: &Matrix,
    order: &[usize],
    params: &AgentParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let cache = agent_forward_cached(features, order, params)?;
    Ok((cache.logits, cache.scores))
}

pub fn agent_forward_cached(
    features: &Matrix,
    order: &[usize],
    params: &AgentParams,
) -> Result<ForwardCache> {
    let l = params.check()?;
    let n = features.rows;
    if n == 0 {
        return Err(Error::invalid("cannot run the agent on an empty pool"));
    }
    Error::check_len("feature dimension", params.feat_dim, features.cols)?;
    check_permutation(order, n)?;

    let p = params.values.as_slice();
    let mut h = vec![0.0; l.hidden];
    let mut c = vec![0.0; l.hidden];
    let mut prev_score = 0.0;
    let mut logits = vec![0.0; n];
    let mut scores = vec![0.0; n];
    let mut steps = Vec::with_capacity(n);
    for &pos in order {
        let mut x = Vec::with_capacity(l.input);
        x.extend_from_slice(features.row(pos));
        x.push(prev_score);
        let cell = cell_step(p, &l, x, h, c);
        let dec_act: Vec<f64> = (0..l.dec_hidden)
            .map(|r| {
                let w = &p[l.dec_w1 + r * l.hidden..l.dec_w1 + (r + 1) * l.hidden];
                (p[l.dec_b1 + r] + dot(w, &cell.h)).tanh()
            })
            .collect();
        let logit = p[l.dec_b2] + dot(&p[l.dec_w2..l.dec_w2 + l.dec_hidden], &dec_act);
        let score = logistic(logit);
        logits[pos] = logit;
        scores[pos] = score;
        prev_score = score;
        h = cell.h.clone();
        c = cell.c.clone();
        steps.push(StepCache { cell, dec_act, score });
    }
    Ok(ForwardCache {
        order: order.to_vec(),
        logits,
        scores,
        steps,
    })
}

/// Backpropagation through time. `dlogits` is the gradient of the loss
/// with respect to each logit, indexed by original position. The score fed
/// forward into the next step's input contributes through its own path.
pub fn agent_backward(params: &AgentParams, cache: &ForwardCache, dlogits: &[f64]) -> Result<ParamVector> {
    let l = params.check()?;
    Error::check_len("logit gradient", cache.logits.len(), dlogits.len())?;
    Error::check_len("forward cache", cache.order.len(), cache.steps.len())?;
    let p = params.values.as_slice();
    let mut grads = ParamVector::zeros(l.len);
    let g = grads.as_mut_slice();

    let mut dh_next = vec![0.0; l.hidden];
    let mut dc_next = vec![0.0; l.hidden];
    let mut dscore_next = 0.0;
    for (step, &pos) in cache.steps.iter().zip(&cache.order).rev() {
        let s = step.score;
        let dlogit = dlogits[pos] + dscore_next * s * (1.0 - s);

        g[l.dec_b2] += dlogit;
        let mut dh = dh_next;
        for r in 0..l.dec_hidden {
            let a = step.dec_act[r];
            g[l.dec_w2 + r] += dlogit * a;
            let du = dlogit * p[l.dec_w2 + r] * (1.0 - a * a);
            if du == 0.0 {
                continue;
            }
            g[l.dec_b1 + r] += du;
            let w1 = l.dec_w1 + r * l.hidden;
            for k in 0..l.hidden {
                g[w1 + k] += du * step.cell.h[k];
                dh[k] += du * p[w1 + k];
            }
        }

        let (dz, dc_prev) = gate_grads(&step.cell, &dh, &dc_next);
        let mut dprev = [0.0];
        dh_next = accumulate_cell(p, &l, &step.cell, &dz, g, l.input - 1, &mut dprev);
        dc_next = dc_prev;
        dscore_next = dprev[0];
    }
    Ok(grads)
}
