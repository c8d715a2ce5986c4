//! Checks the LSTM cell gradient against central differences, then runs a
//! few Adam steps on a quadratic.
//!
//! cargo run --example gradient_check

use alcurve::agent::{lstm_cell_backward, lstm_cell_forward, AgentConfig, AgentParams, CellCache};
use alcurve::numerics::{adam_step, finite_diff_grad, max_relative_error, AdamHyper, AdamState, ParamVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> alcurve::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = AgentConfig {
        feat_dim: 4,
        hidden_dim: 5,
        decoder_hidden: 3,
        budget: 1,
        init_scale: 0.5,
        ..AgentConfig::default()
    };
    let params = AgentParams::init(&cfg, &mut rng);
    let x = [0.3, -0.7, 0.1, 0.9, 0.5];
    let h = [0.2, -0.1, 0.0, 0.4, -0.3];
    let c = [0.5, 0.1, -0.2, 0.0, 0.3];

    // loss = sum(h') + sum(c')
    let ones = vec![1.0; cfg.hidden_dim];
    let cache = CellCache::compute(&params, &x, &h, &c)?;
    let mut grads = ParamVector::zeros(params.len());
    lstm_cell_backward(&params, &cache, &ones, &ones, &mut grads)?;
    let fd = finite_diff_grad(
        |v| {
            let p = params.with_values(v.to_vec()).unwrap();
            let (h2, c2) = lstm_cell_forward(&x, &h, &c, &p).unwrap();
            h2.iter().chain(&c2).sum()
        },
        params.values.as_slice(),
        1e-5,
    )?;
    println!(
        "cell: {} parameters, max relative error {:.2e}",
        params.len(),
        max_relative_error(grads.as_slice(), &fd, 1e-6)
    );

    // Adam on f(x) = |x - target|^2
    let target = [1.0, -2.0, 0.5];
    let mut x = ParamVector::zeros(3);
    let mut state = AdamState::new(3);
    let hyper = AdamHyper {
        alpha: 0.1,
        ..AdamHyper::default()
    };
    for step in 1..=300 {
        let g: Vec<f64> = x
            .as_slice()
            .iter()
            .zip(&target)
            .map(|(a, t)| 2.0 * (a - t))
            .collect();
        adam_step(&mut x, &ParamVector(g), &mut state, &hyper)?;
        if step % 100 == 0 {
            println!("adam step {step}: x = {:.4?}", x.as_slice());
        }
    }
    Ok(())
}
