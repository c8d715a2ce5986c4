//! Scores a small pool with a freshly initialized agent and picks the top B.
//!
//! cargo run --example lstm_agent

use alcurve::agent::{agent_forward, select_top_b, AgentConfig, AgentParams};
use alcurve::numerics::Matrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> alcurve::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = AgentConfig {
        feat_dim: 8,
        budget: 3,
        init_scale: 0.5,
        ..AgentConfig::default()
    };
    let rows: Vec<Vec<f64>> = (0..10)
        .map(|_| (0..cfg.feat_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let pool = Matrix::from_rows(&rows)?;
    let params = AgentParams::init(&cfg, &mut rng);
    println!("{} parameters", params.len());

    let mut order: Vec<usize> = (0..pool.rows).collect();
    for pass in 0..2 {
        order.shuffle(&mut rng);
        let (logits, scores) = agent_forward(&pool, &order, &params)?;
        let mask = select_top_b(&scores, cfg.budget)?;
        println!("pass {pass}, order {order:?}");
        for i in 0..pool.rows {
            println!(
                "  item {i}: logit {:+.4} score {:.4}{}",
                logits[i],
                scores[i],
                if mask[i] { "  <- selected" } else { "" }
            );
        }
    }
    Ok(())
}
