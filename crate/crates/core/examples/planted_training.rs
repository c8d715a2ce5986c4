//! Trains the agent on a 20-item pool where 5 items carry all the reward,
//! then reads off its deterministic top-5.
//!
//! cargo run --release --example planted_training

use alcurve::agent::{agent_forward, select_top_b, train_agent, AgentConfig, AgentParams, TrainConfig};
use alcurve::numerics::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> alcurve::Result<()> {
    let good = [0usize, 3, 7, 11, 16];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let cfg = AgentConfig {
        budget: 5,
        ..AgentConfig::default()
    };
    let rows: Vec<Vec<f64>> = (0..20)
        .map(|_| (0..cfg.feat_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let pool = Matrix::from_rows(&rows)?;
    let train = TrainConfig {
        iterations: 1500,
        ..TrainConfig::default()
    };
    let init = AgentParams::init(&cfg, &mut rng);
    let mut reward = |s: &[usize]| -> alcurve::Result<f64> {
        Ok(s.iter().filter(|i| good.contains(i)).count() as f64 / good.len() as f64)
    };
    let (params, history) = train_agent(&pool, &mut reward, &cfg, &train, init, &mut rng)?;
    for chunk in history.chunks(300) {
        let avg = chunk.iter().map(|h| h.estimate).sum::<f64>() / chunk.len() as f64;
        println!(
            "iterations {:>4}..{:>4}: mean reward {avg:.3}",
            chunk[0].iteration,
            chunk[chunk.len() - 1].iteration
        );
    }
    let order: Vec<usize> = (0..pool.rows).collect();
    let (_, scores) = agent_forward(&pool, &order, &params)?;
    let mask = select_top_b(&scores, cfg.budget)?;
    let picked: Vec<usize> = (0..pool.rows).filter(|&i| mask[i]).collect();
    println!("selected {picked:?}, planted {good:?}");
    Ok(())
}
