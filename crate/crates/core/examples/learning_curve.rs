//! One seed of every strategy on the shipped planted coverage config,
//! printed as learning curves.
//!
//! cargo run --release --example learning_curve [config.json] [seed]

use std::path::PathBuf;

use alcurve::config::ExperimentConfig;
use alcurve::driver::{run_experiment, Strategy};

fn main() -> alcurve::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/planted.json"));
    let cfg = ExperimentConfig::load(&path)?;
    let seed: u64 = args
        .next()
        .map_or(Ok(cfg.seeds[0]), |s| s.parse())
        .map_err(|_| alcurve::Error::Config("seed must be an integer".into()))?;
    let task = cfg.task_for_seed(seed)?;
    println!(
        "strategy  {}",
        (0..=cfg.experiment.cycles)
            .map(|c| format!("cycle {c:<3}"))
            .collect::<String>()
    );
    for strategy in Strategy::ALL {
        let mut al = cfg.experiment.clone();
        al.strategy = strategy;
        let logs = run_experiment(&al, &task, seed)?;
        let curve: String = logs.iter().map(|l| format!("{:<10.4}", l.perf)).collect();
        println!("{:<9} {curve}", strategy.name());
    }
    Ok(())
}
