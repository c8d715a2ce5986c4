//! Paired multi-seed comparison of strategies with one-sided t-tests.
//!
//! cargo run --release --example benchmark [config.json] [n_seeds]

use std::path::PathBuf;

use alcurve::bench::bench;
use alcurve::config::ExperimentConfig;
use alcurve::driver::Strategy;

fn main() -> alcurve::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/planted.json"));
    let cfg = ExperimentConfig::load(&path)?;
    let seeds: Vec<u64> = match args.next() {
        Some(n) => (0..n
            .parse::<u64>()
            .map_err(|_| alcurve::Error::Config("n_seeds must be an integer".into()))?)
            .collect(),
        None => cfg.seeds.clone(),
    };
    let (_, summary) = bench(&cfg, &Strategy::ALL, &seeds)?;
    for s in &summary.strategies {
        println!(
            "{:<8} mean {:.4} std {:.4}",
            s.strategy.name(),
            s.mean_final,
            s.std_final
        );
    }
    for p in &summary.pairs {
        println!(
            "{:<8} vs {:<8} diff {:+.4}  p(a > b) {:.4}",
            p.a.name(),
            p.b.name(),
            p.mean_diff,
            p.p_a_greater
        );
    }
    Ok(())
}
