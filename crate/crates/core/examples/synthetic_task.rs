//! Generates a synthetic task and compares the evaluators on a few labeled
//! sets.
//!
//! cargo run --example synthetic_task

use alcurve::lookup::random_subset;
use alcurve::oracle::{
    coverage_performance, generate_synthetic_task, prototype_performance, proxy_performance, CellWeighting,
    OracleKind, TaskConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> alcurve::Result<()> {
    let cfg = TaskConfig {
        imbalance: vec![8.0, 4.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        cell_weighting: CellWeighting::Zipf {
            exponent: 1.0,
            rare_first: true,
        },
        ..TaskConfig::default()
    };
    let task = generate_synthetic_task(&cfg, 0)?;
    let mut per_class = vec![0; task.num_classes()];
    task.pool_labels.iter().for_each(|&c| per_class[c] += 1);
    println!("pool {} points, class sizes {per_class:?}", task.pool_size());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let all: Vec<usize> = (0..task.pool_size()).collect();
    for size in [10, 50, 200] {
        let labeled = random_subset(&all, size, &mut rng);
        println!(
            "{size:>4} labeled: coverage {:.4}  prototype accuracy {:.4}",
            coverage_performance(&labeled, &task)?,
            prototype_performance(&labeled, &task)?
        );
    }

    let mut labeled = random_subset(&all, 50, &mut rng);
    labeled.sort_unstable();
    let unlabeled: Vec<usize> = all
        .iter()
        .copied()
        .filter(|i| labeled.binary_search(i).is_err())
        .collect();
    let batch = random_subset(&unlabeled, 25, &mut rng);
    let joined: Vec<usize> = labeled.iter().chain(&batch).copied().collect();
    println!(
        "adding 25: proxy {:.4} vs labeled {:.4}",
        proxy_performance(&labeled, &batch, &task, OracleKind::Prototype)?,
        prototype_performance(&joined, &task)?
    );
    Ok(())
}
