//! Builds a lookup table of random batches, queries it, and writes it to a
//! `.alut.jsonl` file.
//!
//! cargo run --release --example wasserstein_lookup [out.alut.jsonl]

use std::path::PathBuf;
use std::time::Instant;

use alcurve::lookup::{
    build_sketch, build_table, estimate_performance, load_table, random_subset, save_table, wasserstein1,
    TableParams,
};
use alcurve::oracle::{generate_synthetic_task, proxy_performance, OracleKind, TaskConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> alcurve::Result<()> {
    let task = generate_synthetic_task(&TaskConfig::default(), 2)?;
    let kind = OracleKind::Prototype;
    let labeled: Vec<usize> = (0..50).collect();
    let unlabeled: Vec<usize> = (50..task.pool_size()).collect();
    let params = TableParams {
        records: 50,
        ..TableParams::default()
    };

    let t = Instant::now();
    let table = build_table(
        &task.pool_features,
        &unlabeled,
        &labeled,
        |l, c| proxy_performance(l, c, &task, kind),
        &params,
        25,
        9,
        0,
    )?;
    println!(
        "{} records in {:?}; mu_d {:.4} sigma_d {:.4} tau {:.4}",
        table.len(),
        t.elapsed(),
        table.mu_d,
        table.sigma_d,
        table.tau().unwrap_or(f64::NAN)
    );
    println!(
        "W1(record 0, record 1) = {:.4}",
        wasserstein1(&table.records[0].sketch, &table.records[1].sketch)?
    );

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let batch = random_subset(&unlabeled, 25, &mut rng);
        let sketch = build_sketch(&task.pool_features.select_rows(&batch), table.quantiles)?;
        let est = estimate_performance(&table, &sketch)?;
        let direct = proxy_performance(&labeled, &batch, &task, kind)?;
        match est.value {
            Some(v) => println!(
                "estimate {v:.4} from {} neighbors, direct {direct:.4}, min distance {:.4}",
                est.used.len(),
                est.min_distance
            ),
            None => println!(
                "fallback (min distance {:.4}), direct {direct:.4}",
                est.min_distance
            ),
        }
    }

    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("example.alut.jsonl"));
    save_table(&table, &path)?;
    assert_eq!(load_table(&path)?, table);
    println!("wrote {}", path.display());
    Ok(())
}
