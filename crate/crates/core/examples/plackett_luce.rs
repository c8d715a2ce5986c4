//! Sequential softmax sampling without replacement: empirical batch
//! frequencies against the exact probabilities.
//!
//! cargo run --example plackett_luce

use std::collections::BTreeMap;

use alcurve::agent::{sample_selection, sequence_logprob};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> alcurve::Result<()> {
    let logits = [1.5, 0.0, -0.5, 0.8];
    let temperature = 1.0;
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for _ in 0..draws {
        let sel = sample_selection(&logits, 2, temperature, &mut rng)?;
        let mut batch = sel.picks.clone();
        batch.sort_unstable();
        *counts.entry(batch).or_default() += 1;
    }
    println!("batch    empirical  exact");
    for (batch, n) in &counts {
        let exact = sequence_logprob(&logits, &[batch[0], batch[1]], temperature).exp()
            + sequence_logprob(&logits, &[batch[1], batch[0]], temperature).exp();
        println!("{batch:?}   {:.4}     {:.4}", *n as f64 / draws as f64, exact);
    }
    Ok(())
}
