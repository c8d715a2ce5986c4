use alcurve::lookup::random_subset;
use alcurve::oracle::{
    coverage_performance, evaluate, generate_synthetic_task, prototype_performance, proxy_performance,
    CellWeighting, OracleKind, TaskConfig,
};
use alcurve::stats::{median, spearman};
use alcurve::Error;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn skewed() -> TaskConfig {
    TaskConfig {
        pool_size: 300,
        eval_size: 100,
        feat_dim: 8,
        classes: 5,
        cells: 20,
        coverage_min: 2,
        cell_weighting: CellWeighting::Zipf {
            exponent: 1.2,
            rare_first: false,
        },
        ..TaskConfig::default()
    }
}

#[test]
fn coverage_is_monotone_on_nested_subsets() {
    let task = generate_synthetic_task(&skewed(), 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let mut ids: Vec<usize> = (0..task.pool_size()).collect();
        ids.shuffle(&mut rng);
        let mut last = 0.0;
        for k in (0..=ids.len()).step_by(13) {
            let v = coverage_performance(&ids[..k], &task).unwrap();
            assert!(v >= last);
            last = v;
        }
    }
    let all: Vec<usize> = (0..task.pool_size()).collect();
    let mut counts = vec![0; task.cell_weights.len()];
    task.cells.iter().for_each(|&g| counts[g] += 1);
    let want: f64 = counts
        .iter()
        .zip(&task.cell_weights)
        .filter(|(c, _)| **c >= 2)
        .map(|(_, w)| w)
        .sum();
    assert!((coverage_performance(&all, &task).unwrap() - want).abs() < 1e-12);
}

#[test]
fn evaluators_are_pure_and_reject_unknown_ids() {
    let task = generate_synthetic_task(&skewed(), 3).unwrap();
    let labeled = [3, 17, 40, 41, 99, 150];
    let cands = [5, 6, 7, 200];
    for kind in [OracleKind::Coverage, OracleKind::Prototype] {
        let a = evaluate(kind, &labeled, &task).unwrap();
        assert_eq!(a.to_bits(), evaluate(kind, &labeled, &task).unwrap().to_bits());
        let p = proxy_performance(&labeled, &cands, &task, kind).unwrap();
        assert_eq!(
            p.to_bits(),
            proxy_performance(&labeled, &cands, &task, kind)
                .unwrap()
                .to_bits()
        );
        assert_eq!(proxy_performance(&labeled, &[], &task, kind).unwrap(), a);
        assert!(evaluate(kind, &[300], &task).is_err());
        assert!(matches!(
            proxy_performance(&labeled, &[17, 2], &task, kind),
            Err(Error::Overlap(17))
        ));
    }
    let union: Vec<usize> = labeled.iter().chain(&cands).copied().collect();
    assert_eq!(
        proxy_performance(&labeled, &cands, &task, OracleKind::Coverage).unwrap(),
        coverage_performance(&union, &task).unwrap()
    );
    assert_eq!(prototype_performance(&[], &task).unwrap(), 0.0);
}

#[test]
fn proxy_gain_tracks_true_gain_on_the_default_task() {
    let mut rhos = Vec::new();
    for seed in 0..10u64 {
        let task = generate_synthetic_task(&TaskConfig::default(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let all: Vec<usize> = (0..task.pool_size()).collect();
        let mut labeled = random_subset(&all, 50, &mut rng);
        labeled.sort_unstable();
        let unlabeled: Vec<usize> = all
            .iter()
            .copied()
            .filter(|i| labeled.binary_search(i).is_err())
            .collect();
        let base = prototype_performance(&labeled, &task).unwrap();
        let (mut proxy, mut truth) = (Vec::new(), Vec::new());
        for _ in 0..50 {
            let batch = random_subset(&unlabeled, 25, &mut rng);
            proxy.push(proxy_performance(&labeled, &batch, &task, OracleKind::Prototype).unwrap() - base);
            let joined: Vec<usize> = labeled.iter().chain(&batch).copied().collect();
            truth.push(prototype_performance(&joined, &task).unwrap() - base);
        }
        rhos.push(spearman(&proxy, &truth));
    }
    assert!(median(&rhos) > 0.5, "per-seed rank correlations {rhos:?}");
}
