//! Acceptance checks. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use std::path::PathBuf;
use std::time::Instant;

use alcurve::agent::{
    agent_backward, agent_forward, agent_forward_cached, lstm_cell_backward, lstm_cell_forward,
    reinforce_grad, sample_selection, update_baseline, AgentConfig, AgentParams, BaselineMode,
    BaselineTracker, CellCache, Episode,
};
use alcurve::bench::{bench, run_seeds, write_csv, RunRecord};
use alcurve::config::ExperimentConfig;
use alcurve::driver::{initial_state, initial_table, Strategy};
use alcurve::lookup::{
    build_sketch, estimate_performance, load_table, random_subset, save_table, wasserstein1, LookupTable,
    QuantileSketch,
};
use alcurve::numerics::{Matrix, ParamVector};
use alcurve::oracle::{
    generate_synthetic_task, prototype_performance, proxy_performance, OracleKind, TaskConfig,
};
use alcurve::stats::{mean, median, spearman};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_EPS: f64 = 1e-5;
const GRAD_REL_TOL: f64 = 1e-4;
/// Denominator floor for relative errors of near-zero gradient components.
const GRAD_REL_FLOOR: f64 = 1e-6;
const GRAD_CONFIGS: usize = 20;
const GRAD_RUNTIME_S: f64 = 60.0;
const MC_EPISODES: usize = 200_000;
const MC_COSINE: f64 = 0.99;
const MC_RUNTIME_S: f64 = 120.0;
const BASELINE_TOL: f64 = 1e-9;
const BASELINE_LAMBDA: f64 = 0.5;
const BASELINE_STEPS: usize = 100;
const W1_CASES: usize = 1000;
const W1_TOL: f64 = 1e-12;
const METRIC_TRIPLES: usize = 1000;
const TABLE_SIZES: [usize; 3] = [10, 25, 50];
const TABLE_QUERIES: usize = 100;
const MAX_INVERSIONS: usize = 1;
const SPEEDUP: f64 = 100.0;
const SPEED_QUERIES: usize = 100;
const BENCH_P: f64 = 0.05;
const BENCH_RUNTIME_S: f64 = 30.0 * 60.0;
const CALIB_BATCHES: usize = 50;
const CALIB_RHO: f64 = 0.5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn planted_config() -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/planted.json");
    ExperimentConfig::load(&path).expect("shipped planted config loads")
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-scale..scale)).collect())
        .collect();
    Matrix::from_rows(&rows).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let v = y[i];
            y[i] = v + FD_EPS;
            let up = f(&y);
            y[i] = v - FD_EPS;
            let down = f(&y);
            y[i] = v;
            (up - down) / (2.0 * FD_EPS)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(GRAD_REL_FLOOR))
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Log-probability of an ordered draw under sequential softmax sampling.
fn ordered_logprob(logits: &[f64], picks: &[usize], temperature: f64) -> f64 {
    let mut left: Vec<usize> = (0..logits.len()).collect();
    let mut lp = 0.0;
    for &k in picks {
        let z: f64 = left.iter().map(|&j| (logits[j] / temperature).exp()).sum();
        lp += logits[k] / temperature - z.ln();
        left.retain(|&j| j != k);
    }
    lp
}

fn criterion_gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (mut cell_err, mut fwd_err, mut rl_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..GRAD_CONFIGS {
        let n = rng.random_range(1..=6);
        let cfg = AgentConfig {
            feat_dim: rng.random_range(1..=5),
            hidden_dim: rng.random_range(1..=6),
            decoder_hidden: rng.random_range(1..=4),
            budget: rng.random_range(1..=n),
            temperature: rng.random_range(0.5..2.0),
            init_scale: rng.random_range(0.3..1.0),
        };
        let params = AgentParams::init(&cfg, &mut rng);
        let theta = params.values.as_slice().to_vec();
        let with = |v: &[f64]| params.with_values(v.to_vec()).unwrap();
        let hd = cfg.hidden_dim;
        let input = cfg.feat_dim + 1;

        // One cell, loss = a·h' + b·c'; gradients w.r.t. weights, x, h and c.
        let (x, h, c) = (
            random_vec(&mut rng, input),
            random_vec(&mut rng, hd),
            random_vec(&mut rng, hd),
        );
        let (a, b) = (random_vec(&mut rng, hd), random_vec(&mut rng, hd));
        let cell_loss = |p: &AgentParams, x: &[f64], h: &[f64], c: &[f64]| {
            let (h2, c2) = lstm_cell_forward(x, h, c, p).unwrap();
            dot(&a, &h2) + dot(&b, &c2)
        };
        let cache = CellCache::compute(&params, &x, &h, &c).unwrap();
        let mut g = ParamVector::zeros(params.len());
        let (dx, dh, dc) = lstm_cell_backward(&params, &cache, &a, &b, &mut g).unwrap();
        let fd_w = central_diff(&|v| cell_loss(&with(v), &x, &h, &c), &theta);
        let fd_x = central_diff(&|v| cell_loss(&params, v, &h, &c), &x);
        let fd_h = central_diff(&|v| cell_loss(&params, &x, v, &c), &h);
        let fd_c = central_diff(&|v| cell_loss(&params, &x, &h, v), &c);
        cell_err = cell_err
            .max(rel_err(g.as_slice(), &fd_w))
            .max(rel_err(&dx, &fd_x))
            .max(rel_err(&dh, &fd_h))
            .max(rel_err(&dc, &fd_c));

        // Whole scan with score feedback, loss = w·logits.
        let feats = random_matrix(&mut rng, n, cfg.feat_dim, 1.0);
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let w = random_vec(&mut rng, n);
        let fcache = agent_forward_cached(&feats, &order, &params).unwrap();
        let g = agent_backward(&params, &fcache, &w).unwrap();
        let fd = central_diff(
            &|v| dot(&w, &agent_forward(&feats, &order, &with(v)).unwrap().0),
            &theta,
        );
        fwd_err = fwd_err.max(rel_err(g.as_slice(), &fd));

        // REINFORCE loss -(R - b) log pi(picks).
        let sel = sample_selection(&fcache.logits, cfg.budget, cfg.temperature, &mut rng).unwrap();
        let ep = Episode::from_parts(&fcache, sel, cfg.temperature);
        let (reward, base) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let g = reinforce_grad(&ep, reward, base, &feats, &params).unwrap();
        let fd = central_diff(
            &|v| {
                let logits = agent_forward(&feats, &order, &with(v)).unwrap().0;
                -(reward - base) * ordered_logprob(&logits, &ep.picks, cfg.temperature)
            },
            &theta,
        );
        rl_err = rl_err.max(rel_err(g.as_slice(), &fd));
    }
    let secs = start.elapsed().as_secs_f64();
    let worst = cell_err.max(fwd_err).max(rl_err);
    outcome(
        worst < GRAD_REL_TOL && secs < GRAD_RUNTIME_S,
        format!(
            "{GRAD_CONFIGS} configs, max rel err cell {cell_err:.2e} forward {fwd_err:.2e} reinforce {rl_err:.2e} (< {GRAD_REL_TOL:e}), {secs:.1}s"
        ),
    )
}

fn criterion_unbiased() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let cfg = AgentConfig {
        feat_dim: 3,
        hidden_dim: 4,
        decoder_hidden: 3,
        budget: 2,
        temperature: 1.0,
        init_scale: 0.8,
    };
    let n = 4;
    let feats = random_matrix(&mut rng, n, cfg.feat_dim, 1.0);
    let params = AgentParams::init(&cfg, &mut rng);
    let masks: Vec<[usize; 2]> = vec![[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];
    let mask_reward = [0.15, 0.8, 0.35, 0.55, 0.95, 0.05];
    let reward_of = |sel: &[usize]| mask_reward[masks.iter().position(|m| m[..] == *sel).unwrap()];
    let order: Vec<usize> = (0..n).collect();

    // Exact gradient of sum over masks of P(mask) R(mask), where P(mask)
    // adds both draw orders.
    let theta = params.values.as_slice().to_vec();
    let expected = |v: &[f64]| {
        let logits = agent_forward(&feats, &order, &params.with_values(v.to_vec()).unwrap())
            .unwrap()
            .0;
        masks
            .iter()
            .zip(&mask_reward)
            .map(|(m, r)| {
                let p = ordered_logprob(&logits, &[m[0], m[1]], 1.0).exp()
                    + ordered_logprob(&logits, &[m[1], m[0]], 1.0).exp();
                p * r
            })
            .sum::<f64>()
    };
    let exact = central_diff(&expected, &theta);

    let cache = agent_forward_cached(&feats, &order, &params).unwrap();
    let baseline = mean(&mask_reward);
    let mut acc = vec![0.0; theta.len()];
    for _ in 0..MC_EPISODES {
        let sel = sample_selection(&cache.logits, cfg.budget, cfg.temperature, &mut rng).unwrap();
        let ep = Episode::from_parts(&cache, sel, cfg.temperature);
        let r = reward_of(&ep.selected());
        let g = reinforce_grad(&ep, r, baseline, &feats, &params).unwrap();
        for (a, v) in acc.iter_mut().zip(g.as_slice()) {
            *a -= v;
        }
    }
    let mc: Vec<f64> = acc.iter().map(|v| v / MC_EPISODES as f64).collect();
    let cosine = dot(&mc, &exact) / (dot(&mc, &mc).sqrt() * dot(&exact, &exact).sqrt());
    let secs = start.elapsed().as_secs_f64();
    outcome(
        cosine > MC_COSINE && secs < MC_RUNTIME_S,
        format!("N=4 B=2, {MC_EPISODES} episodes, cosine {cosine:.5} (> {MC_COSINE}), {secs:.1}s"),
    )
}

fn criterion_baseline() -> Outcome {
    let mut worst_std: f64 = 0.0;
    let mut worst_lit: f64 = 0.0;
    for (r, init) in [(0.73, 0.0), (-0.4, 2.0), (1.0, 0.5), (0.0, -1.0)] {
        for mode in [BaselineMode::StandardEma, BaselineMode::PaperLiteral] {
            let mut t = BaselineTracker::new(BASELINE_LAMBDA, mode);
            t.reference = init;
            for _ in 0..BASELINE_STEPS {
                t = update_baseline(t, r);
            }
            match mode {
                BaselineMode::StandardEma => worst_std = worst_std.max((t.reference - r).abs()),
                BaselineMode::PaperLiteral => worst_lit = worst_lit.max((t.reference - r / 2.0).abs()),
            }
        }
    }
    outcome(
        worst_std < BASELINE_TOL && worst_lit < BASELINE_TOL,
        format!(
            "lambda {BASELINE_LAMBDA}, {BASELINE_STEPS} steps: |ref - r| {worst_std:.1e}, |ref - r/2| {worst_lit:.1e} (< {BASELINE_TOL:e})"
        ),
    )
}

fn sorted_matching(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn criterion_wasserstein() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let mut worst: f64 = 0.0;
    for _ in 0..W1_CASES {
        let b = rng.random_range(1..=8);
        let d = rng.random_range(1..=6);
        let x = random_matrix(&mut rng, b, d, 10.0);
        let y = random_matrix(&mut rng, b, d, 10.0);
        let got = wasserstein1(&build_sketch(&x, b).unwrap(), &build_sketch(&y, b).unwrap()).unwrap();
        let want = (0..d)
            .map(|c| {
                let mut xc: Vec<f64> = (0..b).map(|r| x.row(r)[c]).collect();
                let mut yc: Vec<f64> = (0..b).map(|r| y.row(r)[c]).collect();
                sorted_matching(&mut xc, &mut yc)
            })
            .sum::<f64>()
            / d as f64;
        worst = worst.max((got - want).abs());
    }
    let mut violations = 0;
    for _ in 0..METRIC_TRIPLES {
        let b = rng.random_range(1..=12);
        let d = rng.random_range(1..=6);
        let q = rng.random_range(1..=16);
        let s: Vec<QuantileSketch> = (0..3)
            .map(|_| build_sketch(&random_matrix(&mut rng, b, d, 5.0), q).unwrap())
            .collect();
        let w = |i: usize, j: usize| wasserstein1(&s[i], &s[j]).unwrap();
        let ok = w(0, 1) >= 0.0
            && w(0, 1) == w(1, 0)
            && w(0, 0) == 0.0
            && w(0, 2) <= w(0, 1) + w(1, 2) + W1_TOL
            && w(0, 1) <= w(0, 2) + w(2, 1) + W1_TOL
            && w(1, 2) <= w(1, 0) + w(0, 2) + W1_TOL;
        if !ok {
            violations += 1;
        }
    }
    outcome(
        worst < W1_TOL && violations == 0,
        format!(
            "{W1_CASES} brute-force cases max abs err {worst:.1e} (< {W1_TOL:e}); {violations} pseudometric violations in {METRIC_TRIPLES} triples"
        ),
    )
}

fn criterion_lookup() -> Outcome {
    let cfg = planted_config();
    let seed = cfg.seeds[0];
    let task = cfg.task_for_seed(seed).unwrap();
    let kind = cfg.experiment.oracle;
    let mut al = cfg.experiment.clone();
    let (state, _) = initial_state(&al, &task, seed).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5005);
    let queries: Vec<Vec<usize>> = (0..TABLE_QUERIES)
        .map(|_| random_subset(&state.unlabeled, al.budget, &mut rng))
        .collect();
    let truth: Vec<f64> = queries
        .iter()
        .map(|q| proxy_performance(&state.labeled, q, &task, kind).unwrap())
        .collect();

    let mut contract = true;
    let mut medians = Vec::new();
    let mut fallbacks = Vec::new();
    for m in TABLE_SIZES {
        al.table.records = m;
        let (_, table) = initial_table(&al, &task, seed).unwrap();
        for r in &table.records {
            let est = estimate_performance(&table, &r.sketch).unwrap();
            contract &= est.value == Some(r.perf) && !est.fallback;
        }
        let tau = table.tau().unwrap();
        let mut errors = Vec::new();
        let mut fb = 0;
        for (q, t) in queries.iter().zip(&truth) {
            let sketch = build_sketch(&task.pool_features.select_rows(q), table.quantiles).unwrap();
            let est = estimate_performance(&table, &sketch).unwrap();
            contract &= est.fallback == (est.min_distance > tau) && est.fallback == est.value.is_none();
            if let Some(v) = est.value {
                let perfs: Vec<f64> = est.used.iter().map(|&(j, _)| table.records[j].perf).collect();
                let lo = perfs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = perfs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let wsum: f64 = est.used.iter().map(|&(_, w)| w).sum();
                contract &= lo <= v && v <= hi && (wsum - 1.0).abs() < 1e-12;
            } else {
                fb += 1;
            }
            errors.push((table.weighted_estimate(&sketch).unwrap() - t).abs());
        }
        // A query shifted far from the pool must fall back.
        let far_rows: Vec<Vec<f64>> = queries[0]
            .iter()
            .map(|&i| task.pool_features.row(i).iter().map(|v| v + 100.0).collect())
            .collect();
        let far = build_sketch(&Matrix::from_rows(&far_rows).unwrap(), table.quantiles).unwrap();
        let est = estimate_performance(&table, &far).unwrap();
        contract &= est.fallback && est.value.is_none();
        medians.push(median(&errors));
        fallbacks.push(fb);
    }
    let inversions = medians.windows(2).filter(|w| w[1] > w[0]).count();
    let shown: Vec<String> = TABLE_SIZES
        .iter()
        .zip(&medians)
        .zip(&fallbacks)
        .map(|((m, e), f)| format!("M={m}: {e:.5} ({f} fallbacks)"))
        .collect();
    outcome(
        contract && inversions <= MAX_INVERSIONS,
        format!(
            "contract {}; median |estimate - proxy| over {TABLE_QUERIES} queries {}; {inversions} inversion(s) (<= {MAX_INVERSIONS})",
            if contract { "holds" } else { "violated" },
            shown.join(", ")
        ),
    )
}

fn median_secs(mut f: impl FnMut(), reps: usize) -> f64 {
    let start = Instant::now();
    for _ in 0..reps {
        f();
    }
    start.elapsed().as_secs_f64() / reps as f64
}

fn criterion_speedup() -> Outcome {
    let reps = 20;
    let mut ratios = Vec::new();
    let mut lines = Vec::new();
    for (name, kind) in [
        ("prototype", OracleKind::Prototype),
        ("coverage", OracleKind::Coverage),
    ] {
        let task = generate_synthetic_task(&TaskConfig::default(), 6).unwrap();
        let mut al = planted_config().experiment;
        al.oracle = kind;
        al.table.records = 50;
        let (state, table) = initial_table(&al, &task, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6006);
        let (mut t_est, mut t_proxy) = (Vec::new(), Vec::new());
        for _ in 0..SPEED_QUERIES {
            let q = random_subset(&state.unlabeled, al.budget, &mut rng);
            let sketch = build_sketch(&task.pool_features.select_rows(&q), table.quantiles).unwrap();
            t_est.push(median_secs(
                || {
                    std::hint::black_box(estimate_performance(&table, &sketch).unwrap());
                },
                reps,
            ));
            t_proxy.push(median_secs(
                || {
                    std::hint::black_box(proxy_performance(&state.labeled, &q, &task, kind).unwrap());
                },
                reps,
            ));
        }
        let (e, p) = (median(&t_est), median(&t_proxy));
        ratios.push(p / e);
        lines.push(format!(
            "{name} proxy {:.1}us vs lookup {:.1}us = {:.2}x",
            p * 1e6,
            e * 1e6,
            p / e
        ));
    }
    outcome(
        ratios[0] >= SPEEDUP,
        format!("N=1000 d=32 B=25 M=50, median of {SPEED_QUERIES}: {} (need >= {SPEEDUP}x on the prototype proxy)", lines.join("; ")),
    )
}

fn criterion_benchmark(runs: &[RunRecord], secs: f64) -> Outcome {
    let finals = |s: Strategy| -> Vec<f64> {
        runs.iter()
            .filter(|r| r.strategy == s)
            .map(RunRecord::final_perf)
            .collect()
    };
    let (mg, rd) = (finals(Strategy::Mgral), finals(Strategy::Random));
    let p = alcurve::stats::paired_t_test_greater(&mg, &rd);
    let cycles = planted_config().experiment.cycles;
    let complete = [Strategy::Entropy, Strategy::Coreset].iter().all(|&s| {
        runs.iter()
            .filter(|r| r.strategy == s)
            .all(|r| r.logs.len() == cycles + 1)
            && finals(s).len() == mg.len()
    });
    let others: Vec<String> = Strategy::ALL
        .iter()
        .map(|&s| format!("{s} {:.4}", mean(&finals(s))))
        .collect();
    outcome(
        mean(&mg) > mean(&rd) && p < BENCH_P && complete && secs < BENCH_RUNTIME_S,
        format!(
            "{} seeds, mean final perf {}; paired p(mgral > random) = {p:.2e} (< {BENCH_P}); baselines complete: {complete}; {secs:.0}s",
            mg.len(),
            others.join(", ")
        ),
    )
}

fn criterion_calibration() -> Outcome {
    let mut rhos = Vec::new();
    for seed in 0..10u64 {
        let task = generate_synthetic_task(&TaskConfig::default(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8008 + seed);
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
        for _ in 0..CALIB_BATCHES {
            let batch = random_subset(&unlabeled, 25, &mut rng);
            proxy.push(proxy_performance(&labeled, &batch, &task, OracleKind::Prototype).unwrap() - base);
            let joined: Vec<usize> = labeled.iter().chain(&batch).copied().collect();
            truth.push(prototype_performance(&joined, &task).unwrap() - base);
        }
        rhos.push(spearman(&proxy, &truth));
    }
    let rho = median(&rhos);
    let shown: Vec<String> = rhos.iter().map(|r| format!("{r:.2}")).collect();
    outcome(
        rho > CALIB_RHO,
        format!(
            "{CALIB_BATCHES} batches per task, median Spearman over 10 task seeds {rho:.3} (> {CALIB_RHO}); per seed [{}]",
            shown.join(" ")
        ),
    )
}

fn csv_without_timing(runs: &[RunRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, runs).unwrap();
    String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

fn criterion_determinism(bench_runs: &[RunRecord]) -> Outcome {
    let cfg = planted_config();
    let seeds = &cfg.seeds[..3];
    let mut identical = true;
    for s in Strategy::ALL {
        let again = run_seeds(&cfg, s, seeds).unwrap();
        let first: Vec<RunRecord> = bench_runs
            .iter()
            .filter(|r| r.strategy == s && seeds.contains(&r.seed))
            .cloned()
            .collect();
        identical &= csv_without_timing(&again) == csv_without_timing(&first);
    }

    let task = cfg.task_for_seed(cfg.seeds[0]).unwrap();
    let (_, table) = initial_table(&cfg.experiment, &task, cfg.seeds[0]).unwrap();
    let dir = std::env::temp_dir().join(format!("alcurve-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("planted.alut.jsonl");
    save_table(&table, &path).unwrap();
    let loaded: LookupTable = load_table(&path).unwrap();
    let bits = |t: &LookupTable| -> Vec<u64> {
        let mut v = vec![t.mu_d.to_bits(), t.sigma_d.to_bits(), t.eps_w.to_bits()];
        for r in &t.records {
            v.push(r.perf.to_bits());
            v.extend(r.sketch.quantiles.iter().map(|q| q.to_bits()));
        }
        v
    };
    let roundtrip = loaded == table && bits(&loaded) == bits(&table);
    let _ = std::fs::remove_dir_all(&dir);

    let monotone = bench_runs
        .iter()
        .all(|r| r.logs.windows(2).all(|w| w[1].perf >= w[0].perf));
    outcome(
        identical && roundtrip && monotone,
        format!(
            "rerun CSV identical: {identical}; table roundtrip exact ({} records): {roundtrip}; coverage non-decreasing in all {} runs: {monotone}",
            table.len(),
            bench_runs.len()
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |n: u32, name: &'static str, o: Outcome| {
        println!(
            "criterion {n} [{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, name, o));
    };
    record(1, "gradient correctness", criterion_gradients());
    record(2, "REINFORCE unbiasedness", criterion_unbiased());
    record(3, "baseline recurrence", criterion_baseline());
    record(4, "Wasserstein correctness", criterion_wasserstein());
    record(
        5,
        "lookup-table contract and table-size ablation",
        criterion_lookup(),
    );
    record(6, "lookup speedup", criterion_speedup());

    let cfg = planted_config();
    let start = Instant::now();
    let (runs, _) = bench(&cfg, &Strategy::ALL, &cfg.seeds).unwrap();
    let secs = start.elapsed().as_secs_f64();
    record(7, "headline benchmark", criterion_benchmark(&runs, secs));
    record(8, "proxy calibration", criterion_calibration());
    record(9, "determinism and persistence", criterion_determinism(&runs));

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {failed:?}")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
