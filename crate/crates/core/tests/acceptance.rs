//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Brute-force oracles here are written independently of the
//! library's implementations.

use std::sync::OnceLock;
use std::time::Instant;

use collab_infer::decision::{
    ensemble, offload_probability, softmax, EnsembleSpec, LogitVector, OffloadParams, ProbabilityVector,
};
use collab_infer::encoder::{
    head_gradient, head_loss, scaled_dot_attention, EncoderConfig, FeatureBatch, ModelWeights, TokenizationMode,
    Tokenizer,
};
use collab_infer::harness::{generate_traces, run_sweep, Experiment, ExperimentConfig, SweepReport};
use collab_infer::pruning::{accumulate_importance, align_mask, prune_mask, ImportanceVector, PruneMask, PruneParams};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

/// Id, name, check, runtime limit in seconds.
type Criterion = (u8, &'static str, fn() -> Check, Option<f64>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-2.0..2.0))
}

fn random_stochastic(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let mut m = Array2::from_shape_fn((n, n), |_| rng.random_range(0.01..1.0));
    for mut row in m.rows_mut() {
        let s: f64 = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    m
}

fn oracle_softmax(z: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = z.iter().map(|v| v.exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cases = 200;
    let mut worst = 0.0f64;
    let mut worst_sum = 0.0f64;

    for _ in 0..cases {
        let k = rng.random_range(2..8);
        let z: Vec<f64> = (0..k).map(|_| rng.random_range(-20.0..20.0)).collect();
        let got = softmax(&LogitVector::new(z.clone()).unwrap());
        for (a, b) in got.as_slice().iter().zip(oracle_softmax(&z)) {
            worst = worst.max((a - b).abs());
        }
        worst_sum = worst_sum.max((got.as_slice().iter().sum::<f64>() - 1.0).abs());
    }

    for _ in 0..cases {
        let (n, m, dk, dv) = (rng.random_range(1..6), rng.random_range(1..6), rng.random_range(1..5), rng.random_range(1..5));
        let (q, k, v) = (random_matrix(&mut rng, n, dk), random_matrix(&mut rng, m, dk), random_matrix(&mut rng, m, dv));
        let (out, attn) = scaled_dot_attention(&q, &k, &v, dk).unwrap();
        for i in 0..n {
            let scores: Vec<f64> = (0..m)
                .map(|j| (0..dk).map(|c| q[[i, c]] * k[[j, c]]).sum::<f64>() / (dk as f64).sqrt())
                .collect();
            let a = oracle_softmax(&scores);
            for j in 0..m {
                worst = worst.max((attn[[i, j]] - a[j]).abs());
            }
            for c in 0..dv {
                let o: f64 = (0..m).map(|j| a[j] * v[[j, c]]).sum();
                worst = worst.max((out[[i, c]] - o).abs());
            }
        }
    }

    for _ in 0..cases {
        let (layers, heads, n) = (rng.random_range(1..4), rng.random_range(1..4), rng.random_range(1..7));
        let maps: Vec<Vec<Array2<f64>>> =
            (0..layers).map(|_| (0..heads).map(|_| random_stochastic(&mut rng, n)).collect()).collect();
        let got = accumulate_importance(&maps).unwrap();
        for t in 0..n {
            let mut s = 0.0;
            for layer in &maps {
                for head in layer {
                    for row in 0..n {
                        s += head[[row, t]];
                    }
                }
            }
            worst = worst.max((got.values()[t] - s).abs());
        }
    }

    for _ in 0..cases {
        let (tiers, k) = (rng.random_range(1..5), rng.random_range(2..6));
        let probs: Vec<ProbabilityVector> = (0..tiers)
            .map(|_| {
                let z: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
                softmax(&LogitVector::new(z).unwrap())
            })
            .collect();
        let raw: Vec<f64> = (0..tiers).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let got = ensemble(&probs, &EnsembleSpec::new(w.clone()).unwrap()).unwrap();
        for c in 0..k {
            let e: f64 = (0..tiers).map(|i| w[i] * probs[i].as_slice()[c]).sum();
            worst = worst.max((got.as_slice()[c] - e).abs());
        }
        worst_sum = worst_sum.max((got.as_slice().iter().sum::<f64>() - 1.0).abs());
    }

    ensure(worst <= 1e-9, || format!("max abs error {worst:e} > 1e-9"))?;
    ensure(worst_sum <= 1e-12, || format!("max sum deviation {worst_sum:e} > 1e-12"))?;
    Ok(format!("{} cases per operation, max abs error {worst:.1e}, max sum error {worst_sum:.1e}", cases))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut weights = ModelWeights::init(EncoderConfig { weight_seed: 5, ..EncoderConfig::default() }).unwrap();
    for head in weights.process_heads.iter_mut().chain(std::iter::once(&mut weights.classifier)) {
        head.weight.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        head.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    let tok = Tokenizer::new(1024, TokenizationMode::Word).unwrap();
    let texts = ["a great warm film", "dull and tedious", "superb cast", "awful plot twists", "fresh fun story", "weak ending"];
    let data: Vec<(Vec<u32>, usize)> = texts.iter().enumerate().map(|(i, t)| (tok.tokenize(t).unwrap().ids, i % 2)).collect();
    let batch = FeatureBatch::extract(&weights, &data).unwrap();

    let h = 1e-4;
    let layers = weights.config.layers;
    let checks = 40;
    let mut worst = 0.0f64;
    for _ in 0..checks {
        let layer = rng.random_range(0..layers);
        let head = if layer + 1 == layers && rng.random_bool(0.5) { &weights.classifier } else { &weights.process_heads[layer] };
        let f = &batch.features[layer];
        let g = head_gradient(head, f, &batch.labels);
        let (d, k) = head.weight.dim();
        let bias = rng.random_bool(0.2);
        let (i, c) = (rng.random_range(0..d), rng.random_range(0..k));
        let (mut plus, mut minus) = (head.clone(), head.clone());
        let analytic = if bias {
            plus.bias[c] += h;
            minus.bias[c] -= h;
            g.bias[c]
        } else {
            plus.weight[[i, c]] += h;
            minus.weight[[i, c]] -= h;
            g.weight[[i, c]]
        };
        let numeric = (head_loss(&plus, f, &batch.labels) - head_loss(&minus, f, &batch.labels)) / (2.0 * h);
        let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:e} >= 1e-4"))?;
    Ok(format!("{checks} random head parameters, max relative error {worst:.1e}"))
}

fn criterion_3() -> Check {
    let mut config = ExperimentConfig::default_config();
    config.taus = vec![0.0];
    let exp = Experiment::build(&config).map_err(|e| e.to_string())?;
    for &t in &config.thresholds {
        let zero = exp.run(t, Some(0.0)).map_err(|e| e.to_string())?;
        let absent = exp.run(t, None).map_err(|e| e.to_string())?;
        ensure(zero == absent, || format!("outcomes differ at threshold {t}"))?;
    }
    let on = exp.sweep(true).map_err(|e| e.to_string())?;
    let off = exp.sweep(false).map_err(|e| e.to_string())?;
    ensure(on.to_csv() == off.to_csv() && on.to_json() == off.to_json(), || "reports differ".into())?;
    Ok(format!("{} thresholds x {} tasks: outcomes and reports identical", config.thresholds.len(), exp.tasks.len()))
}

static DEFAULT_SWEEP: OnceLock<SweepReport> = OnceLock::new();

fn default_sweep() -> &'static SweepReport {
    DEFAULT_SWEEP.get_or_init(|| run_sweep(&ExperimentConfig::default_config()).expect("default sweep runs"))
}

fn ascending(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn criterion_4() -> Check {
    let config = ExperimentConfig::default_config();
    let accs: Vec<f64> = config.tiers.iter().map(|t| t.accuracy.unwrap_or(0.0)).collect();
    ensure(accs == [0.80, 0.90, 0.96] && config.tiers.len() == 3, || format!("default tiers are {accs:?}"))?;
    let report = default_sweep();
    ensure(report.tasks == 1000, || format!("default workload has {} tasks", report.tasks))?;
    let taus = ascending(&config.taus);
    let mut problems = Vec::new();
    for &t in &config.thresholds {
        for w in taus.windows(2) {
            let (lo, hi) = (report.row(t, w[0]).unwrap(), report.row(t, w[1]).unwrap());
            if hi.mean_latency >= lo.mean_latency {
                problems.push(format!("(a) t={t}: latency {} at tau={} vs {} at tau={}", hi.mean_latency, w[1], lo.mean_latency, w[0]));
            }
            if hi.accuracy > lo.accuracy {
                problems.push(format!("(b) t={t}: accuracy {} at tau={} vs {} at tau={}", hi.accuracy, w[1], lo.accuracy, w[0]));
            }
        }
    }
    for &tau in &taus {
        let (a9, a7) = (report.row(0.9, tau).unwrap().accuracy, report.row(0.7, tau).unwrap().accuracy);
        if a9 < a7 {
            problems.push(format!("(c) tau={tau}: accuracy {a9} at t=0.9 < {a7} at t=0.7"));
        }
    }
    ensure(problems.is_empty(), || problems.join("; "))?;
    Ok("(a) latency strictly falls, (b) accuracy never rises with tau; (c) t=0.9 >= t=0.7 at every tau".into())
}

fn criterion_5() -> Check {
    let config = ExperimentConfig::default_config();
    let report = default_sweep();
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for &t in &config.thresholds {
        let base = report.row(t, 0.0).unwrap();
        for &tau in config.taus.iter().filter(|&&tau| tau > 0.0) {
            let r = report.row(t, tau).unwrap();
            let saving = 1.0 - r.mean_latency / base.mean_latency;
            let drop = base.accuracy - r.accuracy;
            if saving >= 0.10 && drop <= 0.07 && best.is_none_or(|b| saving > b.2) {
                best = Some((t, tau, saving, drop));
            }
        }
    }
    let (t, tau, saving, drop) = best.ok_or("no cell saves >= 10% latency within a 0.07 accuracy drop")?;
    Ok(format!("best cell t={t} tau={tau}: {:.1}% lower latency, accuracy drop {drop:.3}", saving * 100.0))
}

fn criterion_6() -> Check {
    let k = 10.0;
    let closed = |c: f64, t: f64| 1.0 / (1.0 + (k * ((c - t) / (1.0 - t) - 0.5)).exp());
    let mut worst = 0.0f64;
    for t in [0.1, 0.5, 0.7, 0.8, 0.9] {
        let p = OffloadParams::new(t, k, 0).unwrap();
        for i in 1..=1000 {
            let c = t * i as f64 / 1000.0;
            ensure(offload_probability(c, &p).unwrap() == 1.0, || format!("p({c}) != 1 at t={t}"))?;
        }
        let n = 10_000;
        let mut prev = f64::INFINITY;
        for i in 1..=n {
            let c = t + (1.0 - t) * i as f64 / n as f64;
            let v = offload_probability(c, &p).unwrap();
            ensure(v < prev, || format!("not strictly decreasing at conf={c}, t={t}"))?;
            prev = v;
        }
        for c in [t + 1e-9, (1.0 + t) / 2.0, 1.0] {
            worst = worst.max((offload_probability(c, &p).unwrap() - closed(c, t)).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("closed-form mismatch {worst:e}"))?;
    Ok(format!("flat at 1 below t, strictly decreasing above, endpoint error {worst:.1e}"))
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for _ in 0..200 {
        let (layers, heads, n) = (rng.random_range(1..7), rng.random_range(1..4), rng.random_range(1..12));
        let maps: Vec<Vec<Array2<f64>>> =
            (0..layers).map(|_| (0..heads).map(|_| random_stochastic(&mut rng, n)).collect()).collect();
        let total: f64 = accumulate_importance(&maps).unwrap().values().iter().sum();
        let expected = (layers * heads * n) as f64;
        ensure((total - expected).abs() <= 1e-9, || format!("importance total {total} != {expected}"))?;
    }

    let word = Tokenizer::new(1024, TokenizationMode::Word).unwrap();
    let sub = Tokenizer::new(1024, TokenizationMode::Subword).unwrap();
    let vocab = ["the", "screenplay", "is", "unconvincing", "but", "cinematography", "shines", "a", "fun", "ride"];
    for _ in 0..300 {
        let n = rng.random_range(1..10);
        let text: Vec<&str> = (0..n).map(|_| vocab[rng.random_range(0..vocab.len())]).collect();
        let text = text.join(" ");
        let (w, s) = (word.tokenize(&text).unwrap(), sub.tokenize(&text).unwrap());
        let keep: Vec<bool> = w.segmentation.special().iter().map(|&sp| sp || rng.random_bool(0.5)).collect();
        let mask = PruneMask::new(keep);
        let there = align_mask(&mask, &w.segmentation, &s.segmentation).unwrap();
        let back = align_mask(&there, &s.segmentation, &w.segmentation).unwrap();
        ensure(back == mask, || format!("round trip changed the mask for {text:?}"))?;
    }

    let vectors = 1000;
    for _ in 0..vectors {
        let n = rng.random_range(1..30);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let special: Vec<bool> = (0..n).map(|_| rng.random_bool(0.1)).collect();
        let imp = ImportanceVector::new(values).unwrap();
        let mut alphas: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..3.0)).collect();
        alphas.sort_by(f64::total_cmp);
        let masks: Vec<PruneMask> = alphas.iter().map(|&a| prune_mask(&imp, &PruneParams::new(a).unwrap(), &special)).collect();
        for pair in masks.windows(2) {
            let subset = pair[1].as_slice().iter().zip(pair[0].as_slice()).all(|(hi, lo)| !hi || *lo);
            ensure(subset, || "raising alpha kept a token that a lower alpha pruned".into())?;
        }
    }
    Ok(format!("importance totals exact, 300 alignment round trips, alpha monotone on {vectors} vectors"))
}

fn criterion_8() -> Check {
    let config = ExperimentConfig::default_config();
    let a = default_sweep();
    let b = run_sweep(&ExperimentConfig::from_toml(&config.to_toml()).unwrap()).map_err(|e| e.to_string())?;
    ensure(a.to_csv() == b.to_csv() && a.to_json() == b.to_json(), || "reports differ between runs".into())?;

    let exp = Experiment::build(&config).map_err(|e| e.to_string())?;
    let store = generate_traces(&exp).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("traces.jsonl");
    store.save(&path).map_err(|e| e.to_string())?;
    let again = generate_traces(&Experiment::build(&config).unwrap()).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    store.write(&mut x).unwrap();
    again.write(&mut y).unwrap();
    ensure(x == y, || "trace regeneration differs".into())?;

    let replayed = run_sweep(&exp.replay_config(&path)).map_err(|e| e.to_string())?;
    ensure(replayed.rows == a.rows, || "replayed metrics differ from the live sweep".into())?;
    Ok(format!("byte-identical reports; {} trace records replay to identical metrics", store.records().len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "oracle equivalence", criterion_1, Some(5.0)),
        (2, "gradient check", criterion_2, Some(10.0)),
        (3, "early-exit disable equivalence", criterion_3, None),
        (4, "trend reproduction", criterion_4, Some(60.0)),
        (5, "latency-reduction headline", criterion_5, None),
        (6, "offload-probability curve", criterion_6, None),
        (7, "pruning invariants", criterion_7, None),
        (8, "determinism and replay", criterion_8, None),
    ];
    let mut failed = 0;
    for (id, name, check, limit) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if secs >= l => Err(format!("took {secs:.2}s, limit {l}s")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS criterion {id} ({name}): {detail} [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}): {why} [{secs:.2}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
