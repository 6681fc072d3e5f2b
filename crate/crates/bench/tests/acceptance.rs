//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero on any failure.
//!
//! Oracles here are written independently of the library: plain full sorts, direct formula
//! evaluation, and finite differences.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use adaselection::combiner::{curriculum_reward, select};
use adaselection::sampler::Target;
use adaselection::scorers::select_standalone;
use adaselection::train::{
    per_sample_grad_norms, streams, train, Activation, GradNormMode, LossKind, Model, SgdMomentum, Strategy,
    TrainSettings,
};
use adaselection::{AdaSelectConfig, AdaSelector, CombinerState, MiniBatch, PerSampleStats, RngStream, Sample, ScorerKind};
use adaselection_bench::config::{BlobsSpec, ExperimentConfig, ModelSpec, StrategySpec};
use adaselection_bench::results::{append_weight_log, read_weight_log};
use adaselection_bench::{rank_table, run_sweep, WeightLogRow};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

/// First `k` positions of a stable descending sort, returned ascending.
fn oracle_top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    let mut top = idx[..k].to_vec();
    top.sort();
    top
}

fn oracle_softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

fn oracle_adaboost(losses: &[f64]) -> Vec<f64> {
    let lo = losses.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    losses
        .iter()
        .map(|l| {
            let u = if hi > lo { 0.01 + 0.98 * (l - lo) / (hi - lo) } else { 0.5 };
            0.5 * ((1.0 + u) / (1.0 - u)).ln()
        })
        .collect()
}

fn oracle_mean_closeness(losses: &[f64]) -> Vec<f64> {
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    losses.iter().map(|l| -(l - mean).abs()).collect()
}

fn oracle_coreset_mix(losses: &[f64], k: usize) -> Vec<usize> {
    let mut desc: Vec<usize> = (0..losses.len()).collect();
    desc.sort_by(|&a, &b| losses[b].partial_cmp(&losses[a]).unwrap());
    let mut asc: Vec<usize> = (0..losses.len()).collect();
    asc.sort_by(|&a, &b| losses[a].partial_cmp(&losses[b]).unwrap());
    let mut out: Vec<usize> = desc[..k.div_ceil(2)].to_vec();
    for i in asc {
        if out.len() == k {
            break;
        }
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out.sort();
    out
}

/// Standalone subset for every non-random strategy.
fn oracle_standalone(kind: ScorerKind, losses: &[f64], norms: &[f64], k: usize) -> Vec<usize> {
    match kind {
        ScorerKind::BigLoss => oracle_top_k(losses, k),
        ScorerKind::SmallLoss => oracle_top_k(&losses.iter().map(|l| -l).collect::<Vec<_>>(), k),
        ScorerKind::GradNorm => oracle_top_k(norms, k),
        ScorerKind::AdaBoost => oracle_top_k(&oracle_adaboost(losses), k),
        ScorerKind::CoresetMean => oracle_top_k(&oracle_mean_closeness(losses), k),
        ScorerKind::CoresetMix => oracle_coreset_mix(losses, k),
        ScorerKind::Uniform => unreachable!("random"),
    }
}

fn oracle_alpha(kind: ScorerKind, losses: &[f64], norms: &[f64]) -> Vec<f64> {
    let b = losses.len();
    let neg: Vec<f64> = losses.iter().map(|l| -l).collect();
    let normalized = |v: Vec<f64>| {
        let z: f64 = v.iter().sum();
        if z > 0.0 { v.iter().map(|x| x / z).collect() } else { vec![1.0 / b as f64; b] }
    };
    match kind {
        ScorerKind::Uniform => vec![1.0 / b as f64; b],
        ScorerKind::BigLoss => oracle_softmax(losses),
        ScorerKind::SmallLoss => oracle_softmax(&neg),
        ScorerKind::GradNorm => normalized(norms.to_vec()),
        ScorerKind::AdaBoost => normalized(oracle_adaboost(losses)),
        ScorerKind::CoresetMix => {
            oracle_softmax(losses).iter().zip(oracle_softmax(&neg)).map(|(a, b)| 0.5 * a + 0.5 * b).collect()
        }
        ScorerKind::CoresetMean => oracle_softmax(&oracle_mean_closeness(losses)),
    }
}

fn random_vec(rng: &mut RngStream, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() * scale).collect()
}

fn stats(losses: &[f64], norms: &[f64]) -> PerSampleStats {
    PerSampleStats::new(losses.to_vec(), Some(norms.to_vec())).unwrap()
}

fn scorer_oracles() -> Check {
    let start = Instant::now();
    let mut rng = RngStream::new(1, 100);
    let mut compared = 0;
    for _ in 0..1000 {
        let b = rng.random_range(1..=64);
        let losses = random_vec(&mut rng, b, 1.0);
        let norms = random_vec(&mut rng, b, 1.0);
        let s = stats(&losses, &norms);
        for k in 1..=b {
            for kind in ScorerKind::ALL.into_iter().filter(|k| *k != ScorerKind::Uniform) {
                let got = select_standalone(kind, &s, k, &mut rng).map_err(|e| e.to_string())?;
                ensure!(got == oracle_standalone(kind, &losses, &norms, k), "{kind} differs at b={b} k={k}");
                compared += 1;
            }
        }
    }

    let (b, k, trials) = (10, 3, 10_000);
    let s = PerSampleStats::from_losses(vec![1.0; b]).unwrap();
    let mut urng = RngStream::new(1, 101);
    let mut hits = vec![0u32; b];
    for _ in 0..trials {
        let picked = select_standalone(ScorerKind::Uniform, &s, k, &mut urng).unwrap();
        ensure!(picked.len() == k && picked.windows(2).all(|w| w[0] < w[1]), "bad uniform subset {picked:?}");
        for i in picked {
            hits[i] += 1;
        }
    }
    let p = k as f64 / b as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    let worst_z = hits.iter().map(|&h| (h as f64 / trials as f64 - p).abs() / se).fold(0.0, f64::max);
    ensure!(worst_z <= 3.0, "uniform inclusion frequency off by {worst_z:.2} standard errors");
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "took {secs:.2} s");
    Ok(format!("{compared} selections match; uniform worst |z| = {worst_z:.2} over {trials} trials; {secs:.2} s"))
}

fn adaboost_is_big_loss() -> Check {
    let mut rng = RngStream::new(2, 100);
    let mut compared = 0;
    for _ in 0..1000 {
        let b = rng.random_range(1..=64);
        let losses = random_vec(&mut rng, b, 5.0);
        let s = PerSampleStats::from_losses(losses).unwrap();
        for k in 1..=b {
            let ada = select_standalone(ScorerKind::AdaBoost, &s, k, &mut rng).unwrap();
            let big = select_standalone(ScorerKind::BigLoss, &s, k, &mut rng).unwrap();
            ensure!(ada == big, "sets differ at b={b} k={k}");
            compared += 1;
        }
    }
    Ok(format!("{compared} (batch, k) pairs identical"))
}

fn combiner_oracle() -> Check {
    let start = Instant::now();
    let mut gen = RngStream::new(3, 100);
    let (mut batches, mut max_diff) = (0, 0.0f64);
    while batches < 500 {
        let m = gen.random_range(2..=4);
        let mut kinds = ScorerKind::ALL.to_vec();
        let mut candidates = Vec::new();
        for _ in 0..m {
            candidates.push(kinds.remove(gen.random_range(0..kinds.len())));
        }
        let beta = gen.random_range(-1.0..=1.0);
        let kappa = gen.random_range(-1.0..=0.5);
        let curriculum = gen.random_bool(0.7);
        let percent: usize = gen.random_range(1..=100);
        let cfg = AdaSelectConfig {
            candidates: candidates.clone(),
            beta,
            curriculum,
            kappa,
            sampling_rate: percent as f64 / 100.0,
            temperature: 1.0,
        };
        let mut state = CombinerState::init(&cfg).unwrap();
        let seed = gen.random::<u64>();
        let mut lib_rng = RngStream::new(seed, 2);
        let mut oracle_rng = RngStream::new(seed, 2);

        let mut w = vec![1.0 / m as f64; m];
        let mut prev: Option<Vec<f64>> = None;
        for t in 1..=10u64 {
            let b = gen.random_range(1..=64);
            let losses: Vec<f64> = (0..b).map(|_| gen.random_range(0.05..1.0)).collect();
            let norms = random_vec(&mut gen, b, 2.0);
            let k = (b * percent / 100).max(1);

            let alphas: Vec<Vec<f64>> = candidates.iter().map(|&c| oracle_alpha(c, &losses, &norms)).collect();
            let avg: Vec<f64> = candidates
                .iter()
                .map(|&c| {
                    let subset = if c == ScorerKind::Uniform {
                        let mut v = rand::seq::index::sample(&mut oracle_rng, b, k).into_vec();
                        v.sort();
                        v
                    } else {
                        oracle_standalone(c, &losses, &norms, k)
                    };
                    subset.iter().map(|&i| losses[i]).sum::<f64>() / subset.len() as f64
                })
                .collect();
            if let Some(p) = &prev {
                for j in 0..m {
                    w[j] *= (beta * (avg[j] - p[j]).abs() / p[j].max(1e-12)).exp();
                }
                let z: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= z);
            }
            prev = Some(avg);
            let sum_sq: f64 = losses.iter().map(|l| l * l).sum();
            let scores: Vec<f64> = (0..b)
                .map(|i| {
                    let r = if curriculum { (-(t as f64).powf(kappa) * losses[i] / sum_sq).exp() } else { 1.0 };
                    r * (0..m).map(|j| w[j] * alphas[j][i]).sum::<f64>()
                })
                .collect();
            let chosen = oracle_top_k(&scores, k);

            let out = select(&mut state, &stats(&losses, &norms), &cfg, &mut lib_rng).map_err(|e| e.to_string())?;
            ensure!(out.t == t, "iteration counter {} != {t}", out.t);
            ensure!(out.chosen == chosen, "chosen sets differ for {candidates:?} at t={t}");
            for (a, e) in out.scores.iter().zip(&scores) {
                max_diff = max_diff.max((a - e).abs());
            }
            batches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(max_diff <= 1e-12, "score difference {max_diff:e}");
    ensure!(secs < 10.0, "took {secs:.2} s");
    Ok(format!("{batches} batches; max score difference {max_diff:.1e}; {secs:.2} s"))
}

fn regression_dataset(n_train: usize, n_test: usize) -> adaselection::Dataset {
    ExperimentConfig { n_train, n_test, ..Default::default() }.build_dataset().unwrap()
}

fn degenerate_combiner() -> Check {
    let ds = regression_dataset(10_000, 1_000);
    let settings = TrainSettings { epochs: 1, record_selections: true, ..TrainSettings::default() };
    let runs: Vec<Vec<Vec<usize>>> = [
        Strategy::Standalone(ScorerKind::BigLoss),
        Strategy::AdaSelect(AdaSelectConfig {
            candidates: vec![ScorerKind::BigLoss],
            beta: 0.0,
            curriculum: false,
            ..AdaSelectConfig::default()
        }),
    ]
    .iter()
    .map(|strategy| {
        let mut model = Model::simple_mlp(1, 1).unwrap().initialized(&mut RngStream::new(0, streams::INIT));
        let mut opt = SgdMomentum::new(0.01, 0.9, &model).unwrap();
        train(strategy, &ds, &mut model, LossKind::MeanSquaredError, &mut opt, &settings).unwrap().selections
    })
    .collect();
    ensure!(runs[0].len() == 100, "expected 100 batches, got {}", runs[0].len());
    ensure!(runs[0] == runs[1], "selections diverge");
    Ok("100 of 100 batches select identical samples".into())
}

fn weight_update() -> Check {
    let mut state = CombinerState::new(2).unwrap();
    state.update(&[1.0, 1.0], 1.0).unwrap();
    state.update(&[1.5, 1.0], 1.0).unwrap();
    let e = 0.5f64.exp();
    let expected = [e / (e + 1.0), 1.0 / (e + 1.0)];
    let err = state.weights().iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure!(err <= 1e-12, "weights {:?}, error {err:e}", state.weights());
    // 1 / (1 + exp(-1/2))
    ensure!((state.weights()[0] - 0.622_459_331_201_854_6).abs() <= 1e-12, "closed form mismatch");

    let mut frozen = CombinerState::new(3).unwrap();
    let start = frozen.weights().to_vec();
    let mut rng = RngStream::new(5, 100);
    for _ in 0..1000 {
        frozen.update(&random_vec(&mut rng, 3, 10.0), 0.0).unwrap();
        ensure!(
            frozen.weights().iter().zip(&start).all(|(a, b)| a.to_bits() == b.to_bits()),
            "beta = 0 weights moved"
        );
    }
    Ok(format!("error {err:.1e}; beta = 0 bit-stable over 1000 updates"))
}

fn curriculum_decay() -> Check {
    let late = curriculum_reward(&[1.0, 2.0], 1_000_000, -0.5);
    ensure!(late.iter().all(|r| (r - 1.0).abs() <= 1e-3), "late rewards {late:?}");
    ensure!(
        (late[0] - late[1]).abs() <= 1e-6,
        "t=1e6 rewards {:.7} and {:.7} are within 1e-3 of 1 but differ by {:.3e}; the formula gives exp(-1e-3/5) - exp(-2e-3/5), and a 1e-6 gap needs t >= 4e10 at kappa = -0.5",
        late[0],
        late[1],
        (late[0] - late[1]).abs()
    );
    let early = curriculum_reward(&[1.0, 2.0], 1, -0.5);
    ensure!(early[0] > early[1], "early rewards {early:?}");
    Ok(format!("t=1e6: {:.7} / {:.7}; t=1: {:.4} > {:.4}", late[0], late[1], early[0], early[1]))
}

fn finite_difference_norm(model: &Model, sample: &Sample, loss: LossKind, h: f64) -> f64 {
    let mut probe = model.clone();
    let mut sq = 0.0;
    for p in 0..model.param_count() {
        let base = model.params()[p];
        probe.params_mut()[p] = base + h;
        let up = probe.sample_loss(sample, loss).unwrap();
        probe.params_mut()[p] = base - h;
        let down = probe.sample_loss(sample, loss).unwrap();
        probe.params_mut()[p] = base;
        let g = (up - down) / (2.0 * h);
        sq += g * g;
    }
    sq.sqrt()
}

fn gradient_correctness() -> Check {
    let mut rng = RngStream::new(7, 100);
    let mut worst = 0.0f64;
    let cases = [
        (Model::linear(3, 1).unwrap(), LossKind::MeanSquaredError),
        (Model::mlp(vec![4, 8, 3], Activation::Relu).unwrap(), LossKind::CrossEntropy),
    ];
    for (model, loss) in cases {
        let model = model.initialized(&mut rng);
        let samples: Vec<Sample> = (0..10)
            .map(|id| {
                let x: Vec<f64> = (0..model.input_dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
                let target = match loss {
                    LossKind::MeanSquaredError => Target::Value(rng.random_range(-3.0..3.0)),
                    LossKind::CrossEntropy => Target::Class(rng.random_range(0..model.output_dim())),
                };
                Sample::new(id, x, target).unwrap()
            })
            .collect();
        let batch = MiniBatch::new(samples.iter().collect(), 0).unwrap();
        let exact = per_sample_grad_norms(&model, &batch, loss, GradNormMode::Exact).unwrap();
        for (s, g) in samples.iter().zip(exact) {
            let fd = finite_difference_norm(&model, s, loss, 1e-5);
            let rel = (g - fd).abs() / fd.abs().max(1e-12);
            ensure!(rel <= 1e-4, "{loss:?} sample {}: exact {g}, finite difference {fd}", s.id);
            worst = worst.max(rel);
        }
    }
    Ok(format!("20 samples; worst relative error {worst:.1e}"))
}

fn end_to_end_regression() -> Check {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let ds = cfg.build_dataset().map_err(|e| e.to_string())?;
    let run = |strategy: Strategy, rate: f64| {
        let mut model = cfg.build_model(&ds).unwrap();
        let mut opt = SgdMomentum::new(cfg.lr, cfg.momentum, &model).unwrap();
        let settings = TrainSettings { sampling_rate: rate, ..TrainSettings::default() };
        train(&strategy, &ds, &mut model, LossKind::MeanSquaredError, &mut opt, &settings).unwrap()
    };
    let full = run(Strategy::Full, 1.0);
    let ada = run(Strategy::AdaSelect(AdaSelectConfig::default()), 0.5);
    let full_mse = full.last().unwrap().test_mse.unwrap();
    let ada_mse = ada.last().unwrap().test_mse.unwrap();
    let (fb, ab) = (full.total_backward_samples(), ada.total_backward_samples());
    let secs = start.elapsed().as_secs_f64();
    ensure!(full_mse <= 0.012, "full test MSE {full_mse:.5}");
    ensure!(ada_mse <= 1.5 * full_mse, "adaselect test MSE {ada_mse:.5} vs full {full_mse:.5}");
    ensure!(2 * ab == fb, "backward samples {ab} vs full {fb}");
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!(
        "full MSE {full_mse:.5}, adaselect MSE {ada_mse:.5} ({:.3}x), backward {ab}/{fb}; {secs:.1} s",
        ada_mse / full_mse
    ))
}

fn blobs_config() -> ExperimentConfig {
    ExperimentConfig { dataset: "blobs".into(), blobs: BlobsSpec::default(), ..Default::default() }
}

fn backward_accounting() -> Check {
    let cfg = blobs_config();
    let ds = cfg.build_dataset().map_err(|e| e.to_string())?;
    let full_count = ds.train.len();
    ensure!(full_count % cfg.batch == 0, "train size {full_count} not a multiple of the batch");
    let mut checked = 0;
    for spec in StrategySpec::all().into_iter().filter(|s| *s != StrategySpec::Full) {
        for rate in [0.1, 0.2, 0.5] {
            let mut model = cfg.build_model(&ds).unwrap();
            let mut opt = SgdMomentum::new(cfg.lr, cfg.momentum, &model).unwrap();
            let settings = TrainSettings { epochs: 3, sampling_rate: rate, ..TrainSettings::default() };
            let report = train(&cfg.strategy(spec, 0.5, rate), &ds, &mut model, LossKind::CrossEntropy, &mut opt, &settings)
                .map_err(|e| e.to_string())?;
            let expected = (full_count as f64 * rate).round() as usize;
            for e in &report.epochs {
                ensure!(e.backward_samples == expected, "{spec} at {rate}: epoch {} has {} not {expected}", e.epoch, e.backward_samples);
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} strategy/rate runs, every epoch exactly rate x {full_count}"))
}

fn csv_without_wall_time(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    let drop = header.iter().position(|h| h == "wall_ms");
    let strip = |rec: &csv::StringRecord| -> Vec<String> {
        rec.iter().enumerate().filter(|(i, _)| Some(*i) != drop).map(|(_, v)| v.to_owned()).collect()
    };
    std::iter::once(strip(&header)).chain(r.records().map(|rec| strip(&rec.unwrap()))).collect()
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let cfg = ExperimentConfig {
            epochs: 2,
            rates: vec![0.2, 0.5],
            betas: vec![-0.5, 0.5],
            seed: 11,
            out: dir.path().join(format!("run{run}.csv")),
            ..blobs_config()
        };
        let sweep = run_sweep(&cfg).map_err(|e| e.to_string())?;
        let weights = std::fs::read(&sweep.weights_path).map_err(|e| e.to_string())?;
        outputs.push((csv_without_wall_time(&sweep.results_path), weights));
    }
    ensure!(outputs[0].0 == outputs[1].0, "result CSVs differ");
    ensure!(outputs[0].1 == outputs[1].1, "weight logs differ");
    Ok(format!("{} result rows and weight log identical across two sweeps", outputs[0].0.len() - 1))
}

fn scoring_overhead() -> Check {
    let cfg = ExperimentConfig { model: ModelSpec::Mlp, ..blobs_config() };
    let ds = cfg.build_dataset().map_err(|e| e.to_string())?;
    let mut model = cfg.build_model(&ds).unwrap();
    let mut opt = SgdMomentum::new(cfg.lr, cfg.momentum, &model).unwrap();
    let ada = AdaSelectConfig { candidates: ScorerKind::ALL.to_vec(), ..AdaSelectConfig::default() };
    let report = train(&Strategy::AdaSelect(ada), &ds, &mut model, LossKind::CrossEntropy, &mut opt, &TrainSettings::default())
        .map_err(|e| e.to_string())?;
    let (sel, wall) = (report.total_selection_ms(), report.total_wall_ms());
    let ratio = sel / wall;
    ensure!(ratio <= 0.15, "selection took {:.1}% of {wall:.0} ms", 100.0 * ratio);
    Ok(format!("selection {sel:.1} ms of {wall:.1} ms wall: {:.2}%", 100.0 * ratio))
}

fn harness_integrity() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig { n_train: 2000, n_test: 1000, epochs: 5, out: dir.path().join("grid.csv"), ..Default::default() };
    let sweep = run_sweep(&cfg).map_err(|e| e.to_string())?;
    ensure!(sweep.failures == 0, "{} runs failed", sweep.failures);
    let rows = adaselection_bench::results::read_results(&sweep.results_path).map_err(|e| e.to_string())?;
    let table = rank_table(&rows).map_err(|e| e.to_string())?;
    ensure!(table.labels.len() == 9, "{} strategies ranked", table.labels.len());
    ensure!(table.tasks.len() == 5, "{} tasks", table.tasks.len());
    for ranks in &table.ranks {
        ensure!((ranks.iter().sum::<f64>() - 45.0).abs() < 1e-9, "ranks {ranks:?} do not sum to 1+..+9");
    }
    ensure!(table.to_markdown().lines().count() == 2 + 5 + 1, "markdown table shape");

    // BigLoss's subset average swings every iteration while SmallLoss's stays fixed.
    let ada = AdaSelectConfig {
        candidates: vec![ScorerKind::BigLoss, ScorerKind::SmallLoss],
        beta: 1.0,
        curriculum: false,
        sampling_rate: 0.2,
        ..AdaSelectConfig::default()
    };
    let mut selector = AdaSelector::new(ada).unwrap();
    let mut rng = RngStream::new(0, 2);
    let mut log = Vec::new();
    for t in 0..15 {
        let high = if t % 2 == 0 { 1.0 } else { 3.0 };
        let losses = vec![0.1, 0.1, 0.1, 0.1, 0.5, 0.5, 0.5, 0.5, high, high];
        let out = selector.select(&PerSampleStats::from_losses(losses).unwrap(), &mut rng).unwrap();
        for (m, kind) in ["big_loss", "small_loss"].iter().enumerate() {
            log.push(WeightLogRow {
                run_id: "constructed".into(),
                t: out.t,
                method: kind.to_string(),
                weight: out.weights[m],
                avg_subset_loss: out.method_avg_loss[m],
            });
        }
    }
    let path = dir.path().join("grid_weights_constructed.csv");
    append_weight_log(&path, &log).map_err(|e| e.to_string())?;
    let back = read_weight_log(&path).map_err(|e| e.to_string())?;
    let big: Vec<f64> = back.iter().filter(|r| r.method == "big_loss").map(|r| r.weight).collect();
    ensure!(big.len() == 15, "weight log has {} big_loss rows", big.len());
    ensure!(big.windows(2).all(|w| w[1] > w[0]), "big_loss weight not strictly increasing: {big:?}");
    Ok(format!(
        "{} cells, rank table mean ranks {:?}; dominant weight {:.3} -> {:.6}",
        sweep.cells_run,
        table.mean_rank.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>(),
        big[0],
        big[14]
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("scorer oracle equivalence", scorer_oracles),
        ("adaboost selects as big_loss", adaboost_is_big_loss),
        ("combiner oracle equivalence", combiner_oracle),
        ("single-candidate combiner", degenerate_combiner),
        ("method weight update", weight_update),
        ("curriculum decay", curriculum_decay),
        ("gradient correctness", gradient_correctness),
        ("end-to-end regression", end_to_end_regression),
        ("backward-sample accounting", backward_accounting),
        ("determinism", determinism),
        ("scoring overhead", scoring_overhead),
        ("harness integrity", harness_integrity),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
