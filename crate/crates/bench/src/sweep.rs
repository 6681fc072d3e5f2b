//! Running single configurations and strategy x rate x beta grids.

use std::collections::HashSet;
use std::path::PathBuf;

use adaselection::train::{train, SgdMomentum, TrainReport, TrainSettings};
use adaselection::Dataset;

use crate::config::{ExperimentConfig, StrategySpec};
use crate::plot;
use crate::results::{append_results, append_weight_log, read_results, sibling_path, ResultRow, WeightLogRow};
use crate::BenchError;

/// One grid cell. `Full` is a single cell reported once per rate.
#[derive(Clone, Debug)]
struct Cell {
    spec: StrategySpec,
    rates: Vec<f64>,
    beta: Option<f64>,
}

fn cells(config: &ExperimentConfig) -> Result<Vec<Cell>, BenchError> {
    let mut out = Vec::new();
    for spec in config.strategy_specs()? {
        match spec {
            StrategySpec::Full => out.push(Cell { spec, rates: config.rates.clone(), beta: None }),
            StrategySpec::Standalone(_) => {
                out.extend(config.rates.iter().map(|&r| Cell { spec, rates: vec![r], beta: None }))
            }
            StrategySpec::AdaSelect => {
                for &r in &config.rates {
                    out.extend(config.betas.iter().map(|&b| Cell { spec, rates: vec![r], beta: Some(b) }));
                }
            }
        }
    }
    Ok(out)
}

/// Identity of a finished (strategy, rate, beta, seed) combination.
type CellKey = (String, u64, Option<u64>, u64);

fn key(strategy: &str, rate: f64, beta: Option<f64>, seed: u64) -> CellKey {
    (strategy.to_owned(), rate.to_bits(), beta.map(f64::to_bits), seed)
}

pub fn run_id(strategy: &str, rate: f64, beta: Option<f64>, seed: u64) -> String {
    match beta {
        Some(b) => format!("{strategy}_r{rate}_b{b}_s{seed}"),
        None => format!("{strategy}_r{rate}_s{seed}"),
    }
}

/// Output of one training run, before it is spread into rows.
pub struct CellRun {
    pub report: Result<TrainReport, adaselection::Error>,
}

fn train_cell(
    config: &ExperimentConfig,
    dataset: &Dataset,
    spec: StrategySpec,
    rate: f64,
    beta: Option<f64>,
) -> Result<CellRun, BenchError> {
    let mut model = config.build_model(dataset)?;
    let mut opt = SgdMomentum::new(config.lr, config.momentum, &model)?;
    let strategy = config.strategy(spec, beta.unwrap_or(0.0), rate);
    let settings = TrainSettings {
        epochs: config.epochs,
        batch_size: config.batch,
        sampling_rate: rate,
        seed: config.seed,
        grad_norm_mode: config.grad_norm_mode,
        record_selections: false,
    };
    let loss = ExperimentConfig::loss_for(dataset);
    Ok(CellRun { report: train(&strategy, dataset, &mut model, loss, &mut opt, &settings) })
}

fn rows_for(
    config: &ExperimentConfig,
    dataset: &Dataset,
    spec: StrategySpec,
    rate: f64,
    beta: Option<f64>,
    run: &CellRun,
) -> Vec<ResultRow> {
    let base = ResultRow {
        dataset: dataset.name.clone(),
        strategy: spec.token().to_owned(),
        sampling_rate: rate,
        beta,
        epoch: config.epochs,
        train_loss: None,
        test_loss: None,
        test_accuracy: None,
        backward_samples: 0,
        wall_ms: 0.0,
        seed: config.seed,
        failed: true,
    };
    match &run.report {
        Ok(report) => report
            .epochs
            .iter()
            .map(|e| ResultRow {
                epoch: e.epoch,
                train_loss: Some(e.train_loss),
                test_loss: Some(e.test_loss),
                test_accuracy: e.test_accuracy,
                backward_samples: e.backward_samples,
                wall_ms: e.wall_ms,
                failed: false,
                ..base.clone()
            })
            .collect(),
        Err(_) => vec![base],
    }
}

fn weight_rows(report: &TrainReport, run_id: &str) -> Vec<WeightLogRow> {
    report
        .weight_trace
        .iter()
        .flat_map(|rec| {
            report.candidates.iter().enumerate().map(move |(m, kind)| WeightLogRow {
                run_id: run_id.to_owned(),
                t: rec.t,
                method: kind.token().to_owned(),
                weight: rec.weights[m],
                avg_subset_loss: rec.avg_subset_loss[m],
            })
        })
        .collect()
}

#[derive(Debug)]
pub struct SweepOutcome {
    /// Rows written by this invocation.
    pub rows: Vec<ResultRow>,
    pub cells_run: usize,
    pub cells_skipped: usize,
    pub failures: usize,
    pub results_path: PathBuf,
    pub weights_path: PathBuf,
    pub plot_path: PathBuf,
}

/// Runs every cell of the grid not already present in `config.out`, appending its rows.
///
/// Diverged runs are recorded with `failed = true` and the sweep continues.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutcome, BenchError> {
    config.validate()?;
    let dataset = config.build_dataset()?;
    let results_path = config.out.clone();
    let weights_path = sibling_path(&results_path, "weights.csv");
    let plot_path = sibling_path(&results_path, "plot.py");

    let done: HashSet<CellKey> = if results_path.exists() {
        read_results(&results_path)?
            .into_iter()
            .filter(|r| r.failed || r.epoch == config.epochs)
            .map(|r| key(&r.strategy, r.sampling_rate, r.beta, r.seed))
            .collect()
    } else {
        HashSet::new()
    };

    let mut outcome = SweepOutcome {
        rows: Vec::new(),
        cells_run: 0,
        cells_skipped: 0,
        failures: 0,
        results_path,
        weights_path,
        plot_path,
    };
    for cell in cells(config)? {
        let token = cell.spec.token();
        let pending: Vec<f64> =
            cell.rates.iter().copied().filter(|&r| !done.contains(&key(token, r, cell.beta, config.seed))).collect();
        if pending.is_empty() {
            outcome.cells_skipped += 1;
            continue;
        }
        // Full ignores the rate, so one run serves every pending rate.
        let run = train_cell(config, &dataset, cell.spec, pending[0], cell.beta)?;
        outcome.cells_run += 1;
        if run.report.is_err() {
            outcome.failures += 1;
        }
        let mut rows = Vec::new();
        for &rate in &pending {
            rows.extend(rows_for(config, &dataset, cell.spec, rate, cell.beta, &run));
        }
        if let Ok(report) = &run.report {
            if !report.weight_trace.is_empty() {
                let id = run_id(token, pending[0], cell.beta, config.seed);
                append_weight_log(&outcome.weights_path, &weight_rows(report, &id))?;
            }
        }
        append_results(&outcome.results_path, &rows)?;
        outcome.rows.extend(rows);
    }
    plot::write_plot_script(&outcome.plot_path, &outcome.results_path, &outcome.weights_path)?;
    Ok(outcome)
}

/// Runs exactly one (strategy, rate, beta) configuration and appends its rows.
///
/// Unlike a sweep, a diverged run is an error.
pub fn run_single(config: &ExperimentConfig) -> Result<(Vec<ResultRow>, TrainReport), BenchError> {
    config.validate()?;
    let specs = config.strategy_specs()?;
    if specs.len() != 1 || config.rates.len() != 1 || config.betas.len() != 1 {
        return Err(BenchError::Config("run takes a single strategy, rate and beta; use sweep for grids".into()));
    }
    let dataset = config.build_dataset()?;
    let spec = specs[0];
    let rate = config.rates[0];
    let beta = (spec == StrategySpec::AdaSelect).then_some(config.betas[0]);
    let run = train_cell(config, &dataset, spec, rate, beta)?;
    let rows = rows_for(config, &dataset, spec, rate, beta, &run);
    append_results(&config.out, &rows)?;
    match run.report {
        Ok(report) => {
            if !report.weight_trace.is_empty() {
                let id = run_id(spec.token(), rate, beta, config.seed);
                append_weight_log(&sibling_path(&config.out, "weights.csv"), &weight_rows(&report, &id))?;
            }
            Ok((rows, report))
        }
        Err(adaselection::Error::Divergence) => Err(BenchError::Divergence(spec.token().to_owned())),
        Err(e) => Err(e.into()),
    }
}
