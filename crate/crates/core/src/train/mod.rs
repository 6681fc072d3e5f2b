//! Minimal deterministic trainer running the selective-backprop loop.
//!
//! Per batch: a probe forward pass measures per-sample losses (and gradient norms when a
//! strategy needs them), the strategy picks a subset, and the subset goes into an
//! [`AccumulationBuffer`]. Only when the buffer holds a full batch does a backward pass run,
//! on freshly computed gradients of the flushed samples.

mod model;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use model::{Activation, LossKind, Model, ModelKind};

use crate::combiner::AdaSelector;
use crate::scorers::select_standalone;
use crate::{
    AccumulationBuffer, AdaSelectConfig, Dataset, Error, MiniBatch, PerSampleStats, Result, RngStream, Sample,
    ScorerKind, Target,
};

/// Stream ids derived from the run seed.
pub mod streams {
    pub const INIT: u64 = 0;
    pub const SHUFFLE: u64 = 1;
    pub const SELECT: u64 = 2;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradNormMode {
    #[default]
    Exact,
    /// Norm over the output layer's parameters only.
    LastLayer,
}

/// Per-sample losses under the current parameters. Does not touch the model.
pub fn forward_per_sample_losses(model: &Model, batch: &MiniBatch<'_>, loss: LossKind) -> Result<Vec<f64>> {
    batch.samples().iter().map(|s| model.sample_loss(s, loss)).collect()
}

pub fn per_sample_grad_norms(
    model: &Model,
    batch: &MiniBatch<'_>,
    loss: LossKind,
    mode: GradNormMode,
) -> Result<Vec<f64>> {
    let range = match mode {
        GradNormMode::Exact => 0..model.param_count(),
        GradNormMode::LastLayer => model.last_layer_range(),
    };
    batch
        .samples()
        .iter()
        .map(|s| {
            let (_, g) = model.sample_gradient(s, loss)?;
            Ok(g[range.clone()].iter().map(|v| v * v).sum::<f64>().sqrt())
        })
        .collect()
}

/// Mean of the per-sample gradients over `samples`.
pub fn mean_gradient(model: &Model, samples: &[&Sample], loss: LossKind) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut grad = vec![0.0; model.param_count()];
    let scale = 1.0 / samples.len() as f64;
    for s in samples {
        model.accumulate_gradient(s, loss, scale, &mut grad)?;
    }
    Ok(grad)
}

/// SGD with heavy-ball momentum: `v <- momentum * v + g`, `theta <- theta - lr * v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdMomentum {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl SgdMomentum {
    pub fn new(learning_rate: f64, momentum: f64, model: &Model) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate must be positive, got {learning_rate}")));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidConfig(format!("momentum must lie in [0, 1), got {momentum}")));
        }
        Ok(Self { learning_rate, momentum, velocity: vec![0.0; model.param_count()] })
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    /// Applies a precomputed gradient.
    pub fn apply(&mut self, model: &mut Model, grad: &[f64]) -> Result<()> {
        if grad.len() != self.velocity.len() {
            return Err(Error::DimensionMismatch { expected: self.velocity.len(), got: grad.len() });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence);
        }
        for ((v, g), p) in self.velocity.iter_mut().zip(grad).zip(model.params_mut()) {
            *v = self.momentum * *v + g;
            *p -= self.learning_rate * *v;
        }
        if model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence);
        }
        Ok(())
    }

    /// One update on the mean gradient of `samples`.
    pub fn step(&mut self, model: &mut Model, samples: &[&Sample], loss: LossKind) -> Result<()> {
        let grad = mean_gradient(model, samples, loss)?;
        self.apply(model, &grad)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    /// Mean per-sample loss.
    pub loss: f64,
    /// Fraction of argmax-correct predictions, classification only.
    pub accuracy: Option<f64>,
    /// Mean of `(y_hat - y)^2`, regression only.
    pub mse: Option<f64>,
}

pub fn evaluate(model: &Model, samples: &[Sample], loss: LossKind) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = samples.len() as f64;
    let mut total_loss = 0.0;
    let mut correct = 0usize;
    let mut sq = 0.0;
    let mut classification = false;
    for s in samples {
        total_loss += model.sample_loss(s, loss)?;
        let out = model.output(&s.features)?;
        match s.target {
            Target::Class(c) => {
                classification = true;
                if argmax(&out) == c {
                    correct += 1;
                }
            }
            Target::Value(y) => sq += (out[0] - y).powi(2),
        }
    }
    Ok(Evaluation {
        loss: total_loss / n,
        accuracy: classification.then(|| correct as f64 / n),
        mse: (!classification).then(|| sq / n),
    })
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// No subsampling: every batch is backpropagated.
    Full,
    Standalone(ScorerKind),
    AdaSelect(AdaSelectConfig),
}

impl Strategy {
    pub fn label(&self) -> String {
        match self {
            Strategy::Full => "full".into(),
            Strategy::Standalone(kind) => kind.token().into(),
            Strategy::AdaSelect(_) => "adaselect".into(),
        }
    }

    fn needs_grad_norms(&self) -> bool {
        match self {
            Strategy::Full => false,
            Strategy::Standalone(kind) => kind.needs_grad_norms(),
            Strategy::AdaSelect(cfg) => cfg.needs_grad_norms(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    /// Overrides the sampling rate carried by an AdaSelect config. Ignored by `Full`.
    pub sampling_rate: f64,
    pub seed: u64,
    pub grad_norm_mode: GradNormMode,
    /// Keep the chosen sample ids of every batch in the report.
    pub record_selections: bool,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 100,
            sampling_rate: 0.2,
            seed: 0,
            grad_norm_mode: GradNormMode::Exact,
            record_selections: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: Option<f64>,
    pub test_mse: Option<f64>,
    pub backward_samples: usize,
    pub sgd_updates: usize,
    pub wall_ms: f64,
    /// Time spent inside scoring and subset selection.
    pub selection_ms: f64,
}

/// One combiner iteration, as logged for weight-evolution plots.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightRecord {
    pub t: u64,
    pub weights: Vec<f64>,
    pub avg_subset_loss: Vec<f64>,
    pub chosen: usize,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Candidate order for `weight_trace` columns; empty unless the strategy is AdaSelect.
    pub candidates: Vec<ScorerKind>,
    pub weight_trace: Vec<WeightRecord>,
    /// Chosen sample ids per batch when `record_selections` is set.
    pub selections: Vec<Vec<usize>>,
}

impl TrainReport {
    pub fn total_backward_samples(&self) -> usize {
        self.epochs.iter().map(|e| e.backward_samples).sum()
    }

    pub fn total_wall_ms(&self) -> f64 {
        self.epochs.iter().map(|e| e.wall_ms).sum()
    }

    pub fn total_selection_ms(&self) -> f64 {
        self.epochs.iter().map(|e| e.selection_ms).sum()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

/// Wall clock that reads zero where `Instant` is unavailable (browser wasm).
#[derive(Clone, Copy)]
struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn ms(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64() * 1e3
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

enum Selector {
    Full,
    Standalone(ScorerKind),
    Ada(AdaSelector),
}

/// Trains `model` in place and reports per-epoch metrics.
pub fn train(
    strategy: &Strategy,
    dataset: &Dataset,
    model: &mut Model,
    loss: LossKind,
    opt: &mut SgdMomentum,
    settings: &TrainSettings,
) -> Result<TrainReport> {
    if dataset.train.is_empty() || dataset.test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dataset.input_dim != model.input_dim() {
        return Err(Error::DimensionMismatch { expected: model.input_dim(), got: dataset.input_dim });
    }
    if settings.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1".into()));
    }
    if !(settings.sampling_rate > 0.0 && settings.sampling_rate <= 1.0) {
        return Err(Error::InvalidConfig(format!("sampling rate must lie in (0, 1], got {}", settings.sampling_rate)));
    }

    let mut selector = match strategy {
        Strategy::Full => Selector::Full,
        Strategy::Standalone(kind) => Selector::Standalone(*kind),
        Strategy::AdaSelect(cfg) => {
            let cfg = AdaSelectConfig { sampling_rate: settings.sampling_rate, ..cfg.clone() };
            Selector::Ada(AdaSelector::new(cfg)?)
        }
    };
    let needs_norms = strategy.needs_grad_norms();
    let mut report = TrainReport {
        candidates: match strategy {
            Strategy::AdaSelect(cfg) => cfg.candidates.clone(),
            _ => Vec::new(),
        },
        ..TrainReport::default()
    };

    let mut shuffle_rng = RngStream::new(settings.seed, streams::SHUFFLE);
    let mut select_rng = RngStream::new(settings.seed, streams::SELECT);
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut buffer: AccumulationBuffer<&Sample> = AccumulationBuffer::new(settings.batch_size)?;
    let mut iteration = 0u64;

    for epoch in 1..=settings.epochs {
        let clock = Stopwatch::start();
        let mut selection_ms = 0.0;
        let mut backward_samples = 0;
        let mut sgd_updates = 0;
        order.shuffle(&mut shuffle_rng);

        for chunk in order.chunks(settings.batch_size) {
            let batch = MiniBatch::new(chunk.iter().map(|&i| &dataset.train[i]).collect(), iteration)?;
            iteration += 1;
            if let Selector::Full = selector {
                opt.step(model, batch.samples(), loss)?;
                backward_samples += batch.len();
                sgd_updates += 1;
                continue;
            }

            let losses = forward_per_sample_losses(model, &batch, loss)?;
            let norms = if needs_norms {
                Some(per_sample_grad_norms(model, &batch, loss, settings.grad_norm_mode)?)
            } else {
                None
            };
            let stats = PerSampleStats::new(losses, norms)?;

            let timer = Stopwatch::start();
            let chosen = match &mut selector {
                Selector::Standalone(kind) => {
                    let k = crate::sampler::subset_size(batch.len(), settings.sampling_rate);
                    select_standalone(*kind, &stats, k, &mut select_rng)?
                }
                Selector::Ada(ada) => {
                    let out = ada.select(&stats, &mut select_rng)?;
                    report.weight_trace.push(WeightRecord {
                        t: out.t,
                        weights: out.weights,
                        avg_subset_loss: out.method_avg_loss,
                        chosen: out.chosen.len(),
                    });
                    out.chosen
                }
                Selector::Full => unreachable!(),
            };
            selection_ms += timer.ms();

            let picked = batch.pick(&chosen);
            if settings.record_selections {
                report.selections.push(picked.iter().map(|s| s.id).collect());
            }
            if let Some(full) = buffer.push(picked)? {
                opt.step(model, &full, loss)?;
                backward_samples += full.len();
                sgd_updates += 1;
            }
        }

        let train_eval = evaluate(model, &dataset.train, loss)?;
        let test_eval = evaluate(model, &dataset.test, loss)?;
        if !(train_eval.loss.is_finite() && test_eval.loss.is_finite()) {
            return Err(Error::Divergence);
        }
        report.epochs.push(EpochRecord {
            epoch,
            train_loss: train_eval.loss,
            test_loss: test_eval.loss,
            test_accuracy: test_eval.accuracy,
            test_mse: test_eval.mse,
            backward_samples,
            sgd_updates,
            wall_ms: clock.ms(),
            selection_ms,
        });
    }
    Ok(report)
}
