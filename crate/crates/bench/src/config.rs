//! Experiment configuration. Mirrors every CLI flag; the JSON file form is the same struct.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use adaselection::data::{gen_classification_blobs, gen_regression_simple, load_csv_dataset};
use adaselection::train::{streams, GradNormMode, LossKind, Model, Strategy};
use adaselection::{AdaSelectConfig, Dataset, RngStream, ScorerKind, Task};
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// A strategy token as used on the command line and in result CSVs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategySpec {
    Full,
    Standalone(ScorerKind),
    AdaSelect,
}

impl StrategySpec {
    /// Benchmark, the seven baselines, then AdaSelection.
    pub fn all() -> Vec<StrategySpec> {
        let mut all = vec![StrategySpec::Full];
        all.extend(ScorerKind::ALL.into_iter().map(StrategySpec::Standalone));
        all.push(StrategySpec::AdaSelect);
        all
    }

    pub fn token(self) -> &'static str {
        match self {
            StrategySpec::Full => "full",
            StrategySpec::Standalone(kind) => kind.token(),
            StrategySpec::AdaSelect => "adaselect",
        }
    }

    /// Position in the canonical column order of ranking tables.
    pub fn order(self) -> usize {
        match self {
            StrategySpec::Full => 0,
            StrategySpec::AdaSelect => 1,
            StrategySpec::Standalone(kind) => 2 + ScorerKind::ALL.iter().position(|k| *k == kind).unwrap_or(0),
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for StrategySpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "full" | "benchmark" => Ok(StrategySpec::Full),
            "adaselect" => Ok(StrategySpec::AdaSelect),
            other => other
                .parse()
                .map(StrategySpec::Standalone)
                .map_err(|_| BenchError::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    Linear,
    /// One hidden layer of 16 ReLU units.
    Mlp,
    /// Two hidden layers of 32 ReLU units.
    Mlp2,
}

impl FromStr for ModelSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "linear" => Ok(ModelSpec::Linear),
            "mlp" => Ok(ModelSpec::Mlp),
            "mlp2" => Ok(ModelSpec::Mlp2),
            other => Err(BenchError::Config(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlobsSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub separation: f64,
}

impl Default for BlobsSpec {
    fn default() -> Self {
        Self { classes: 4, per_class: 625, dim: 8, separation: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `regression`, `blobs` or `csv:<path>`.
    pub dataset: String,
    pub target_col: String,
    /// Task of a CSV dataset; generators know their own.
    pub task: Task,
    pub noise_sigma: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub blobs: BlobsSpec,
    pub model: ModelSpec,
    /// Explicit layer sizes, input first. Overrides `model` and must match the dataset.
    pub layers: Option<Vec<usize>>,
    pub lr: f64,
    pub momentum: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub strategies: Vec<String>,
    pub candidates: Vec<ScorerKind>,
    pub rates: Vec<f64>,
    pub betas: Vec<f64>,
    pub kappa: f64,
    pub curriculum: bool,
    pub temperature: f64,
    pub grad_norm_mode: GradNormMode,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ada = AdaSelectConfig::default();
        Self {
            dataset: "regression".into(),
            target_col: "target".into(),
            task: Task::Regression,
            noise_sigma: 0.1,
            n_train: 10_000,
            n_test: 5_000,
            blobs: BlobsSpec::default(),
            model: ModelSpec::Mlp,
            layers: None,
            lr: 0.01,
            momentum: 0.9,
            batch: 100,
            epochs: 20,
            seed: 0,
            strategies: StrategySpec::all().iter().map(|s| s.token().to_owned()).collect(),
            candidates: ada.candidates,
            rates: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            betas: vec![ada.beta],
            kappa: ada.kappa,
            curriculum: ada.curriculum,
            temperature: ada.temperature,
            grad_norm_mode: GradNormMode::Exact,
            out: PathBuf::from("results.csv"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.as_ref().display())))?;
        serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("bad config file: {e}")))
    }

    pub fn strategy_specs(&self) -> Result<Vec<StrategySpec>, BenchError> {
        let specs: Vec<StrategySpec> = self.strategies.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
        if specs.is_empty() {
            return Err(BenchError::Config("no strategies given".into()));
        }
        Ok(specs)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        self.strategy_specs()?;
        if self.rates.is_empty() {
            return Err(BenchError::Config("no sampling rates given".into()));
        }
        if let Some(r) = self.rates.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return Err(BenchError::Config(format!("sampling rate {r} outside (0, 1]")));
        }
        if self.betas.is_empty() {
            return Err(BenchError::Config("no betas given".into()));
        }
        if let Some(b) = self.betas.iter().find(|b| !(-1.0..=1.0).contains(*b)) {
            return Err(BenchError::Config(format!("beta {b} outside [-1, 1]")));
        }
        if self.batch == 0 || self.epochs == 0 {
            return Err(BenchError::Config("batch and epochs must be at least 1".into()));
        }
        if self.lr.is_nan() || self.lr <= 0.0 || !(0.0..1.0).contains(&self.momentum) {
            return Err(BenchError::Config("need lr > 0 and momentum in [0, 1)".into()));
        }
        self.ada_config(self.betas[0], self.rates[0]).validate()?;
        Ok(())
    }

    pub fn ada_config(&self, beta: f64, rate: f64) -> AdaSelectConfig {
        AdaSelectConfig {
            candidates: self.candidates.clone(),
            beta,
            curriculum: self.curriculum,
            kappa: self.kappa,
            sampling_rate: rate,
            temperature: self.temperature,
        }
    }

    pub fn strategy(&self, spec: StrategySpec, beta: f64, rate: f64) -> Strategy {
        match spec {
            StrategySpec::Full => Strategy::Full,
            StrategySpec::Standalone(kind) => Strategy::Standalone(kind),
            StrategySpec::AdaSelect => Strategy::AdaSelect(self.ada_config(beta, rate)),
        }
    }

    pub fn build_dataset(&self) -> Result<Dataset, BenchError> {
        let ds = match self.dataset.as_str() {
            "regression" => gen_regression_simple(self.n_train, self.n_test, self.noise_sigma, self.seed)?,
            "blobs" => {
                let b = &self.blobs;
                gen_classification_blobs(b.classes, b.per_class, b.dim, b.separation, self.seed)?
            }
            other => match other.strip_prefix("csv:") {
                Some(path) => load_csv_dataset(path, &self.target_col, self.task, self.seed)?,
                None => return Err(BenchError::Config(format!("unknown dataset `{other}`"))),
            },
        };
        Ok(ds)
    }

    pub fn loss_for(dataset: &Dataset) -> LossKind {
        match dataset.task {
            Task::Regression => LossKind::MeanSquaredError,
            Task::Classification => LossKind::CrossEntropy,
        }
    }

    /// A freshly initialised model for `dataset`, seeded from the run seed.
    pub fn build_model(&self, dataset: &Dataset) -> Result<Model, BenchError> {
        let (inputs, outputs) = (dataset.input_dim, dataset.output_dim());
        let model = match &self.layers {
            Some(layers) => {
                if layers.first() != Some(&inputs) || layers.last() != Some(&outputs) {
                    return Err(BenchError::Config(format!(
                        "layers {layers:?} do not fit dataset with {inputs} inputs and {outputs} outputs"
                    )));
                }
                if layers.len() == 2 {
                    Model::linear(inputs, outputs)?
                } else {
                    Model::mlp(layers.clone(), adaselection::train::Activation::Relu)?
                }
            }
            None => match self.model {
                ModelSpec::Linear => Model::linear(inputs, outputs)?,
                ModelSpec::Mlp => Model::simple_mlp(inputs, outputs)?,
                ModelSpec::Mlp2 => Model::two_layer_mlp(inputs, outputs)?,
            },
        };
        Ok(model.initialized(&mut RngStream::new(self.seed, streams::INIT)))
    }
}
