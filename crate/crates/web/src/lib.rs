//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Every export takes and returns JSON strings. The `*_json` functions hold the logic and run
//! natively; the exported wrappers only turn errors into JS exceptions.

use adaselection::combiner::curriculum_reward;
use adaselection::data::gen_regression_simple;
use adaselection::train::{streams, train, Model, SgdMomentum, Strategy, TrainSettings};
use adaselection::train::LossKind;
use adaselection::{AdaSelectConfig, AdaSelector, PerSampleStats, RngStream, ScorerKind};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: `{s}`")))
        .collect()
}

fn field<'a>(v: &'a Value, name: &str) -> Option<&'a Value> {
    v.get(name).filter(|x| !x.is_null())
}

fn f64_or(v: &Value, name: &str, default: f64) -> Result<f64, String> {
    match field(v, name) {
        None => Ok(default),
        Some(x) => x.as_f64().ok_or_else(|| format!("`{name}` must be a number")),
    }
}

fn u64_or(v: &Value, name: &str, default: u64) -> Result<u64, String> {
    match field(v, name) {
        None => Ok(default),
        Some(x) => x.as_u64().ok_or_else(|| format!("`{name}` must be a nonnegative integer")),
    }
}

fn ada_config(v: &Value) -> Result<AdaSelectConfig, String> {
    let base = AdaSelectConfig::default();
    let candidates = match field(v, "candidates") {
        None => base.candidates.clone(),
        Some(Value::String(s)) => ScorerKind::parse_list(s).map_err(|e| e.to_string())?,
        Some(_) => return Err("`candidates` must be a comma-separated string".into()),
    };
    let cfg = AdaSelectConfig {
        candidates,
        beta: f64_or(v, "beta", base.beta)?,
        curriculum: field(v, "curriculum").and_then(Value::as_bool).unwrap_or(base.curriculum),
        kappa: f64_or(v, "kappa", base.kappa)?,
        sampling_rate: f64_or(v, "rate", base.sampling_rate)?,
        temperature: f64_or(v, "temperature", base.temperature)?,
    };
    cfg.validate().map_err(|e| e.to_string())?;
    if cfg.needs_grad_norms() {
        return Err("grad_norm needs per-sample gradients, which the batch demo does not have".into());
    }
    Ok(cfg)
}

/// An AdaSelection combiner fed one hand-typed batch of losses at a time.
pub struct BatchSelector {
    inner: AdaSelector,
    rng: RngStream,
}

impl BatchSelector {
    pub fn from_json(config: &str) -> Result<Self, String> {
        let v: Value = serde_json::from_str(config).map_err(|e| e.to_string())?;
        let cfg = ada_config(&v)?;
        let seed = u64_or(&v, "seed", 0)?;
        Ok(Self {
            inner: AdaSelector::new(cfg).map_err(|e| e.to_string())?,
            rng: RngStream::new(seed, streams::SELECT),
        })
    }

    pub fn step_json(&mut self, losses: &str) -> Result<String, String> {
        let stats = PerSampleStats::from_losses(parse_numbers(losses)?).map_err(|e| e.to_string())?;
        let out = self.inner.select(&stats, &mut self.rng).map_err(|e| e.to_string())?;
        let methods: Vec<&str> = self.inner.config().candidates.iter().map(|k| k.token()).collect();
        let mut v = serde_json::to_value(&out).map_err(|e| e.to_string())?;
        v["methods"] = json!(methods);
        Ok(v.to_string())
    }
}

/// Reward `r_i(t)` of each loss over `t = 1..=t_max`, sampled at `points` roughly log-spaced steps.
pub fn curriculum_curve_json(losses: &str, kappa: f64, t_max: u64, points: usize) -> Result<String, String> {
    let losses = parse_numbers(losses)?;
    if losses.is_empty() || losses.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err("need at least one finite nonnegative loss".into());
    }
    if t_max == 0 || points < 2 {
        return Err("need t_max >= 1 and at least two points".into());
    }
    let mut ts: Vec<u64> = (0..points)
        .map(|i| (t_max as f64).powf(i as f64 / (points - 1) as f64).round() as u64)
        .collect();
    ts.dedup();
    let rewards: Vec<Vec<f64>> = ts.iter().map(|&t| curriculum_reward(&losses, t, kappa)).collect();
    Ok(json!({ "t": ts, "reward": rewards }).to_string())
}

/// Trains the small regression MLP with one strategy and returns loss curves and the weight trace.
pub fn train_regression_json(config: &str) -> Result<String, String> {
    let v: Value = serde_json::from_str(config).map_err(|e| e.to_string())?;
    let seed = u64_or(&v, "seed", 0)?;
    let n_train = u64_or(&v, "n_train", 2000)? as usize;
    let epochs = u64_or(&v, "epochs", 10)? as usize;
    if n_train > 20_000 || epochs > 50 {
        return Err("demo limits: n_train <= 20000, epochs <= 50".into());
    }
    let rate = f64_or(&v, "rate", 0.2)?;
    let strategy = match field(&v, "strategy").and_then(Value::as_str).unwrap_or("adaselect") {
        "full" => Strategy::Full,
        "adaselect" => Strategy::AdaSelect(ada_config(&v)?),
        other => Strategy::Standalone(other.parse().map_err(|e: adaselection::Error| e.to_string())?),
    };
    let dataset = gen_regression_simple(n_train, n_train / 2, f64_or(&v, "noise_sigma", 0.1)?, seed)
        .map_err(|e| e.to_string())?;
    let mut model = Model::simple_mlp(dataset.input_dim, 1)
        .map_err(|e| e.to_string())?
        .initialized(&mut RngStream::new(seed, streams::INIT));
    let mut opt = SgdMomentum::new(f64_or(&v, "lr", 0.01)?, f64_or(&v, "momentum", 0.9)?, &model)
        .map_err(|e| e.to_string())?;
    let settings = TrainSettings {
        epochs,
        batch_size: u64_or(&v, "batch", 100)? as usize,
        sampling_rate: rate,
        seed,
        ..TrainSettings::default()
    };
    let report = train(&strategy, &dataset, &mut model, LossKind::MeanSquaredError, &mut opt, &settings)
        .map_err(|e| e.to_string())?;
    let stride = report.weight_trace.len().div_ceil(400).max(1);
    let trace: Vec<_> = report.weight_trace.iter().step_by(stride).collect();
    Ok(json!({
        "strategy": strategy.label(),
        "epochs": report.epochs,
        "methods": report.candidates.iter().map(|k| k.token()).collect::<Vec<_>>(),
        "weight_trace": trace,
        "backward_samples": report.total_backward_samples(),
    })
    .to_string())
}

#[wasm_bindgen]
pub struct Selector(BatchSelector);

#[wasm_bindgen]
impl Selector {
    #[wasm_bindgen(constructor)]
    pub fn new(config: &str) -> Result<Selector, JsValue> {
        BatchSelector::from_json(config).map(Selector).map_err(|e| JsValue::from_str(&e))
    }

    pub fn step(&mut self, losses: &str) -> Result<String, JsValue> {
        self.0.step_json(losses).map_err(|e| JsValue::from_str(&e))
    }
}

#[wasm_bindgen]
pub fn curriculum_curve(losses: &str, kappa: f64, t_max: u64, points: usize) -> Result<String, JsValue> {
    curriculum_curve_json(losses, kappa, t_max, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn train_regression(config: &str) -> Result<String, JsValue> {
    train_regression_json(config).map_err(|e| JsValue::from_str(&e))
}
