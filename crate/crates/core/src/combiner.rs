//! The AdaSelection combiner.
//!
//! Each iteration the candidate strategies produce importance vectors `alpha^m`. Method weights
//! `w^m` move multiplicatively with the relative change of each method's average subset loss,
//!
//! ```text
//! w^m_t = w^m_{t-1} * exp(beta * |l^m_t - l^m_{t-1}| / l^m_{t-1})
//! ```
//!
//! and are renormalized to the simplex. The final score of sample `i` is
//! `s_i = r_i * sum_m w^m alpha^m_i` with the curriculum reward
//! `r_i = exp(-t^kappa * l_i / sum_j l_j^2)`, and the top `max(1, floor(b * rate))` scores are kept.

use serde::{Deserialize, Serialize};

use crate::sampler::{subset_size, top_k_indices};
use crate::scorers::{score, select_standalone};
use crate::{Error, ImportanceVector, PerSampleStats, Result, RngStream, ScorerKind};

/// Guard on the previous average loss in the weight update.
pub const LOSS_FLOOR: f64 = 1e-12;

/// Smallest weight a method can decay to, so every weight stays strictly positive.
const MIN_WEIGHT: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaSelectConfig {
    pub candidates: Vec<ScorerKind>,
    pub beta: f64,
    pub curriculum: bool,
    /// Exponent on `t` in the curriculum reward. Negative values decay the reward toward 1.
    pub kappa: f64,
    pub sampling_rate: f64,
    pub temperature: f64,
}

impl Default for AdaSelectConfig {
    fn default() -> Self {
        Self {
            candidates: vec![ScorerKind::BigLoss, ScorerKind::SmallLoss, ScorerKind::Uniform],
            beta: 0.5,
            curriculum: true,
            kappa: -0.5,
            sampling_rate: 0.2,
            temperature: 1.0,
        }
    }
}

impl AdaSelectConfig {
    pub fn with_candidates(candidates: Vec<ScorerKind>) -> Self {
        Self { candidates, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::NoCandidates);
        }
        for (i, c) in self.candidates.iter().enumerate() {
            if self.candidates[..i].contains(c) {
                return Err(Error::InvalidConfig(format!("candidate `{c}` listed twice")));
            }
        }
        if !(-1.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!("beta must lie in [-1, 1], got {}", self.beta)));
        }
        if !(self.sampling_rate > 0.0 && self.sampling_rate <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "sampling rate must lie in (0, 1], got {}",
                self.sampling_rate
            )));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidConfig(format!("temperature must be positive, got {}", self.temperature)));
        }
        if !self.kappa.is_finite() {
            return Err(Error::InvalidConfig("kappa must be finite".into()));
        }
        Ok(())
    }

    pub fn needs_grad_norms(&self) -> bool {
        self.candidates.iter().any(|c| c.needs_grad_norms())
    }
}

/// Method weights, the previous per-method average losses and the iteration counter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CombinerState {
    weights: Vec<f64>,
    prev_avg_loss: Option<Vec<f64>>,
    t: u64,
}

impl CombinerState {
    /// Uniform weights over `methods` candidates, `t = 1`.
    pub fn new(methods: usize) -> Result<Self> {
        if methods == 0 {
            return Err(Error::NoCandidates);
        }
        Ok(Self { weights: vec![1.0 / methods as f64; methods], prev_avg_loss: None, t: 1 })
    }

    pub fn init(config: &AdaSelectConfig) -> Result<Self> {
        config.validate()?;
        Self::new(config.candidates.len())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prev_avg_loss(&self) -> Option<&[f64]> {
        self.prev_avg_loss.as_deref()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Folds one iteration's per-method average losses into the weights and advances `t`.
    ///
    /// The first call only records the losses. The update runs in log space and is skipped when
    /// every exponent is exactly zero, so `beta = 0` leaves the weights bit-identical forever.
    pub fn update(&mut self, avg_loss_now: &[f64], beta: f64) -> Result<()> {
        if avg_loss_now.len() != self.weights.len() {
            return Err(Error::MethodCountChanged { expected: self.weights.len(), got: avg_loss_now.len() });
        }
        if avg_loss_now.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFiniteScore);
        }
        if let Some(prev) = &self.prev_avg_loss {
            let exponents: Vec<f64> = avg_loss_now
                .iter()
                .zip(prev)
                .map(|(now, prev)| beta * (now - prev).abs() / prev.max(LOSS_FLOOR))
                .collect();
            if exponents.iter().any(|&e| e != 0.0) {
                let logs: Vec<f64> = self.weights.iter().zip(&exponents).map(|(w, e)| w.ln() + e).collect();
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let raw: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
                let total: f64 = raw.iter().sum();
                self.weights = raw.iter().map(|w| (w / total).max(MIN_WEIGHT)).collect();
                let total: f64 = self.weights.iter().sum();
                self.weights.iter_mut().for_each(|w| *w /= total);
            }
        }
        self.prev_avg_loss = Some(avg_loss_now.to_vec());
        self.t += 1;
        Ok(())
    }
}

/// `r_i = exp(-t^kappa * l_i / sum_j l_j^2)`; all ones when every loss is zero.
pub fn curriculum_reward(losses: &[f64], t: u64, kappa: f64) -> Vec<f64> {
    let sum_sq: f64 = losses.iter().map(|l| l * l).sum();
    if sum_sq.is_nan() || sum_sq <= 0.0 {
        return vec![1.0; losses.len()];
    }
    let scale = (t as f64).powf(kappa);
    losses.iter().map(|l| (-scale * l / sum_sq).exp()).collect()
}

/// `s_i = r_i * sum_m w^m alpha^m_i`.
pub fn combined_scores(alphas: &[ImportanceVector], weights: &[f64], reward: &[f64]) -> Result<Vec<f64>> {
    if alphas.len() != weights.len() {
        return Err(Error::MethodCountChanged { expected: weights.len(), got: alphas.len() });
    }
    let b = reward.len();
    if let Some(bad) = alphas.iter().find(|a| a.len() != b) {
        return Err(Error::DimensionMismatch { expected: b, got: bad.len() });
    }
    Ok((0..b)
        .map(|i| {
            let mixed: f64 = alphas.iter().zip(weights).map(|(a, w)| w * a.as_slice()[i]).sum();
            reward[i] * mixed
        })
        .collect())
}

/// Everything one combiner iteration computed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionResult {
    /// Iteration index the batch was scored at.
    pub t: u64,
    pub chosen: Vec<usize>,
    pub scores: Vec<f64>,
    pub indicators: Vec<bool>,
    pub per_method_alpha: Vec<ImportanceVector>,
    pub reward: Vec<f64>,
    /// Mean loss over each candidate's own standalone subset.
    pub method_avg_loss: Vec<f64>,
    /// Method weights the scores were computed with.
    pub weights: Vec<f64>,
}

/// One AdaSelection step on a batch.
///
/// The weights used for scoring already include this batch's loss variation. `rng` is consumed
/// only by a uniform candidate's standalone subset.
pub fn select(
    state: &mut CombinerState,
    stats: &PerSampleStats,
    config: &AdaSelectConfig,
    rng: &mut RngStream,
) -> Result<SelectionResult> {
    let b = stats.len();
    let k = subset_size(b, config.sampling_rate);
    let losses = stats.losses();

    let per_method_alpha = config
        .candidates
        .iter()
        .map(|&kind| score(kind, stats, config.temperature))
        .collect::<Result<Vec<_>>>()?;
    let method_avg_loss = config
        .candidates
        .iter()
        .map(|&kind| {
            let subset = select_standalone(kind, stats, k, rng)?;
            Ok(subset.iter().map(|&i| losses[i]).sum::<f64>() / subset.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;

    let t = state.t;
    state.update(&method_avg_loss, config.beta)?;
    let reward = if config.curriculum { curriculum_reward(losses, t, config.kappa) } else { vec![1.0; b] };
    let scores = combined_scores(&per_method_alpha, &state.weights, &reward)?;
    let chosen = top_k_indices(&scores, k)?;
    let mut indicators = vec![false; b];
    for &i in &chosen {
        indicators[i] = true;
    }
    Ok(SelectionResult {
        t,
        chosen,
        scores,
        indicators,
        per_method_alpha,
        reward,
        method_avg_loss,
        weights: state.weights.clone(),
    })
}

/// A validated config together with its evolving state.
#[derive(Clone, Debug)]
pub struct AdaSelector {
    config: AdaSelectConfig,
    state: CombinerState,
}

impl AdaSelector {
    pub fn new(config: AdaSelectConfig) -> Result<Self> {
        let state = CombinerState::init(&config)?;
        Ok(Self { config, state })
    }

    pub fn config(&self) -> &AdaSelectConfig {
        &self.config
    }

    pub fn state(&self) -> &CombinerState {
        &self.state
    }

    pub fn select(&mut self, stats: &PerSampleStats, rng: &mut RngStream) -> Result<SelectionResult> {
        select(&mut self.state, stats, &self.config, rng)
    }
}

/// Selected samples held across batches until a full batch has gathered.
#[derive(Clone, Debug)]
pub struct AccumulationBuffer<T> {
    held: Vec<T>,
    capacity: usize,
}

impl<T> AccumulationBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("buffer capacity must be at least 1".into()));
        }
        Ok(Self { held: Vec::with_capacity(capacity), capacity })
    }

    /// Appends `selected`; returns the held batch once exactly `capacity` items have gathered.
    ///
    /// Items that do not fit stay behind as the start of the next batch, so at most one flush
    /// happens per push. Pushing more than `capacity` items at once is an error.
    pub fn push(&mut self, selected: Vec<T>) -> Result<Option<Vec<T>>> {
        if selected.len() > self.capacity {
            return Err(Error::SubsetExceedsBatch { k: selected.len(), batch: self.capacity });
        }
        let room = self.capacity - self.held.len();
        let mut items = selected.into_iter();
        self.held.extend(items.by_ref().take(room));
        if self.held.len() < self.capacity {
            return Ok(None);
        }
        let full = std::mem::replace(&mut self.held, Vec::with_capacity(self.capacity));
        self.held.extend(items);
        Ok(Some(full))
    }

    pub fn len(&self) -> usize {
        self.held.len()
    }

    pub fn is_empty(&self) -> bool {
        self.held.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}
