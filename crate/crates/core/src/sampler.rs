//! Shared data types and the selection primitives every strategy builds on.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lower end of the range losses are squashed into before the AdaBoost transform.
pub const UNIT_LO: f64 = 0.01;
/// Upper end of the range losses are squashed into before the AdaBoost transform.
pub const UNIT_HI: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Value(f64),
    Class(usize),
}

/// One training example with a stable id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: usize,
    pub features: Vec<f64>,
    pub target: Target,
}

impl Sample {
    pub fn new(id: usize, features: Vec<f64>, target: Target) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidSample(format!("sample {id} has no features")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!("sample {id} has a non-finite feature")));
        }
        if let Target::Value(y) = target {
            if !y.is_finite() {
                return Err(Error::InvalidSample(format!("sample {id} has a non-finite target")));
            }
        }
        Ok(Self { id, features, target })
    }

    pub fn regression(id: usize, features: Vec<f64>, y: f64) -> Result<Self> {
        Self::new(id, features, Target::Value(y))
    }

    pub fn classification(id: usize, features: Vec<f64>, class: usize) -> Result<Self> {
        Self::new(id, features, Target::Class(class))
    }
}

/// A view over the samples of one iteration.
#[derive(Clone, Debug)]
pub struct MiniBatch<'a> {
    samples: Vec<&'a Sample>,
    iteration: u64,
}

impl<'a> MiniBatch<'a> {
    pub fn new(samples: Vec<&'a Sample>, iteration: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !seen.insert(s.id) {
                return Err(Error::InvalidSample(format!("duplicate sample id {} in batch", s.id)));
            }
        }
        Ok(Self { samples, iteration })
    }

    pub fn samples(&self) -> &[&'a Sample] {
        &self.samples
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples at the given batch positions, in the given order.
    pub fn pick(&self, indices: &[usize]) -> Vec<&'a Sample> {
        indices.iter().map(|&i| self.samples[i]).collect()
    }
}

/// Per-sample measurements from one probe pass.
#[derive(Clone, Debug, PartialEq)]
pub struct PerSampleStats {
    losses: Vec<f64>,
    grad_norms: Option<Vec<f64>>,
}

impl PerSampleStats {
    pub fn new(losses: Vec<f64>, grad_norms: Option<Vec<f64>>) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::EmptyBatch);
        }
        check_nonnegative(&losses)?;
        if let Some(g) = &grad_norms {
            if g.len() != losses.len() {
                return Err(Error::DimensionMismatch { expected: losses.len(), got: g.len() });
            }
            check_nonnegative(g)?;
        }
        Ok(Self { losses, grad_norms })
    }

    pub fn from_losses(losses: Vec<f64>) -> Result<Self> {
        Self::new(losses, None)
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn grad_norms(&self) -> Option<&[f64]> {
        self.grad_norms.as_deref()
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteScore);
    }
    if values.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidSample("negative per-sample statistic".into()));
    }
    Ok(())
}

/// Nonnegative per-sample weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImportanceVector(Vec<f64>);

impl ImportanceVector {
    /// Normalizes nonnegative values to sum one; an all-zero input becomes uniform.
    pub fn from_nonnegative(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyBatch);
        }
        check_nonnegative(values)?;
        let total: f64 = values.iter().sum();
        if total <= 0.0 {
            return Ok(Self::uniform(values.len()));
        }
        Ok(Self(values.iter().map(|v| v / total).collect()))
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    /// Convex combination `a * self + (1 - a) * other`.
    pub fn mix(&self, other: &Self, a: f64) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(x, y)| a * x + (1.0 - a) * y).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Seeded ChaCha8 stream. Equal `(seed, stream_id)` pairs give equal sequences on every platform.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    /// An independent stream from the same seed.
    pub fn derive(&self, stream_id: u64) -> Self {
        Self::new(self.seed, stream_id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Larger value first, smaller index first among equal values.
fn rank_order(values: &[f64], a: usize, b: usize) -> Ordering {
    values[b].total_cmp(&values[a]).then(a.cmp(&b))
}

/// Indices of the `k` largest values, ascending by index.
///
/// Ties at the cutoff go to the smaller index. `k` larger than the input keeps everything.
pub fn top_k_indices(values: &[f64], k: usize) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let k = k.min(values.len());
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, |&a, &b| rank_order(values, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable();
    Ok(idx)
}

/// All indices from most to least preferred under [`top_k_indices`]' ordering.
pub fn ranked_indices(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| rank_order(values, a, b));
    idx
}

/// Temperature softmax with max-subtraction.
pub fn softmax(values: &[f64], temperature: f64) -> Result<ImportanceVector> {
    if values.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidConfig(format!("softmax temperature must be positive, got {temperature}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteScore);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| ((v - max) / temperature).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(ImportanceVector(exps.into_iter().map(|e| e / total).collect()))
}

/// Affine map of the batch onto `[UNIT_LO, UNIT_HI]` by its min and max; a constant batch maps to 0.5.
pub fn normalize_losses_unit(losses: &[f64]) -> Vec<f64> {
    let lo = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span.is_nan() || span <= 0.0 {
        return vec![0.5; losses.len()];
    }
    losses
        .iter()
        .map(|l| {
            let u = (l - lo) / span;
            UNIT_LO * (1.0 - u) + UNIT_HI * u
        })
        .collect()
}

/// Number of samples kept from a batch of `batch` at `rate`: `max(1, floor(batch * rate))`.
///
/// The product is nudged by 1e-9 first so rates like 0.29 * 100 do not floor to 28.
pub fn subset_size(batch: usize, rate: f64) -> usize {
    let k = (batch as f64 * rate + 1e-9).floor() as usize;
    k.clamp(1, batch.max(1))
}
