//! Baseline subsampling strategies.
//!
//! Every strategy has two faces: [`select_standalone`] picks a subset directly (the baseline
//! loop), and [`score`] turns the batch statistics into an [`ImportanceVector`] for the combiner.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::sampler::{normalize_losses_unit, ranked_indices, softmax, top_k_indices};
use crate::{Error, ImportanceVector, PerSampleStats, Result, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    Uniform,
    BigLoss,
    SmallLoss,
    GradNorm,
    AdaBoost,
    CoresetMix,
    CoresetMean,
}

impl ScorerKind {
    pub const ALL: [ScorerKind; 7] = [
        ScorerKind::Uniform,
        ScorerKind::BigLoss,
        ScorerKind::SmallLoss,
        ScorerKind::GradNorm,
        ScorerKind::AdaBoost,
        ScorerKind::CoresetMix,
        ScorerKind::CoresetMean,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ScorerKind::Uniform => "uniform",
            ScorerKind::BigLoss => "big_loss",
            ScorerKind::SmallLoss => "small_loss",
            ScorerKind::GradNorm => "grad_norm",
            ScorerKind::AdaBoost => "adaboost",
            ScorerKind::CoresetMix => "coreset_mix",
            ScorerKind::CoresetMean => "coreset_mean",
        }
    }

    pub fn needs_grad_norms(self) -> bool {
        self == ScorerKind::GradNorm
    }

    /// Parses a comma-separated token list such as `big_loss,small_loss`.
    pub fn parse_list(list: &str) -> Result<Vec<ScorerKind>> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScorerKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scorer `{s}`")))
    }
}

/// AdaBoost weight on losses squashed into `[0.01, 0.99]`: `0.5 * ln((1 + l) / (1 - l))`.
pub fn adaboost_weights(losses: &[f64]) -> Vec<f64> {
    normalize_losses_unit(losses)
        .into_iter()
        .map(|l| 0.5 * ((1.0 + l) / (1.0 - l)).ln())
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn negated(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| -v).collect()
}

fn closeness_to_mean(losses: &[f64]) -> Vec<f64> {
    let m = mean(losses);
    losses.iter().map(|l| -(l - m).abs()).collect()
}

fn grad_norms(stats: &PerSampleStats) -> Result<&[f64]> {
    stats.grad_norms().ok_or(Error::GradNormsUnavailable)
}

/// The statistic a ranking strategy takes its top-k over. `None` for the two strategies that
/// are not a single ranking (uniform and the max/min mixture).
fn ranking_statistic(kind: ScorerKind, stats: &PerSampleStats) -> Result<Option<Vec<f64>>> {
    let losses = stats.losses();
    Ok(match kind {
        ScorerKind::Uniform | ScorerKind::CoresetMix => None,
        ScorerKind::BigLoss => Some(losses.to_vec()),
        ScorerKind::SmallLoss => Some(negated(losses)),
        ScorerKind::GradNorm => Some(grad_norms(stats)?.to_vec()),
        ScorerKind::AdaBoost => Some(adaboost_weights(losses)),
        ScorerKind::CoresetMean => Some(closeness_to_mean(losses)),
    })
}

/// Importance vector of one strategy over the batch.
pub fn score(kind: ScorerKind, stats: &PerSampleStats, temperature: f64) -> Result<ImportanceVector> {
    let losses = stats.losses();
    match kind {
        ScorerKind::Uniform => Ok(ImportanceVector::uniform(losses.len())),
        ScorerKind::BigLoss => softmax(losses, temperature),
        ScorerKind::SmallLoss => softmax(&negated(losses), temperature),
        ScorerKind::GradNorm => ImportanceVector::from_nonnegative(grad_norms(stats)?),
        ScorerKind::AdaBoost => ImportanceVector::from_nonnegative(&adaboost_weights(losses)),
        ScorerKind::CoresetMix => {
            let big = softmax(losses, temperature)?;
            let small = softmax(&negated(losses), temperature)?;
            Ok(big.mix(&small, 0.5))
        }
        ScorerKind::CoresetMean => softmax(&closeness_to_mean(losses), temperature),
    }
}

/// Subset of `k` batch positions chosen by the strategy alone, ascending by index.
pub fn select_standalone(
    kind: ScorerKind,
    stats: &PerSampleStats,
    k: usize,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    let b = stats.len();
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if k > b {
        return Err(Error::SubsetExceedsBatch { k, batch: b });
    }
    match kind {
        ScorerKind::Uniform => {
            let mut picked = index::sample(rng, b, k).into_vec();
            picked.sort_unstable();
            Ok(picked)
        }
        ScorerKind::CoresetMix => Ok(coreset_mix(stats.losses(), k)),
        _ => {
            let stat = ranking_statistic(kind, stats)?.expect("ranking strategy");
            top_k_indices(&stat, k)
        }
    }
}

/// `ceil(k/2)` largest losses plus `floor(k/2)` smallest. The max side claims first; a
/// collision on the min side is filled with the next-smallest untaken loss.
fn coreset_mix(losses: &[f64], k: usize) -> Vec<usize> {
    let big_quota = k.div_ceil(2);
    let mut taken = vec![false; losses.len()];
    let mut picked = Vec::with_capacity(k);
    for i in ranked_indices(losses).into_iter().take(big_quota) {
        taken[i] = true;
        picked.push(i);
    }
    for i in ranked_indices(&negated(losses)) {
        if picked.len() == k {
            break;
        }
        if !taken[i] {
            taken[i] = true;
            picked.push(i);
        }
    }
    picked.sort_unstable();
    picked
}
