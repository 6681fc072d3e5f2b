//! Experiment harness: configs, sampling-rate / beta sweeps, result CSVs and ranking tables.

pub mod config;
mod error;
pub mod plot;
pub mod rank;
pub mod results;
pub mod sweep;

pub use config::{ExperimentConfig, StrategySpec};
pub use error::BenchError;
pub use rank::{rank_table, RankTable};
pub use results::{ResultRow, WeightLogRow};
pub use sweep::{run_single, run_sweep, SweepOutcome};
