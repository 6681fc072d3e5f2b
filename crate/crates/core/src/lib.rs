//! Adaptive minibatch subsampling.
//!
//! The crate is organised bottom-up:
//!
//! - [`sampler`]: samples, batches, seeded random streams and the top-k / softmax primitives.
//! - [`scorers`]: the seven baseline subsampling strategies, each usable on its own or as an
//!   importance-vector producer.
//! - [`combiner`]: AdaSelection, which mixes the candidate importance vectors with
//!   multiplicatively adapted method weights and a curriculum reward.
//! - [`train`]: a small deterministic trainer (linear model / MLP, SGD with momentum) running
//!   the selective-backprop loop with an accumulation buffer.
//! - [`data`]: synthetic generators and the CSV loader.

pub mod combiner;
pub mod data;
mod error;
pub mod sampler;
pub mod scorers;
pub mod train;

pub use combiner::{AccumulationBuffer, AdaSelectConfig, AdaSelector, CombinerState, SelectionResult};
pub use data::{Dataset, Task};
pub use error::{Error, Result};
pub use sampler::{ImportanceVector, MiniBatch, PerSampleStats, RngStream, Sample, Target};
pub use scorers::ScorerKind;
