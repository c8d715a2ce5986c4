//! Performance-driven active learning with a reinforcement-learning batch
//! selector.
//!
//! An LSTM agent scores every unlabeled sample, is trained with REINFORCE to
//! pick batches that maximize a task performance metric, and gets its
//! rewards from a lookup table of pre-computed batch performances matched by
//! Wasserstein distance. Random, entropy and core-set selection serve as
//! baselines on synthetic tasks.
//!
//! Module map:
//!
//! - [`numerics`]: parameter vectors, Adam, finite-difference oracle
//! - [`agent`]: LSTM policy, Plackett–Luce sampling, REINFORCE, training loop
//! - [`oracle`]: synthetic tasks, coverage / prototype evaluators and proxies
//! - [`lookup`]: quantile sketches, sliced W1, the lookup table and its file format
//! - [`driver`]: active-learning cycles and baseline strategies
//! - [`bench`]: CSV/JSON reporting and multi-strategy comparisons
//! - [`cli`]: command-line front end used by the `alcurve` binary

pub mod agent;
pub mod bench;
pub mod cli;
pub mod config;
pub mod driver;
pub mod error;
pub mod lookup;
pub mod numerics;
pub mod oracle;
pub mod stats;

pub use error::{Error, Result};
