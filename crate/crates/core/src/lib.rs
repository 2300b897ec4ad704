//! Priority vectors from incomplete pairwise-comparison matrices.
//!
//! The main method runs in two stages. [`ordinal`] finds the strict partial
//! order that best agrees with the judgments, weighting each agreement by the
//! logarithm of its ratio. [`cardinal`] then solves logarithmic least squares
//! subject to that order. [`baselines`] provides the reference methods,
//! [`metrics`] the evaluation criteria, and [`experiments`] a seeded
//! Monte-Carlo harness.

pub mod baselines;
pub mod cardinal;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod graph;
pub mod metrics;
pub mod ordinal;
pub mod pcm;
pub mod pipeline;

pub use error::{Error, Result};
pub use graph::{ComparisonGraph, DominanceGraph};
pub use ordinal::OrdinalPreferenceMatrix;
pub use pcm::{IncompletePcm, Normalization, PriorityVector};
pub use pipeline::{rank_ills_mwov, run_method, Method, RankOptions};
