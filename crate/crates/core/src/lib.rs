//! Next-graph prediction for graph time series.
//!
//! Graphs are never embedded explicitly. Every predictor returns an
//! [`AffinePrediction`](latent::AffinePrediction): coefficients over the
//! training graphs plus the current test graph. Distances and kernel values
//! for such a point are recovered from the pairwise dissimilarity or kernel
//! matrix alone, which is what the evaluation code uses to score predictions.
//!
//! Module map:
//!
//! * [`graph`] - snapshots, trajectories, datasets and their JSON files.
//! * [`generators`] - seeded Barabási-Albert and Game of Life trajectories.
//! * [`repr`] - shortest-path histograms, alignment distance and the
//!   dissimilarity → similarity → kernel chain.
//! * [`latent`] - distance/kernel extension for affine combinations.
//! * [`regress`] - identity, 1-NN, kernel regression, GP, rBCM and relational
//!   neural gas.
//! * [`eval`] - leave-one-out CV, random search, Wilcoxon test and reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod generators;
pub mod graph;
pub mod latent;
pub mod regress;
pub mod repr;

pub use error::{Error, Result};
