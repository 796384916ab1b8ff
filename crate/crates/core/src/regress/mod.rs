//! Predictors. Every predictor maps a test input to an [`AffinePrediction`]
//! over the training points (plus the test input itself).

pub(crate) mod gp;
mod rbcm;
mod rng;

pub use gp::{fit_gp, predict_gp, predict_gp_batch, GpModel, PredictiveDistribution};
pub use rbcm::{combine_rbcm, predict_rbcm, RBCM_MIN_VARIANCE};
pub use rng::{relational_neural_gas, RngClustering, RngConfig};

use crate::error::{Error, Result};
use crate::latent::AffinePrediction;

/// Threshold below which the kernel regression denominator counts as zero.
pub const KR_DEGENERATE: f64 = 1e-12;

/// (predecessor, successor) pairs into the training point ordering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingIndex {
    n_points: usize,
    pairs: Vec<(usize, usize)>,
}

impl TrainingIndex {
    pub fn new(n_points: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(p, s)) = pairs.iter().find(|&&(p, s)| p >= n_points || s >= n_points) {
            return Err(Error::arg(format!(
                "pair ({p}, {s}) out of range for {n_points} points"
            )));
        }
        Ok(TrainingIndex { n_points, pairs })
    }

    /// Consecutive pairs within each trajectory, points laid out trajectory
    /// after trajectory.
    pub fn from_lengths(lengths: &[usize]) -> Self {
        let mut pairs = Vec::new();
        let mut offset = 0;
        for &len in lengths {
            for t in 1..len {
                pairs.push((offset + t - 1, offset + t));
            }
            offset += len;
        }
        TrainingIndex {
            n_points: offset,
            pairs,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn predecessors(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    /// The pairs whose position is listed in `keep`.
    pub fn subset(&self, keep: &[usize]) -> TrainingIndex {
        TrainingIndex {
            n_points: self.n_points,
            pairs: keep.iter().map(|&k| self.pairs[k]).collect(),
        }
    }

    /// Coefficients `+w` on each successor and `-w` on each predecessor.
    pub(crate) fn difference_coefficients(&self, weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.n_points];
        for (&(p, s), w) in self.pairs.iter().zip(weights) {
            coeffs[s] += w;
            coeffs[p] -= w;
        }
        coeffs
    }
}

/// Predicts the current point.
pub fn predict_identity(n_train: usize) -> AffinePrediction {
    AffinePrediction::identity(n_train)
}

/// Successor of the nearest predecessor; ties go to the lowest pair index.
/// `distances[p]` is the distance from the test input to the predecessor of
/// pair `p`.
pub fn predict_1nn(distances: &[f64], index: &TrainingIndex) -> Result<AffinePrediction> {
    if index.is_empty() {
        return Err(Error::arg("1-NN needs at least one training pair"));
    }
    check_row(distances, index)?;
    let mut best = 0;
    for (p, &d) in distances.iter().enumerate() {
        if d < distances[best] {
            best = p;
        }
    }
    Ok(AffinePrediction::indicator(index.n_points(), index.pairs()[best].1))
}

/// Nadaraya-Watson: successor weights proportional to predecessor kernel
/// values. Falls back to the identity when every kernel value vanishes.
pub fn predict_kr(kernel_row: &[f64], index: &TrainingIndex) -> Result<AffinePrediction> {
    check_row(kernel_row, index)?;
    if let Some(k) = kernel_row.iter().find(|&&k| !(k >= 0.0)) {
        return Err(Error::arg(format!(
            "kernel regression needs non-negative kernel values, got {k}"
        )));
    }
    let total: f64 = kernel_row.iter().sum();
    if total < KR_DEGENERATE {
        return Ok(predict_identity(index.n_points()));
    }
    let mut coeffs = vec![0.0; index.n_points()];
    for (&(_, s), &k) in index.pairs().iter().zip(kernel_row) {
        coeffs[s] += k / total;
    }
    Ok(AffinePrediction {
        train_coefficients: coeffs,
        test_coefficient: 0.0,
    })
}

fn check_row(row: &[f64], index: &TrainingIndex) -> Result<()> {
    if row.len() != index.len() {
        return Err(Error::arg(format!(
            "row has {} entries but there are {} training pairs",
            row.len(),
            index.len()
        )));
    }
    Ok(())
}
