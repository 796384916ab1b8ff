use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::TrainingIndex;
use crate::error::{Error, Result};
use crate::latent::AffinePrediction;
use crate::repr::SquareMatrix;

const JITTER_RETRIES: usize = 3;

/// A GP fitted on predecessor kernel values, with the identity prior mean.
#[derive(Debug, Clone)]
pub struct GpModel {
    pub noise_std: f64,
    /// Diagonal jitter that had to be added on top of σ̃² (0 if none).
    pub jitter: f64,
    chol: Cholesky<f64, Dyn>,
    index: TrainingIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    pub mean: AffinePrediction,
    pub variance: f64,
}

/// Factorizes `K + σ̃² I`. On failure, diagonal jitter starting at
/// `1e-10 · trace / N` is added and grown tenfold, at most three times.
pub fn fit_gp(k_pred: &SquareMatrix, noise_std: f64, index: &TrainingIndex) -> Result<GpModel> {
    fit_gp_matrix(&k_pred.data, noise_std, index)
}

pub(crate) fn fit_gp_matrix(k: &DMatrix<f64>, noise_std: f64, index: &TrainingIndex) -> Result<GpModel> {
    let n = k.nrows();
    if !k.is_square() || n != index.len() {
        return Err(Error::arg(format!(
            "kernel is {}x{} but there are {} training pairs",
            k.nrows(),
            k.ncols(),
            index.len()
        )));
    }
    if !(noise_std >= 0.0) {
        return Err(Error::arg(format!("noise std must be >= 0, got {noise_std}")));
    }
    let mut system = k.clone();
    for i in 0..n {
        system[(i, i)] += noise_std * noise_std;
    }
    let mut jitter = 0.0;
    let base = 1e-10 * (k.trace() / n.max(1) as f64).abs().max(f64::MIN_POSITIVE);
    for attempt in 0..=JITTER_RETRIES {
        if attempt > 0 {
            let next = base * 10f64.powi(attempt as i32 - 1);
            for i in 0..n {
                system[(i, i)] += next - jitter;
            }
            jitter = next;
        }
        if let Some(chol) = Cholesky::new(system.clone()) {
            return Ok(GpModel {
                noise_std,
                jitter,
                chol,
                index: index.clone(),
            });
        }
    }
    Err(Error::Numerical(format!(
        "K + σ̃²I not positive definite after jitter {jitter:e} (σ̃ = {noise_std})"
    )))
}

impl GpModel {
    pub fn index(&self) -> &TrainingIndex {
        &self.index
    }

    /// (K + σ̃² I)⁻¹ b.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.index.len() {
            return Err(Error::arg("right-hand side length does not match the model"));
        }
        Ok(self.chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
    }

    fn distribution(&self, row: &[f64], gamma: &[f64], k_xx: f64) -> PredictiveDistribution {
        let explained: f64 = row.iter().zip(gamma).map(|(a, b)| a * b).sum();
        PredictiveDistribution {
            mean: AffinePrediction {
                train_coefficients: self.index.difference_coefficients(gamma.iter().copied()),
                test_coefficient: 1.0,
            },
            variance: (k_xx - explained).clamp(0.0, k_xx.max(0.0)),
        }
    }
}

/// Posterior under the identity prior: μ = x + γ (Y − X) with
/// γ = k (K + σ̃² I)⁻¹, and σ² = k(x, x) − γ kᵀ.
pub fn predict_gp(model: &GpModel, kernel_row: &[f64], k_xx: f64) -> Result<PredictiveDistribution> {
    let gamma = model.solve(kernel_row)?;
    Ok(model.distribution(kernel_row, &gamma, k_xx))
}

/// Predictions for several test inputs; row `q` of `rows` holds the kernel
/// values of input `q` against the model's predecessors.
pub fn predict_gp_batch(model: &GpModel, rows: &DMatrix<f64>, k_xx: &[f64]) -> Result<Vec<PredictiveDistribution>> {
    if rows.ncols() != model.index.len() || rows.nrows() != k_xx.len() {
        return Err(Error::arg("kernel rows do not match the model"));
    }
    let gammas = model.chol.solve(&rows.transpose());
    Ok((0..rows.nrows())
        .map(|q| {
            let row: Vec<f64> = rows.row(q).iter().copied().collect();
            let gamma: Vec<f64> = gammas.column(q).iter().copied().collect();
            model.distribution(&row, &gamma, k_xx[q])
        })
        .collect())
}
