//! Robust Bayesian committee machine over per-cluster GP experts.

use super::gp::{predict_gp, GpModel, PredictiveDistribution};
use crate::error::{Error, Result};
use crate::latent::AffinePrediction;

/// Floor for expert and combined variances.
pub const RBCM_MIN_VARIANCE: f64 = 1e-12;

/// Merges expert predictions with differential-entropy weights
/// `β_c = ½ (ln σ²_prior − ln σ²_c)`:
///
/// ```text
/// σ⁻²  = Σ β_c / σ²_c + (1 − Σ β_c) / σ²_prior
/// μ    = σ² (Σ β_c / σ²_c · μ_c + (1 − Σ β_c) / σ²_prior · x)
/// ```
///
/// Each expert mean has test coefficient 1, so the merged mean does too and
/// its training coefficients sum to zero.
pub fn combine_rbcm(experts: &[PredictiveDistribution], sigma_prior: f64) -> Result<PredictiveDistribution> {
    if !(sigma_prior > 0.0) {
        return Err(Error::arg(format!("prior std must be positive, got {sigma_prior}")));
    }
    let n_train = experts
        .first()
        .map(|e| e.mean.n_train())
        .ok_or_else(|| Error::arg("rBCM needs at least one expert"))?;
    let prior_var = sigma_prior * sigma_prior;
    let mut precision = 0.0;
    let mut beta_sum = 0.0;
    let mut weighted = vec![0.0; n_train];
    let mut diag = Vec::with_capacity(experts.len());
    for e in experts {
        if e.mean.n_train() != n_train {
            return Err(Error::arg("experts disagree on the training set size"));
        }
        let var = e.variance.max(RBCM_MIN_VARIANCE);
        let beta = 0.5 * (prior_var.ln() - var.ln());
        diag.push((var, beta));
        precision += beta / var;
        beta_sum += beta;
        for (w, c) in weighted.iter_mut().zip(&e.mean.train_coefficients) {
            *w += beta / var * c;
        }
    }
    precision += (1.0 - beta_sum) / prior_var;
    if !(precision > 0.0) || !precision.is_finite() {
        return Err(Error::Numerical(format!(
            "rBCM precision {precision:e} not positive; (σ²_c, β_c) = {diag:?}"
        )));
    }
    let variance = (1.0 / precision).max(RBCM_MIN_VARIANCE);
    Ok(PredictiveDistribution {
        mean: AffinePrediction {
            train_coefficients: weighted.into_iter().map(|w| w * variance).collect(),
            test_coefficient: 1.0,
        },
        variance,
    })
}

/// Runs every expert on its own kernel row and merges the results.
pub fn predict_rbcm(
    experts: &[GpModel],
    kernel_rows: &[Vec<f64>],
    k_xx: f64,
    sigma_prior: f64,
) -> Result<PredictiveDistribution> {
    if experts.len() != kernel_rows.len() {
        return Err(Error::arg("one kernel row per expert required"));
    }
    let dists = experts
        .iter()
        .zip(kernel_rows)
        .map(|(m, row)| predict_gp(m, row, k_xx))
        .collect::<Result<Vec<_>>>()?;
    combine_rbcm(&dists, sigma_prior)
}
