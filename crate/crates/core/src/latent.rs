//! Affine combinations of data points in the implicit (pseudo-)Euclidean
//! space, and the distance/kernel values they induce.
//!
//! With squared dissimilarities `D²` and affine weights `α` (Σα = 1), the
//! squared distance from point `t` to Σ αᵢ φ(xᵢ) is
//! `Σᵢ αᵢ D²[t, i] − ½ αᵀ D² α`. The kernel value is `Σᵢ αᵢ K[t, i]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::repr::SquareMatrix;

/// Tolerance for the sum of coefficients.
pub const AFFINE_TOL: f64 = 1e-9;
/// Squared distances above `-NEGATIVE_TOL` are treated as rounding noise.
pub const NEGATIVE_TOL: f64 = 1e-9;

/// A predicted point: weights over the `N` training points plus a weight on
/// the test input itself.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePrediction {
    pub train_coefficients: Vec<f64>,
    pub test_coefficient: f64,
}

impl AffinePrediction {
    /// All weight on training point `i`.
    pub fn indicator(n_train: usize, i: usize) -> Self {
        let mut train_coefficients = vec![0.0; n_train];
        train_coefficients[i] = 1.0;
        AffinePrediction {
            train_coefficients,
            test_coefficient: 0.0,
        }
    }

    /// The test input itself.
    pub fn identity(n_train: usize) -> Self {
        AffinePrediction {
            train_coefficients: vec![0.0; n_train],
            test_coefficient: 1.0,
        }
    }

    pub fn n_train(&self) -> usize {
        self.train_coefficients.len()
    }

    pub fn coefficient_sum(&self) -> f64 {
        self.train_coefficients.iter().sum::<f64>() + self.test_coefficient
    }

    pub fn is_affine(&self) -> bool {
        (self.coefficient_sum() - 1.0).abs() <= AFFINE_TOL
    }

    /// Expands to a weight vector of length `n`, training points first and
    /// the test coefficient at `test_index`.
    pub fn dense(&self, n: usize, test_index: usize) -> Result<DVector<f64>> {
        if n < self.n_train() || test_index >= n || test_index < self.n_train() {
            return Err(Error::arg(format!(
                "cannot place {} training weights and test index {test_index} in {n} slots",
                self.n_train()
            )));
        }
        let mut w = DVector::zeros(n);
        w.rows_mut(0, self.n_train()).copy_from_slice(&self.train_coefficients);
        w[test_index] += self.test_coefficient;
        Ok(w)
    }
}

/// Squared distance from point `target` to the combination `weights` (one
/// weight per row of `d2`). May be slightly negative in pseudo-Euclidean
/// geometry.
pub fn affine_squared_distance(weights: &DVector<f64>, d2: &DMatrix<f64>, target: usize) -> Result<f64> {
    let n = d2.nrows();
    if weights.len() != n || target >= n {
        return Err(Error::arg(format!(
            "weights of length {} / target {target} do not fit a {n}x{n} matrix",
            weights.len()
        )));
    }
    let d2w = d2 * weights;
    Ok(d2w[target] - 0.5 * weights.dot(&d2w))
}

/// Squared distance between point `target_index` and the prediction, where
/// `d2` covers the training points followed by the test input at index
/// `N = alpha.n_train()`.
pub fn extend_squared_distance(alpha: &AffinePrediction, d2: &SquareMatrix, target_index: usize) -> Result<f64> {
    let n = d2.n();
    if target_index >= n {
        return Err(Error::arg(format!(
            "target index {target_index} out of range for {n} points"
        )));
    }
    let w = alpha.dense(n, alpha.n_train())?;
    affine_squared_distance(&w, &d2.data, target_index)
}

/// Inner product between point `target_index` and the prediction, with the
/// same layout as [`extend_squared_distance`]. Linear in the coefficients.
pub fn extend_kernel(alpha: &AffinePrediction, k: &SquareMatrix, target_index: usize) -> Result<f64> {
    let n = k.n();
    if target_index >= n {
        return Err(Error::arg(format!(
            "target index {target_index} out of range for {n} points"
        )));
    }
    let w = alpha.dense(n, alpha.n_train())?;
    Ok(k.data.row(target_index).transpose().dot(&w))
}

/// Squared distances for many predictions at once. Column `p` of `weights`
/// is compared with point `targets[p]`.
pub fn batch_squared_distances(weights: &DMatrix<f64>, d2: &DMatrix<f64>, targets: &[usize]) -> Result<Vec<f64>> {
    let n = d2.nrows();
    if weights.nrows() != n || weights.ncols() != targets.len() || targets.iter().any(|&t| t >= n) {
        return Err(Error::arg("weight matrix or targets do not match the distance matrix"));
    }
    let d2w = d2 * weights;
    Ok(targets
        .iter()
        .enumerate()
        .map(|(p, &t)| d2w[(t, p)] - 0.5 * weights.column(p).dot(&d2w.column(p)))
        .collect())
}

/// Per-transition squared errors of one held-out trajectory, unclamped.
///
/// `d2` covers the `N` training points followed by the `T` points of the
/// test trajectory; `predictions[t]` predicts test point `t + 1` from test
/// point `t`.
pub fn fold_squared_errors(predictions: &[AffinePrediction], d2: &SquareMatrix) -> Result<Vec<f64>> {
    let n_train = predictions
        .first()
        .map(AffinePrediction::n_train)
        .ok_or_else(|| Error::arg("a fold needs at least one prediction (T >= 2)"))?;
    let n = d2.n();
    if n < n_train + 2 || n - n_train != predictions.len() + 1 {
        return Err(Error::arg(format!(
            "{} predictions need a distance matrix of {} points, got {n}",
            predictions.len(),
            n_train + predictions.len() + 1
        )));
    }
    let mut weights = DMatrix::zeros(n, predictions.len());
    let mut targets = Vec::with_capacity(predictions.len());
    for (t, p) in predictions.iter().enumerate() {
        if p.n_train() != n_train {
            return Err(Error::arg("predictions disagree on the training set size"));
        }
        weights.set_column(t, &p.dense(n, n_train + t)?);
        targets.push(n_train + t + 1);
    }
    batch_squared_distances(&weights, &d2.data, &targets)
}

/// Clamps rounding-level negatives to zero. Returns the clamped value and
/// whether the input was below `-NEGATIVE_TOL`.
pub fn clamp_squared(v: f64) -> (f64, bool) {
    (v.max(0.0), v < -NEGATIVE_TOL)
}

/// Root mean squared latent-space error over the test transitions.
pub fn fold_rmse(predictions: &[AffinePrediction], d2: &SquareMatrix) -> Result<f64> {
    let errs = fold_squared_errors(predictions, d2)?;
    let mean = errs.iter().map(|&e| clamp_squared(e).0).sum::<f64>() / errs.len() as f64;
    Ok(mean.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::Role;
    use proptest::prelude::*;

    fn collinear() -> SquareMatrix {
        SquareMatrix::from_rows(
            Role::SquaredDissimilarity,
            &[vec![0.0, 1.0, 4.0], vec![1.0, 0.0, 1.0], vec![4.0, 1.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn indicator_reads_the_matrix() {
        let d2 = collinear();
        for i in 0..2 {
            let a = AffinePrediction::indicator(2, i);
            assert_eq!(extend_squared_distance(&a, &d2, 2).unwrap(), d2.get(2, i));
        }
    }

    #[test]
    fn midpoint_of_collinear_points() {
        let a = AffinePrediction {
            train_coefficients: vec![0.5, 0.5],
            test_coefficient: 0.0,
        };
        let got = extend_squared_distance(&a, &collinear(), 2).unwrap();
        assert!((got - 2.25).abs() < 1e-15);
    }

    #[test]
    fn self_distance_is_zero() {
        // all mass on the test slot, distance to itself
        let a = AffinePrediction::identity(2);
        assert_eq!(extend_squared_distance(&a, &collinear(), 2).unwrap(), 0.0);
        assert!(extend_squared_distance(&a, &collinear(), 3).is_err());
    }

    #[test]
    fn kernel_extension_is_linear() {
        let k = SquareMatrix::from_rows(
            Role::Kernel,
            &[vec![2.0, 0.5, 0.3], vec![0.5, 1.0, 0.2], vec![0.3, 0.2, 1.5]],
        )
        .unwrap();
        let e0 = AffinePrediction::indicator(2, 0);
        assert_eq!(extend_kernel(&e0, &k, 2).unwrap(), 0.3);
        let half = AffinePrediction {
            train_coefficients: vec![0.5, 0.5],
            test_coefficient: 0.0,
        };
        assert!((extend_kernel(&half, &k, 2).unwrap() - 0.25).abs() < 1e-15);
        let zero = AffinePrediction {
            train_coefficients: vec![0.0, 0.0],
            test_coefficient: 0.0,
        };
        assert_eq!(extend_kernel(&zero, &k, 2).unwrap(), 0.0);
    }

    /// Points on a line: training {0, 10}, test trajectory {1, 2, 4}.
    fn line_fold() -> (SquareMatrix, Vec<f64>) {
        let xs: Vec<f64> = vec![0.0, 10.0, 1.0, 2.0, 4.0];
        let n = xs.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (xs[i] - xs[j]).powi(2)).collect())
            .collect();
        (SquareMatrix::from_rows(Role::SquaredDissimilarity, &rows).unwrap(), xs)
    }

    #[test]
    fn fold_rmse_cases() {
        let (d2, _) = line_fold();
        // identity: steps of 1 and 2
        let id = vec![AffinePrediction::identity(2); 2];
        let want = ((1.0 + 4.0) / 2.0f64).sqrt();
        assert!((fold_rmse(&id, &d2).unwrap() - want).abs() < 1e-12);

        // exact hits: test point 2 equals 0.8*0 + 0.2*10; 4 = 0.6*0 + 0.4*10
        let exact = vec![
            AffinePrediction {
                train_coefficients: vec![0.8, 0.2],
                test_coefficient: 0.0,
            },
            AffinePrediction {
                train_coefficients: vec![0.6, 0.4],
                test_coefficient: 0.0,
            },
        ];
        assert!(fold_rmse(&exact, &d2).unwrap() < 1e-7);

        assert!(fold_rmse(&[], &d2).is_err());
        assert!(fold_rmse(&id[..1], &d2).is_err());
    }

    proptest! {
        #[test]
        fn matches_explicit_coordinates(
            pts in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 2..12),
            raw in proptest::collection::vec(-2.0f64..2.0, 12),
            target_pick in 0usize..12,
        ) {
            let n = pts.len();
            let d2 = DMatrix::from_fn(n, n, |i, j| pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum());
            let mut w = DVector::from_iterator(n, raw.iter().take(n).copied());
            let s: f64 = w.sum();
            w[0] += 1.0 - s;
            let target = target_pick % n;
            let got = affine_squared_distance(&w, &d2, target).unwrap();
            let point: Vec<f64> = (0..3).map(|c| (0..n).map(|i| w[i] * pts[i][c]).sum()).collect();
            let want: f64 = point.iter().zip(&pts[target]).map(|(a, b)| (a - b).powi(2)).sum();
            prop_assert!((got - want).abs() < 1e-8 * (1.0 + want));
        }

        #[test]
        fn kernel_and_distance_routes_agree(
            pts in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 2), 3..10),
            raw in proptest::collection::vec(-1.0f64..1.0, 10),
        ) {
            // linear kernel on explicit points; D² derived from it
            let n = pts.len();
            let k = DMatrix::from_fn(n, n, |i, j| pts[i][0] * pts[j][0] + pts[i][1] * pts[j][1]);
            let d2 = DMatrix::from_fn(n, n, |i, j| k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]);
            let mut coeffs: Vec<f64> = raw.iter().take(n - 1).copied().collect();
            let s: f64 = coeffs.iter().sum();
            coeffs[0] += 1.0 - s;
            let alpha = AffinePrediction { train_coefficients: coeffs, test_coefficient: 0.0 };
            let km = SquareMatrix::new(Role::Kernel, k.clone()).unwrap();
            let dm = SquareMatrix::new(Role::SquaredDissimilarity, d2).unwrap();
            let t = n - 1;
            let w = alpha.dense(n, n - 1).unwrap();
            let via_kernel = k[(t, t)] - 2.0 * extend_kernel(&alpha, &km, t).unwrap() + (w.transpose() * &k * &w)[0];
            let via_dist = extend_squared_distance(&alpha, &dm, t).unwrap();
            prop_assert!((via_kernel - via_dist).abs() < 1e-8 * (1.0 + via_dist.abs()));
        }
    }
}
