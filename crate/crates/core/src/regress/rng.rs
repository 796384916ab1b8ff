//! Relational neural gas: prototype clustering on a dissimilarity matrix.
//!
//! Prototypes are convex combinations of the data points, so the squared
//! distance of point `i` to prototype `a` is `(D² a)ᵢ − ½ aᵀ D² a`.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::repr::SquareMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct RngConfig {
    pub clusters: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Train prototypes on at most this many points, then assign the rest.
    pub subset: Option<usize>,
    pub lambda_final: f64,
}

impl RngConfig {
    pub fn new(clusters: usize, seed: u64) -> Self {
        RngConfig {
            clusters,
            epochs: 100,
            seed,
            subset: None,
            lambda_final: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RngClustering {
    /// Cluster of every point, in `0..clusters`.
    pub assignments: Vec<usize>,
    /// Convex coefficients of each prototype over all points.
    pub prototypes: Vec<Vec<f64>>,
}

impl RngClustering {
    pub fn clusters(&self) -> usize {
        self.prototypes.len()
    }

    /// Point indices per cluster; empty clusters yield empty lists.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.clusters()];
        for (i, &c) in self.assignments.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// Sum of squared distances of points to their prototype.
    pub fn quantization_error(&self, d2: &SquareMatrix) -> f64 {
        let protos = prototype_matrix(&self.prototypes, d2.n());
        let dist = point_prototype_distances(&d2.data, &protos);
        self.assignments
            .iter()
            .enumerate()
            .map(|(i, &c)| dist[(i, c)].max(0.0))
            .sum()
    }
}

fn prototype_matrix(prototypes: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, prototypes.len(), |i, c| prototypes[c][i])
}

/// Squared distances (rows: points of `d2_rows`, columns: prototypes) where
/// `d2_rows` is points × support and `protos` is support × prototypes.
fn point_prototype_distances(d2_rows: &DMatrix<f64>, protos: &DMatrix<f64>) -> DMatrix<f64> {
    let support = d2_rows.ncols();
    let mut dist = d2_rows * protos;
    // self terms need D² restricted to the support, which is the leading
    // square block when rows start with the support points
    let d2_support = d2_rows.rows(0, support);
    let self_terms: Vec<f64> = (0..protos.ncols())
        .map(|c| {
            let a = protos.column(c);
            0.5 * a.dot(&(d2_support * a))
        })
        .collect();
    for c in 0..protos.ncols() {
        for i in 0..dist.nrows() {
            dist[(i, c)] -= self_terms[c];
        }
    }
    dist
}

fn nearest(dist: &DMatrix<f64>) -> Vec<usize> {
    (0..dist.nrows())
        .map(|i| {
            let row = dist.row(i);
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] < row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Batch relational neural gas with rank-based neighborhood
/// `exp(-rank / λ)` and λ annealed from `C/2` to `lambda_final`.
/// Prototypes start on `C` distinct seeded-random points.
pub fn relational_neural_gas(d2: &SquareMatrix, cfg: &RngConfig) -> Result<RngClustering> {
    let n = d2.n();
    let c = cfg.clusters;
    if c < 1 || c > n {
        return Err(Error::arg(format!("cluster count {c} must lie in [1, {n}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Training points come first so the support block is leading.
    let mut order: Vec<usize> = (0..n).collect();
    let train_n = match cfg.subset {
        Some(s) if s < n => {
            let chosen = sample(&mut rng, n, s.max(c)).into_vec();
            let mut in_subset = vec![false; n];
            for &i in &chosen {
                in_subset[i] = true;
            }
            order = chosen.clone();
            order.extend((0..n).filter(|&i| !in_subset[i]));
            s.max(c)
        }
        _ => n,
    };
    let d2_train = DMatrix::from_fn(train_n, train_n, |i, j| d2.data[(order[i], order[j])]);

    let mut protos = DMatrix::zeros(train_n, c);
    for (k, i) in sample(&mut rng, train_n, c).into_iter().enumerate() {
        protos[(i, k)] = 1.0;
    }

    let lambda0 = c as f64 / 2.0;
    for epoch in 0..cfg.epochs {
        let lambda = lambda0 * (cfg.lambda_final / lambda0).powf(epoch as f64 / cfg.epochs as f64);
        let dist = point_prototype_distances(&d2_train, &protos);
        let mut ranks = DMatrix::zeros(train_n, c);
        let mut idx: Vec<usize> = (0..c).collect();
        for i in 0..train_n {
            idx.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
            for (r, &k) in idx.iter().enumerate() {
                ranks[(i, k)] = r as f64;
            }
        }
        for k in 0..c {
            let min_rank = ranks.column(k).min();
            let weights: Vec<f64> = ranks
                .column(k)
                .iter()
                .map(|&r| (-(r - min_rank) / lambda).exp())
                .collect();
            let total: f64 = weights.iter().sum();
            for (i, w) in weights.into_iter().enumerate() {
                protos[(i, k)] = w / total;
            }
        }
    }

    let d2_rows = DMatrix::from_fn(n, train_n, |i, j| d2.data[(order[i], order[j])]);
    let assigned = nearest(&point_prototype_distances(&d2_rows, &protos));
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = assigned[pos];
    }
    let prototypes = (0..c)
        .map(|k| {
            let mut full = vec![0.0; n];
            for pos in 0..train_n {
                full[order[pos]] = protos[(pos, k)];
            }
            full
        })
        .collect();
    Ok(RngClustering {
        assignments,
        prototypes,
    })
}
