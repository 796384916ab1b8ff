use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::problem::{CorrectionMode, Problem};
use super::report::ExperimentResult;
use super::{HyperParams, Method};
use crate::error::{Error, Result};
use crate::latent::{clamp_squared, fold_squared_errors, AffinePrediction};
use crate::regress::gp::fit_gp_matrix;
use crate::regress::{
    combine_rbcm, predict_1nn, predict_gp_batch, predict_identity, predict_kr, relational_neural_gas, RngConfig,
    TrainingIndex,
};
use crate::repr::{eigenvalue_correct_clip, spectrum_bounds, Role, SquareMatrix};

const NO_CLUSTER: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Random search trials per outer fold.
    pub trials: usize,
    pub seed: u64,
    pub correction: CorrectionMode,
    pub rng_epochs: usize,
    pub rng_subset: Option<usize>,
    /// Overrides the default ⌊N/100⌋ (at least 1) cluster count.
    pub clusters: Option<usize>,
    /// Fixes ψ to this multiple of d̄ instead of searching it.
    pub fixed_bandwidth: Option<f64>,
    /// Lower end of the σ̃ range as a multiple of d̄.
    pub noise_low: f64,
    /// Outer folds evaluated concurrently.
    pub jobs: usize,
    /// Keep every fold's predictions in the result.
    pub keep_predictions: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            trials: 10,
            seed: 0,
            correction: CorrectionMode::Auto,
            rng_epochs: 100,
            rng_subset: None,
            clusters: None,
            fixed_bandwidth: None,
            noise_low: 1e-3,
            jobs: 1,
            keep_predictions: false,
        }
    }
}

/// Everything needed to re-score one outer fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldDetail {
    /// Global indices of the training points, in coefficient order.
    pub train_points: Vec<usize>,
    pub test_points: Vec<usize>,
    /// Training-fold mean distance used for normalization.
    pub mean_distance: f64,
    pub predictions: Vec<AffinePrediction>,
    /// Whether the training kernel had to be eigenvalue-corrected.
    pub corrected: bool,
}

/// Distances of one outer fold, normalized by its training mean, plus the
/// clustering of its training predecessors.
struct FoldCtx {
    dn: DMatrix<f64>,
    outer_train: Vec<usize>,
    clusters: Vec<usize>,
    correction: CorrectionMode,
}

/// RBF kernel values; the block over the outer training points is
/// precomputed (and corrected when required).
struct KernelSource<'a> {
    dn: &'a DMatrix<f64>,
    scale: f64,
    pos: Vec<usize>,
    block: DMatrix<f64>,
    corrected: bool,
}

impl<'a> KernelSource<'a> {
    /// Kernel source without the training block, for methods that only
    /// read raw similarities.
    fn similarities(ctx: &'a FoldCtx, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::arg(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(KernelSource {
            dn: &ctx.dn,
            scale: -0.5 / (bandwidth * bandwidth),
            pos: vec![usize::MAX; ctx.dn.nrows()],
            block: DMatrix::zeros(0, 0),
            corrected: false,
        })
    }

    fn for_method(ctx: &'a FoldCtx, bandwidth: f64, method: Method) -> Result<Self> {
        match method {
            Method::Gpr | Method::Rbcm => Self::new(ctx, bandwidth),
            _ => Self::similarities(ctx, bandwidth),
        }
    }

    fn new(ctx: &'a FoldCtx, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::arg(format!("bandwidth must be positive, got {bandwidth}")));
        }
        let scale = -0.5 / (bandwidth * bandwidth);
        let n = ctx.outer_train.len();
        let mut pos = vec![usize::MAX; ctx.dn.nrows()];
        for (p, &i) in ctx.outer_train.iter().enumerate() {
            pos[i] = p;
        }
        let mut block = DMatrix::from_fn(n, n, |a, b| {
            let d = ctx.dn[(ctx.outer_train[a], ctx.outer_train[b])];
            (scale * d * d).exp()
        });
        let correct = match ctx.correction {
            CorrectionMode::Never => false,
            CorrectionMode::Always => true,
            CorrectionMode::Auto => needs_correction(&block)?,
        };
        if correct {
            block = eigenvalue_correct_clip(&SquareMatrix::new(Role::Similarity, block)?).data;
        }
        Ok(KernelSource {
            dn: &ctx.dn,
            scale,
            pos,
            block,
            corrected: correct,
        })
    }

    fn kernel(&self, i: usize, j: usize) -> f64 {
        match (self.pos[i], self.pos[j]) {
            (a, b) if a != usize::MAX && b != usize::MAX => self.block[(a, b)],
            _ => self.similarity(i, j),
        }
    }

    /// Uncorrected RBF similarity, always in (0, 1].
    fn similarity(&self, i: usize, j: usize) -> f64 {
        let d = self.dn[(i, j)];
        (self.scale * d * d).exp()
    }
}

/// Whether the smallest eigenvalue is below −1e-8 · max|λ|. A Cholesky
/// factorization of `S + δI` with δ = 1e-8 · trace / n settles the common
/// positive definite case without an eigendecomposition, since max|λ| is at
/// least trace / n.
fn needs_correction(block: &DMatrix<f64>) -> Result<bool> {
    let n = block.nrows();
    if n == 0 {
        return Ok(false);
    }
    let shift = 1e-8 * (block.trace() / n as f64).abs();
    let mut shifted = block.clone();
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    if shift > 0.0 && nalgebra::Cholesky::new(shifted).is_some() {
        return Ok(false);
    }
    let (min, max_abs) = spectrum_bounds(&SquareMatrix::new(Role::Similarity, block.clone())?);
    Ok(min < -1e-8 * max_abs)
}

/// Predictions for every transition of `test` from a model trained on the
/// `train` trajectories (global indices). Returns the predictions and the
/// time spent predicting (model fitting excluded).
fn predict_in_ctx(
    ctx: &FoldCtx,
    kernel: Option<&KernelSource>,
    method: Method,
    hp: Option<&HyperParams>,
    train: &[&[usize]],
    test: &[usize],
) -> Result<(Vec<AffinePrediction>, Duration)> {
    let lengths: Vec<usize> = train.iter().map(|t| t.len()).collect();
    let flat: Vec<usize> = train.iter().flat_map(|t| t.iter().copied()).collect();
    let index = TrainingIndex::from_lengths(&lengths);
    let preds_global: Vec<usize> = index.pairs().iter().map(|&(p, _)| flat[p]).collect();
    let inputs = &test[..test.len() - 1];
    let need_kernel = || kernel.ok_or_else(|| Error::arg(format!("{method} needs a kernel")));
    let need_hp = || hp.ok_or_else(|| Error::arg(format!("{method} needs hyperparameters")));

    match method {
        Method::Identity => {
            let start = Instant::now();
            let out = inputs.iter().map(|_| predict_identity(flat.len())).collect();
            Ok((out, start.elapsed()))
        }
        Method::OneNn => {
            let start = Instant::now();
            let out = inputs
                .iter()
                .map(|&q| {
                    let row: Vec<f64> = preds_global.iter().map(|&p| ctx.dn[(q, p)]).collect();
                    predict_1nn(&row, &index)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((out, start.elapsed()))
        }
        Method::Kr => {
            let ks = need_kernel()?;
            let start = Instant::now();
            let out = inputs
                .iter()
                .map(|&q| {
                    let row: Vec<f64> = preds_global.iter().map(|&p| ks.similarity(q, p)).collect();
                    predict_kr(&row, &index)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((out, start.elapsed()))
        }
        Method::Gpr => {
            let (ks, hp) = (need_kernel()?, need_hp()?);
            let all: Vec<usize> = (0..index.len()).collect();
            gp_committee(ks, hp, &index, &preds_global, &[all], inputs, false)
        }
        Method::Rbcm => {
            let (ks, hp) = (need_kernel()?, need_hp()?);
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (pair, &g) in preds_global.iter().enumerate() {
                let c = ctx.clusters.get(g).copied().unwrap_or(NO_CLUSTER);
                if c == NO_CLUSTER {
                    return Err(Error::arg(format!("point {g} has no cluster")));
                }
                groups.entry(c).or_default().push(pair);
            }
            let groups: Vec<Vec<usize>> = groups.into_values().collect();
            gp_committee(ks, hp, &index, &preds_global, &groups, inputs, true)
        }
    }
}

/// One GP per group of pairs; with `combine` the experts are merged by the
/// rBCM rule, otherwise the single group's GP is returned directly.
fn gp_committee(
    ks: &KernelSource,
    hp: &HyperParams,
    index: &TrainingIndex,
    preds_global: &[usize],
    groups: &[Vec<usize>],
    inputs: &[usize],
    combine: bool,
) -> Result<(Vec<AffinePrediction>, Duration)> {
    let experts = groups
        .iter()
        .map(|g| {
            let sub = index.subset(g);
            let k = DMatrix::from_fn(g.len(), g.len(), |a, b| {
                ks.kernel(preds_global[g[a]], preds_global[g[b]])
            });
            fit_gp_matrix(&k, hp.noise_std, &sub)
        })
        .collect::<Result<Vec<_>>>()?;
    let k_xx: Vec<f64> = inputs.iter().map(|&q| ks.kernel(q, q)).collect();

    let start = Instant::now();
    let mut per_expert = Vec::with_capacity(experts.len());
    for (model, g) in experts.iter().zip(groups) {
        let rows = DMatrix::from_fn(inputs.len(), g.len(), |q, a| ks.kernel(inputs[q], preds_global[g[a]]));
        per_expert.push(predict_gp_batch(model, &rows, &k_xx)?);
    }
    let out = if combine {
        (0..inputs.len())
            .map(|q| {
                let dists: Vec<_> = per_expert.iter().map(|e| e[q].clone()).collect();
                combine_rbcm(&dists, hp.prior_std).map(|d| d.mean)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        per_expert.swap_remove(0).into_iter().map(|d| d.mean).collect()
    };
    Ok((out, start.elapsed()))
}

/// Unclamped squared errors of `preds` against the test trajectory.
fn squared_errors(ctx: &FoldCtx, train: &[&[usize]], test: &[usize], preds: &[AffinePrediction]) -> Result<Vec<f64>> {
    let points: Vec<usize> = train
        .iter()
        .flat_map(|t| t.iter().copied())
        .chain(test.iter().copied())
        .collect();
    let n = points.len();
    let d2 = DMatrix::from_fn(n, n, |a, b| {
        let d = ctx.dn[(points[a], points[b])];
        d * d
    });
    fold_squared_errors(preds, &SquareMatrix::new(Role::SquaredDissimilarity, d2)?)
}

fn rmse(errors: &[f64]) -> f64 {
    (errors.iter().map(|&e| clamp_squared(e).0).sum::<f64>() / errors.len() as f64).sqrt()
}

/// `trials` hyperparameter draws: ψ uniform on [0.05 d̄, d̄] (or fixed),
/// σ̃ log-uniform on [noise_low · d̄, d̄], σ_prior = d̄.
pub fn sample_hyperparams(cfg: &EvalConfig, mean_distance: f64, clusters: usize, seed: u64) -> Vec<HyperParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = ((cfg.noise_low * mean_distance).ln(), mean_distance.ln());
    (0..cfg.trials.max(1))
        .map(|_| {
            let drawn_bandwidth = rng.random_range(0.05 * mean_distance..=mean_distance);
            let bandwidth = cfg.fixed_bandwidth.map_or(drawn_bandwidth, |f| f * mean_distance);
            HyperParams {
                bandwidth,
                noise_std: rng.random_range(lo..=hi).exp(),
                prior_std: mean_distance,
                clusters,
            }
        })
        .collect()
}

/// Mean validation RMSE of leave-one-trajectory-out over `train`. With a
/// single trajectory the model is scored on its own training data.
fn nested_score(ctx: &FoldCtx, ks: &KernelSource, method: Method, hp: &HyperParams, train: &[&[usize]]) -> Result<f64> {
    if train.len() == 1 {
        let (preds, _) = predict_in_ctx(ctx, Some(ks), method, Some(hp), train, train[0])?;
        return Ok(rmse(&squared_errors(ctx, train, train[0], &preds)?));
    }
    let mut total = 0.0;
    for held in 0..train.len() {
        let inner: Vec<&[usize]> = train
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != held)
            .map(|(_, t)| *t)
            .collect();
        let (preds, _) = predict_in_ctx(ctx, Some(ks), method, Some(hp), &inner, train[held])?;
        total += rmse(&squared_errors(ctx, &inner, train[held], &preds)?);
    }
    Ok(total / train.len() as f64)
}

fn search_in_ctx(
    ctx: &FoldCtx,
    method: Method,
    train: &[&[usize]],
    cfg: &EvalConfig,
    clusters: usize,
    seed: u64,
) -> Result<HyperParams> {
    // distances are normalized, so d̄ = 1
    let candidates = sample_hyperparams(cfg, 1.0, clusters, seed);
    let mut scores = Vec::with_capacity(candidates.len());
    for hp in &candidates {
        let ks = KernelSource::for_method(ctx, hp.bandwidth, method)?;
        let score = nested_score(ctx, &ks, method, hp, train)?;
        log::debug!(
            "{method} ψ={:.4} σ̃={:.4e} → nested RMSE {score:.5}",
            hp.bandwidth,
            hp.noise_std
        );
        scores.push(score);
    }
    Ok(candidates[first_argmin(&scores)])
}

/// Index of the lowest score; the earliest wins ties.
fn first_argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    best
}

fn build_ctx(
    problem: &Problem,
    outer_train: &[usize],
    method: Method,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<(FoldCtx, f64, usize)> {
    let trajectories = problem.trajectory_points();
    let train_points: Vec<usize> = outer_train
        .iter()
        .flat_map(|&j| trajectories[j].iter().copied())
        .collect();
    let mean = problem.distances.off_diagonal_mean(&train_points);
    if !(mean > 0.0) {
        return Err(Error::Degenerate("training distances are all zero".into()));
    }
    let dn = &problem.distances.data / mean;
    let predecessors: Vec<usize> = outer_train
        .iter()
        .flat_map(|&j| trajectories[j][..trajectories[j].len() - 1].iter().copied())
        .collect();
    let n_clusters = cfg
        .clusters
        .unwrap_or(predecessors.len() / 100)
        .clamp(1, predecessors.len().max(1));
    let mut clusters = vec![NO_CLUSTER; problem.n_points()];
    if method == Method::Rbcm {
        let n = predecessors.len();
        let d2 = DMatrix::from_fn(n, n, |a, b| dn[(predecessors[a], predecessors[b])].powi(2));
        let rng_cfg = RngConfig {
            epochs: cfg.rng_epochs,
            subset: cfg.rng_subset,
            ..RngConfig::new(n_clusters, seed)
        };
        let c = relational_neural_gas(&SquareMatrix::new(Role::SquaredDissimilarity, d2)?, &rng_cfg)?;
        for (a, &p) in predecessors.iter().enumerate() {
            clusters[p] = c.assignments[a];
        }
    }
    Ok((
        FoldCtx {
            dn,
            outer_train: train_points,
            clusters,
            correction: cfg.correction,
        },
        mean,
        n_clusters,
    ))
}

/// Random search over the trajectories `train` (indices into the problem),
/// scored by nested leave-one-out. Only distances among the training
/// trajectories are read. Returned parameters are in normalized units
/// (d̄ = 1).
pub fn random_search(
    problem: &Problem,
    train: &[usize],
    method: Method,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<HyperParams> {
    if train.is_empty() {
        return Err(Error::arg("random search needs at least one trajectory"));
    }
    let (ctx, _, clusters) = build_ctx(problem, train, method, cfg, seed)?;
    let trajectories = problem.trajectory_points();
    let train_sets: Vec<&[usize]> = train.iter().map(|&j| trajectories[j].as_slice()).collect();
    search_in_ctx(&ctx, method, &train_sets, cfg, clusters, seed)
}

/// Fits on the trajectories `train` and predicts every transition of
/// trajectory `test` with fixed (normalized) hyperparameters.
pub fn predict_fold(
    problem: &Problem,
    train: &[usize],
    test: usize,
    method: Method,
    hp: &HyperParams,
    cfg: &EvalConfig,
) -> Result<FoldDetail> {
    let (ctx, mean, _) = build_ctx(problem, train, method, cfg, cfg.seed)?;
    let trajectories = problem.trajectory_points();
    let train_sets: Vec<&[usize]> = train.iter().map(|&j| trajectories[j].as_slice()).collect();
    let ks = KernelSource::for_method(&ctx, hp.bandwidth, method)?;
    let (predictions, _) = predict_in_ctx(&ctx, Some(&ks), method, Some(hp), &train_sets, &trajectories[test])?;
    Ok(FoldDetail {
        train_points: ctx.outer_train.clone(),
        test_points: trajectories[test].clone(),
        mean_distance: mean,
        predictions,
        corrected: ks.corrected,
    })
}

struct FoldOutcome {
    rmse: f64,
    runtime_ms: f64,
    params: Option<HyperParams>,
    negative_terms: usize,
    detail: Option<FoldDetail>,
}

fn run_fold(problem: &Problem, method: Method, cfg: &EvalConfig, fold: usize, seed: u64) -> Result<FoldOutcome> {
    let m = problem.n_trajectories();
    let outer_train: Vec<usize> = (0..m).filter(|&j| j != fold).collect();
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let (search_seed, cluster_seed) = (seeds.next_u64(), seeds.next_u64());
    let (ctx, mean, n_clusters) = build_ctx(problem, &outer_train, method, cfg, cluster_seed)?;
    let trajectories = problem.trajectory_points();
    let train_sets: Vec<&[usize]> = outer_train.iter().map(|&j| trajectories[j].as_slice()).collect();
    let test = &trajectories[fold];

    let params = if method.is_tuned() {
        Some(search_in_ctx(&ctx, method, &train_sets, cfg, n_clusters, search_seed)?)
    } else {
        None
    };
    let ks = params
        .as_ref()
        .map(|hp| KernelSource::for_method(&ctx, hp.bandwidth, method))
        .transpose()?;
    let (predictions, elapsed) = predict_in_ctx(&ctx, ks.as_ref(), method, params.as_ref(), &train_sets, test)?;
    let errors = squared_errors(&ctx, &train_sets, test, &predictions)?;
    let negative_terms = errors.iter().filter(|&&e| clamp_squared(e).1).count();
    if negative_terms > 0 {
        log::warn!(
            "{method} fold {fold}: {negative_terms} squared distance(s) below -1e-9 clamped to 0 (non-Euclidean geometry)"
        );
    }
    Ok(FoldOutcome {
        rmse: rmse(&errors),
        runtime_ms: elapsed.as_secs_f64() * 1e3 / predictions.len() as f64,
        params,
        negative_terms,
        detail: cfg.keep_predictions.then(|| FoldDetail {
            train_points: ctx.outer_train.clone(),
            test_points: test.clone(),
            mean_distance: mean,
            predictions,
            corrected: ks.as_ref().is_some_and(|k| k.corrected),
        }),
    })
}

/// Leave-one-trajectory-out cross-validation of one method.
pub fn loo_cv(problem: &Problem, method: Method, cfg: &EvalConfig) -> Result<ExperimentResult> {
    let m = problem.n_trajectories();
    if m < 2 {
        return Err(Error::arg(format!(
            "cross-validation needs at least 2 trajectories, got {m}"
        )));
    }
    let seeds = crate::generators::child_seeds(cfg.seed, m);
    let outcomes: Vec<Mutex<Option<Result<FoldOutcome>>>> = (0..m).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let fold = next.fetch_add(1, Ordering::SeqCst);
        if fold >= m {
            break;
        }
        let out = run_fold(problem, method, cfg, fold, seeds[fold]);
        *outcomes[fold].lock().unwrap() = Some(out);
    };
    if cfg.jobs <= 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..cfg.jobs.min(m) {
                s.spawn(work);
            }
        });
    }

    let mut result = ExperimentResult {
        method,
        fold_ids: problem.trajectory_ids.clone(),
        fold_rmse: Vec::with_capacity(m),
        runtime_ms: Vec::with_capacity(m),
        params: Vec::with_capacity(m),
        negative_terms: 0,
        metadata: problem.metadata.clone(),
        details: Vec::new(),
    };
    for slot in outcomes {
        let outcome = slot.into_inner().unwrap().expect("every fold ran")?;
        result.fold_rmse.push(outcome.rmse);
        result.runtime_ms.push(outcome.runtime_ms);
        result.params.push(outcome.params);
        result.negative_terms += outcome.negative_terms;
        result.details.extend(outcome.detail);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate_ba_dataset, BaParams};

    #[test]
    fn search_keeps_the_lowest_nested_score() {
        assert_eq!(first_argmin(&[0.5, 0.3]), 1);
        assert_eq!(first_argmin(&[0.3, 0.5]), 0);
        assert_eq!(first_argmin(&[0.4, 0.2, 0.2]), 1);
    }

    fn small_ba() -> Problem {
        let d = generate_ba_dataset(
            &BaParams {
                m0: 3,
                k: 2,
                m: 10,
                seed: 4,
            },
            4,
        )
        .unwrap();
        Problem::from_histograms(&d).unwrap()
    }

    #[test]
    fn sampling_respects_ranges() {
        let cfg = EvalConfig {
            trials: 1000,
            ..Default::default()
        };
        let dbar = 2.5;
        for hp in sample_hyperparams(&cfg, dbar, 3, 1) {
            assert!((0.05 * dbar..=dbar).contains(&hp.bandwidth));
            assert!((1e-3 * dbar..=dbar * (1.0 + 1e-12)).contains(&hp.noise_std));
            assert_eq!(hp.prior_std, dbar);
            assert_eq!(hp.clusters, 3);
        }
        let fixed = EvalConfig {
            fixed_bandwidth: Some(0.3),
            trials: 5,
            ..Default::default()
        };
        assert!(sample_hyperparams(&fixed, dbar, 1, 1)
            .iter()
            .all(|h| (h.bandwidth - 0.75).abs() < 1e-12));
    }

    #[test]
    fn single_trial_returns_its_sample() {
        let p = small_ba();
        let cfg = EvalConfig {
            trials: 1,
            ..Default::default()
        };
        let got = random_search(&p, &[0, 1, 2], Method::Gpr, &cfg, 99).unwrap();
        assert_eq!(got, sample_hyperparams(&cfg, 1.0, 1, 99)[0]);
    }

    #[test]
    fn identity_folds_equal_step_distances() {
        let p = small_ba();
        let r = loo_cv(&p, Method::Identity, &EvalConfig::default()).unwrap();
        assert_eq!(r.fold_rmse.len(), 4);
        let traj = p.trajectory_points();
        for (j, &got) in r.fold_rmse.iter().enumerate() {
            let train: Vec<usize> = (0..4).filter(|&i| i != j).flat_map(|i| traj[i].clone()).collect();
            let mean = p.distances.off_diagonal_mean(&train);
            let t = &traj[j];
            let ms: f64 = t
                .windows(2)
                .map(|w| (p.distances.get(w[0], w[1]) / mean).powi(2))
                .sum::<f64>()
                / (t.len() - 1) as f64;
            assert!((got - ms.sqrt()).abs() < 1e-12);
        }
        assert!(r.params.iter().all(Option::is_none));
    }

    #[test]
    fn two_trajectories_degenerate_search() {
        let d = generate_ba_dataset(
            &BaParams {
                m0: 3,
                k: 2,
                m: 8,
                seed: 1,
            },
            2,
        )
        .unwrap();
        let p = Problem::from_histograms(&d).unwrap();
        let cfg = EvalConfig {
            trials: 3,
            ..Default::default()
        };
        for m in Method::ALL {
            let r = loo_cv(&p, m, &cfg).unwrap();
            assert_eq!(r.fold_rmse.len(), 2);
            assert!(r.fold_rmse.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn nested_search_never_reads_the_held_out_trajectory() {
        let clean = small_ba();
        let mut poisoned = clean.clone();
        let held: Vec<usize> = clean.trajectory_points()[3].clone();
        let n = clean.n_points();
        for &h in &held {
            for j in 0..n {
                poisoned.distances.data[(h, j)] = f64::NAN;
                poisoned.distances.data[(j, h)] = f64::NAN;
            }
        }
        let cfg = EvalConfig {
            trials: 4,
            ..Default::default()
        };
        for m in [Method::Kr, Method::Gpr, Method::Rbcm] {
            let a = random_search(&clean, &[0, 1, 2], m, &cfg, 5).unwrap();
            let b = random_search(&poisoned, &[0, 1, 2], m, &cfg, 5).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let p = small_ba();
        let serial = EvalConfig {
            trials: 3,
            seed: 8,
            ..Default::default()
        };
        let parallel = EvalConfig {
            jobs: 3,
            ..serial.clone()
        };
        for m in [Method::Gpr, Method::Rbcm] {
            let a = loo_cv(&p, m, &serial).unwrap();
            let b = loo_cv(&p, m, &parallel).unwrap();
            assert_eq!(a.fold_rmse, b.fold_rmse);
            assert_eq!(a.params, b.params);
        }
    }

    #[test]
    fn correction_check_agrees_with_the_spectrum() {
        let psd = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.2, 0.5, 1.0, 0.5, 0.2, 0.5, 1.0]);
        assert!(!needs_correction(&psd).unwrap());
        let indefinite = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, 0.0, 0.9, 1.0, 0.9, 0.0, 0.9, 1.0]);
        assert!(needs_correction(&indefinite).unwrap());
        // singular but PSD: Cholesky of the shifted matrix succeeds
        assert!(!needs_correction(&DMatrix::from_element(3, 3, 1.0)).unwrap());
    }

    #[test]
    fn kept_predictions_are_affine() {
        let p = small_ba();
        let cfg = EvalConfig {
            trials: 2,
            keep_predictions: true,
            ..Default::default()
        };
        for m in Method::ALL {
            let r = loo_cv(&p, m, &cfg).unwrap();
            assert_eq!(r.details.len(), 4);
            for d in &r.details {
                assert!(!d.corrected);
                for pred in &d.predictions {
                    assert!(pred.is_affine(), "{m}: {}", pred.coefficient_sum());
                }
            }
        }
    }
}
