use graphpred::eval::{
    loo_cv, pairwise_wilcoxon, report_table, wilcoxon_signed_rank, CorrectionMode, EvalConfig, Method, Problem,
};
use graphpred::generators::{generate_ba_dataset, BaParams};
use graphpred::repr::{Role, SquareMatrix};
use proptest::prelude::*;

fn euclidean_problem(points: &[Vec<f64>], lengths: Vec<usize>) -> Problem {
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
                .collect()
        })
        .collect();
    let ids = (0..lengths.len()).map(|i| format!("t{i}")).collect();
    Problem::new(
        SquareMatrix::from_rows(Role::Dissimilarity, &rows).unwrap(),
        lengths,
        ids,
    )
    .unwrap()
}

fn explicit_fold_rmse(points: &[Vec<f64>], detail: &graphpred::eval::FoldDetail) -> f64 {
    let mut sq = 0.0;
    for (t, alpha) in detail.predictions.iter().enumerate() {
        let mut v = vec![0.0; points[0].len()];
        let sources = detail.train_points.iter().zip(&alpha.train_coefficients);
        for (&pt, &a) in sources.chain([(&detail.test_points[t], &alpha.test_coefficient)]) {
            for (vi, pi) in v.iter_mut().zip(&points[pt]) {
                *vi += a * pi;
            }
        }
        let target = &points[detail.test_points[t + 1]];
        sq += v.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    (sq / detail.predictions.len() as f64).sqrt() / detail.mean_distance
}

#[test]
fn ba_pipeline_runs_every_method() {
    let d = generate_ba_dataset(
        &BaParams {
            m0: 2,
            k: 1,
            m: 12,
            seed: 4,
        },
        6,
    )
    .unwrap();
    let problem = Problem::from_histograms(&d).unwrap();
    let cfg = EvalConfig {
        trials: 3,
        seed: 2,
        ..EvalConfig::default()
    };
    let results: Vec<_> = Method::ALL
        .iter()
        .map(|&m| loo_cv(&problem, m, &cfg).unwrap())
        .collect();
    for r in &results {
        assert_eq!(r.fold_rmse.len(), 6);
        assert!(r.fold_rmse.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert_eq!(r.params.iter().all(|p| p.is_some()), r.method.is_tuned());
    }
    let table = report_table(&results);
    assert_eq!(table.rows.iter().filter(|r| r.best).count(), 1);
    assert_eq!(pairwise_wilcoxon(&results).unwrap().len(), 10);

    let again: Vec<_> = Method::ALL
        .iter()
        .map(|&m| loo_cv(&problem, m, &cfg).unwrap())
        .collect();
    for (a, b) in results.iter().zip(&again) {
        assert_eq!(a.fold_rmse, b.fold_rmse);
        assert_eq!(a.params, b.params);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn euclidean_predictions_are_affine_and_latent_error_is_exact(
        coords in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 10),
        seed in 0u64..1000,
    ) {
        let problem = euclidean_problem(&coords, vec![4, 3, 3]);
        let cfg = EvalConfig {
            trials: 2,
            seed,
            correction: CorrectionMode::Never,
            keep_predictions: true,
            ..EvalConfig::default()
        };
        for m in Method::ALL {
            let r = loo_cv(&problem, m, &cfg).unwrap();
            for (fold, detail) in r.details.iter().enumerate() {
                for p in &detail.predictions {
                    prop_assert!(p.is_affine(), "{m}: sum {}", p.coefficient_sum());
                }
                let explicit = explicit_fold_rmse(&coords, detail);
                prop_assert!((explicit - r.fold_rmse[fold]).abs() <= 1e-6 * (1.0 + explicit), "{m}: {explicit} vs {}", r.fold_rmse[fold]);
            }
        }
    }

    #[test]
    fn wilcoxon_p_is_a_probability_and_order_free(
        pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..25),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let x = wilcoxon_signed_rank(&a, &b).unwrap();
        let y = wilcoxon_signed_rank(&b, &a).unwrap();
        prop_assert!(x.p_value > 0.0 && x.p_value <= 1.0);
        prop_assert!((x.p_value - y.p_value).abs() < 1e-12);
        prop_assert!((x.w_plus + x.w_minus - (x.n * (x.n + 1)) as f64 / 2.0).abs() < 1e-9);
    }
}
