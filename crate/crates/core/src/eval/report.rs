use std::collections::BTreeMap;
use std::fmt::Write;

use super::cv::FoldDetail;
use super::stats::{wilcoxon_signed_rank, WilcoxonResult};
use super::{HyperParams, Method};
use crate::error::{Error, Result};

/// Per-fold outcome of cross-validating one method.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub method: Method,
    /// Id of the held-out trajectory of each fold.
    pub fold_ids: Vec<String>,
    pub fold_rmse: Vec<f64>,
    /// Prediction time per transition, in milliseconds.
    pub runtime_ms: Vec<f64>,
    /// Selected hyperparameters (normalized units) for tuned methods.
    pub params: Vec<Option<HyperParams>>,
    /// Squared errors below −1e-9 that were clamped to 0.
    pub negative_terms: usize,
    pub metadata: BTreeMap<String, String>,
    /// Filled when predictions were kept.
    pub details: Vec<FoldDetail>,
}

impl ExperimentResult {
    pub fn mean_rmse(&self) -> f64 {
        mean(&self.fold_rmse)
    }

    /// Sample standard deviation of fold RMSEs (0 for a single fold).
    pub fn std_rmse(&self) -> f64 {
        sample_std(&self.fold_rmse)
    }

    pub fn mean_runtime_ms(&self) -> f64 {
        mean(&self.runtime_ms)
    }

    pub fn std_runtime_ms(&self) -> f64 {
        sample_std(&self.runtime_ms)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    pub runtime_ms: f64,
    pub std_runtime_ms: f64,
    /// First method with the lowest mean RMSE.
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
    /// Other methods whose mean RMSE equals the best within 1e-12.
    pub tied_with_best: Vec<Method>,
}

impl SummaryTable {
    pub fn tied_best(&self) -> bool {
        !self.tied_with_best.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:<10} {:>10} {:>10} {:>14} {:>10}\n",
            "method", "rmse", "std", "ms/transition", "std"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<10} {:>10.5} {:>10.5} {:>14.4} {:>10.4}{}",
                r.method.name(),
                r.mean_rmse,
                r.std_rmse,
                r.runtime_ms,
                r.std_runtime_ms,
                if r.best { " *" } else { "" }
            );
        }
        if self.tied_best() {
            let names: Vec<&str> = self.tied_with_best.iter().map(|m| m.name()).collect();
            let _ = writeln!(s, "* tied for lowest RMSE with {}", names.join(", "));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,mean_rmse,std_rmse,runtime_ms,std_runtime_ms,best\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.method.name(),
                r.mean_rmse,
                r.std_rmse,
                r.runtime_ms,
                r.std_runtime_ms,
                r.best
            );
        }
        s
    }
}

/// Mean ± std RMSE and runtime per method. The first method with the lowest RMSE is
/// flagged and any others equal to it are listed as ties.
pub fn report_table(results: &[ExperimentResult]) -> SummaryTable {
    let best = results.iter().map(|r| r.mean_rmse()).fold(f64::INFINITY, f64::min);
    let at_best: Vec<usize> = (0..results.len())
        .filter(|&i| (results[i].mean_rmse() - best).abs() <= 1e-12)
        .collect();
    SummaryTable {
        rows: results
            .iter()
            .enumerate()
            .map(|(i, r)| SummaryRow {
                method: r.method,
                mean_rmse: r.mean_rmse(),
                std_rmse: r.std_rmse(),
                runtime_ms: r.mean_runtime_ms(),
                std_runtime_ms: r.std_runtime_ms(),
                best: at_best.first() == Some(&i),
            })
            .collect(),
        tied_with_best: at_best.iter().skip(1).map(|&i| results[i].method).collect(),
    }
}

/// One row per method and fold.
pub fn results_csv(results: &[ExperimentResult]) -> String {
    let mut s = String::from("method,fold,rmse,runtime_ms,psi,sigma_noise\n");
    for r in results {
        for (j, id) in r.fold_ids.iter().enumerate() {
            let (psi, noise) = match r.params[j] {
                Some(hp) => (hp.bandwidth.to_string(), hp.noise_std.to_string()),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{psi},{noise}",
                r.method.name(),
                id,
                r.fold_rmse[j],
                r.runtime_ms[j]
            );
        }
    }
    s
}

/// Signed-rank tests of fold RMSEs for every unordered pair of methods.
pub fn pairwise_wilcoxon(results: &[ExperimentResult]) -> Result<Vec<(Method, Method, WilcoxonResult)>> {
    let mut out = Vec::new();
    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            if a.fold_ids != b.fold_ids {
                return Err(Error::arg(format!(
                    "{} and {} were evaluated on different folds",
                    a.method, b.method
                )));
            }
            out.push((a.method, b.method, wilcoxon_signed_rank(&a.fold_rmse, &b.fold_rmse)?));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(method: Method, rmse: Vec<f64>) -> ExperimentResult {
        let n = rmse.len();
        ExperimentResult {
            method,
            fold_ids: (0..n).map(|i| format!("t{i}")).collect(),
            fold_rmse: rmse,
            runtime_ms: vec![0.5; n],
            params: vec![None; n],
            negative_terms: 0,
            metadata: BTreeMap::new(),
            details: vec![],
        }
    }

    #[test]
    fn flags_lowest_and_ties() {
        let rs = [
            result(Method::Identity, vec![0.3, 0.5]),
            result(Method::Gpr, vec![0.1, 0.3]),
            result(Method::Rbcm, vec![0.3, 0.1]),
        ];
        let t = report_table(&rs);
        assert_eq!(
            t.rows.iter().map(|r| r.best).collect::<Vec<_>>(),
            vec![false, true, false]
        );
        assert_eq!(t.tied_with_best, vec![Method::Rbcm]);
        assert!(t.to_text().contains("tied for lowest RMSE with rbcm"));
        assert!((t.rows[0].mean_rmse - 0.4).abs() < 1e-15);
        assert!((t.rows[0].std_rmse - 0.02f64.sqrt()).abs() < 1e-15);
        assert_eq!(t.to_csv().lines().count(), 4);
    }

    #[test]
    fn single_method_gives_one_flagged_row() {
        let t = report_table(&[result(Method::OneNn, vec![0.2, 0.4])]);
        assert_eq!(t.rows.len(), 1);
        assert!(t.rows[0].best);
        assert!(!t.tied_best());
        assert_eq!(t.rows[0].std_runtime_ms, 0.0);
        assert_eq!(t.to_text().lines().count(), 2);
    }

    #[test]
    fn csv_has_one_row_per_fold() {
        let mut r = result(Method::Kr, vec![0.1, 0.2, 0.3]);
        r.params[1] = Some(HyperParams {
            bandwidth: 0.5,
            noise_std: 0.01,
            prior_std: 1.0,
            clusters: 1,
        });
        let csv = results_csv(&[r]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "method,fold,rmse,runtime_ms,psi,sigma_noise");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "kr,t1,0.2,0.5,0.5,0.01");
        assert!(lines[1].ends_with(",,"));
    }

    #[test]
    fn pairwise_requires_matching_folds() {
        let a = result(Method::Identity, vec![0.3, 0.5, 0.4]);
        let b = result(Method::OneNn, vec![0.2, 0.4, 0.1]);
        let c = result(Method::Kr, vec![0.2, 0.4]);
        assert_eq!(pairwise_wilcoxon(&[a.clone(), b]).unwrap().len(), 1);
        assert!(pairwise_wilcoxon(&[a, c]).is_err());
    }
}
