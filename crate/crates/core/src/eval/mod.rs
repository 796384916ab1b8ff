//! Leave-one-trajectory-out evaluation with nested random hyperparameter
//! search, plus significance testing and result tables.

mod cv;
mod problem;
mod report;
mod stats;

pub use cv::{loo_cv, predict_fold, random_search, sample_hyperparams, EvalConfig, FoldDetail};
pub use problem::{dataset_histograms, CorrectionMode, Problem};
pub use report::{pairwise_wilcoxon, report_table, results_csv, ExperimentResult, SummaryRow, SummaryTable};
pub use stats::{wilcoxon_signed_rank, WilcoxonResult};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Identity,
    OneNn,
    Kr,
    Gpr,
    Rbcm,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Identity, Method::OneNn, Method::Kr, Method::Gpr, Method::Rbcm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Identity => "identity",
            Method::OneNn => "1nn",
            Method::Kr => "kr",
            Method::Gpr => "gpr",
            Method::Rbcm => "rbcm",
        }
    }

    /// Whether the method has hyperparameters to search.
    pub fn is_tuned(self) -> bool {
        matches!(self, Method::Kr | Method::Gpr | Method::Rbcm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                let valid: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::arg(format!("unknown method {s:?}; valid methods: {}", valid.join(", ")))
            })
    }
}

/// Hyperparameters, in units of normalized distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub bandwidth: f64,
    pub noise_std: f64,
    pub prior_std: f64,
    pub clusters: usize,
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.noise_std > 0.0 && self.prior_std > 0.0) || self.clusters < 1 {
            return Err(Error::arg(format!("invalid hyperparameters {self:?}")));
        }
        Ok(())
    }
}
