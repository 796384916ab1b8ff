use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest sample size for which the null distribution is enumerated.
pub const EXACT_MAX_N: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    /// Pairs with a nonzero difference.
    pub n: usize,
    /// Rank sum of positive differences `a - b`.
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub exact: bool,
}

impl WilcoxonResult {
    /// True when every paired difference was zero and the test carries no information.
    pub fn all_zero(&self) -> bool {
        self.n == 0
    }
}

/// Two-sided Wilcoxon signed-rank test of paired samples. Zero differences
/// are dropped and tied magnitudes get average ranks. Up to 15 pairs the
/// p-value is exact; beyond that a tie-corrected normal approximation with
/// continuity correction is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::arg(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::arg("paired samples must be finite"));
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            n,
            w_plus: 0.0,
            w_minus: 0.0,
            p_value: 1.0,
            exact: true,
        });
    }
    let (ranks, tie_sizes) = average_ranks(&diffs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    let (p, exact) = if n <= EXACT_MAX_N {
        (exact_p(&ranks, w_plus), true)
    } else {
        let mean = total / 2.0;
        let ties: f64 = tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum();
        let var = (n * (n + 1) * (2 * n + 1)) as f64 / 24.0 - ties / 48.0;
        let p = if var <= 0.0 {
            1.0
        } else {
            let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
            2.0 * Normal::standard().sf(z)
        };
        (p, false)
    };
    Ok(WilcoxonResult {
        n,
        w_plus,
        w_minus,
        p_value: p.min(1.0),
        exact,
    })
}

/// Ranks of |d| with ties averaged, and the size of every tie group.
fn average_ranks(d: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()));
    let mut ranks = vec![0.0; d.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && d[order[end]].abs() == d[order[start]].abs() {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

fn exact_p(ranks: &[f64], observed: f64) -> f64 {
    let n = ranks.len();
    let eps = 1e-9;
    let (mut low, mut high) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        let w: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + eps {
            low += 1;
        }
        if w >= observed - eps {
            high += 1;
        }
    }
    let total = (1u64 << n) as f64;
    2.0 * (low.min(high) as f64 / total)
}
