use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::matrix::{symmetrize, Role, SquareMatrix};
use crate::error::{Error, Result};
use crate::graph::LabeledSequence;

/// Costs for global alignment with affine gaps. A maximal gap of length `g`
/// costs `gap_open + g * gap_extend`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentCosts {
    /// Substitution cost for unequal labels absent from `table`.
    pub mismatch: f64,
    /// Label-pair overrides, looked up in both orders.
    pub table: BTreeMap<(String, String), f64>,
    pub gap_open: f64,
    pub gap_extend: f64,
}

impl Default for AlignmentCosts {
    fn default() -> Self {
        AlignmentCosts {
            mismatch: 1.0,
            table: BTreeMap::new(),
            gap_open: 0.5,
            gap_extend: 0.5,
        }
    }
}

impl AlignmentCosts {
    pub fn substitution(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 0.0;
        }
        self.table
            .get(&(a.to_string(), b.to_string()))
            .or_else(|| self.table.get(&(b.to_string(), a.to_string())))
            .copied()
            .unwrap_or(self.mismatch)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.mismatch, self.gap_open, self.gap_extend]
            .into_iter()
            .chain(self.table.values().copied());
        for c in all {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::arg(format!("alignment costs must be finite and >= 0, got {c}")));
            }
        }
        if self.table.iter().any(|((a, b), &c)| a == b && c != 0.0) {
            return Err(Error::arg("substitution of a label with itself must cost 0"));
        }
        Ok(())
    }
}

/// Minimal global alignment cost under affine gaps (Gotoh's three-state
/// recurrence).
pub fn affine_alignment_distance(a: &LabeledSequence, b: &LabeledSequence, c: &AlignmentCosts) -> f64 {
    let (x, y) = (&a.tokens, &b.tokens);
    let (n, m) = (x.len(), y.len());
    let inf = f64::INFINITY;
    let open = c.gap_open + c.gap_extend;
    let ext = c.gap_extend;
    // diag: last column pairs two tokens; up: last column consumes x only;
    // left: last column consumes y only.
    let mut diag = vec![vec![inf; m + 1]; n + 1];
    let mut up = vec![vec![inf; m + 1]; n + 1];
    let mut left = vec![vec![inf; m + 1]; n + 1];
    diag[0][0] = 0.0;
    for i in 1..=n {
        up[i][0] = c.gap_open + i as f64 * ext;
    }
    for j in 1..=m {
        left[0][j] = c.gap_open + j as f64 * ext;
    }
    for i in 1..=n {
        for j in 1..=m {
            let best_prev = diag[i - 1][j - 1].min(up[i - 1][j - 1]).min(left[i - 1][j - 1]);
            diag[i][j] = best_prev + c.substitution(&x[i - 1], &y[j - 1]);
            up[i][j] = (diag[i - 1][j] + open)
                .min(up[i - 1][j] + ext)
                .min(left[i - 1][j] + open);
            left[i][j] = (diag[i][j - 1] + open)
                .min(left[i][j - 1] + ext)
                .min(up[i][j - 1] + open);
        }
    }
    diag[n][m].min(up[n][m]).min(left[n][m])
}

/// Pairwise alignment distances, symmetrized with a zero diagonal.
pub fn alignment_distance_matrix(seqs: &[LabeledSequence], c: &AlignmentCosts) -> Result<SquareMatrix> {
    c.validate()?;
    let n = seqs.len();
    let raw = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            affine_alignment_distance(&seqs[i], &seqs[j], c)
        }
    });
    Ok(symmetrize(&SquareMatrix::new(Role::Dissimilarity, raw)?))
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(s: &str) -> LabeledSequence {
        LabeledSequence::new("s", s.chars().map(|c| c.to_string()))
    }

    #[test]
    fn examples() {
        let c = AlignmentCosts::default();
        assert_eq!(affine_alignment_distance(&seq("abca"), &seq("abca"), &c), 0.0);
        let c2 = AlignmentCosts {
            gap_open: 1.0,
            gap_extend: 0.5,
            ..Default::default()
        };
        assert_eq!(affine_alignment_distance(&seq(""), &seq("abc"), &c2), 2.5);
        assert_eq!(oracle::exhaustive(&[], &seq("abc").tokens, &c2), 2.5);
        assert_eq!(affine_alignment_distance(&seq("ab"), &seq("ac"), &c), 1.0);
        assert_eq!(oracle::exhaustive(&seq("ab").tokens, &seq("ac").tokens, &c), 1.0);
        assert_eq!(affine_alignment_distance(&seq(""), &seq(""), &c), 0.0);
    }

    #[test]
    fn one_long_gap_beats_two_short_ones() {
        let c = AlignmentCosts {
            gap_open: 3.0,
            gap_extend: 0.1,
            mismatch: 10.0,
            ..Default::default()
        };
        // "abxyc" vs "abc": a single gap of two costs 3.2
        let d = affine_alignment_distance(&seq("abxyc"), &seq("abc"), &c);
        assert!((d - 3.2).abs() < 1e-12);
    }

    #[test]
    fn table_overrides_mismatch() {
        let mut c = AlignmentCosts::default();
        c.table.insert(("a".into(), "b".into()), 0.25);
        assert_eq!(c.substitution("b", "a"), 0.25);
        assert_eq!(affine_alignment_distance(&seq("a"), &seq("b"), &c), 0.25);
        c.table.insert(("a".into(), "a".into()), 1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn distance_matrix_is_symmetric() {
        let seqs = vec![seq("abc"), seq("ab"), seq("cab")];
        let d = alignment_distance_matrix(&seqs, &AlignmentCosts::default()).unwrap();
        assert!(d.check(0.0).is_ok());
        assert_eq!(d.get(0, 1), 1.0);
    }

    fn label_seq() -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec(
            prop_oneof![Just("a"), Just("b"), Just("c")].prop_map(String::from),
            0..=4,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn matches_exhaustive_enumeration(
            a in label_seq(),
            b in label_seq(),
            open in 0.0f64..2.0,
            ext in 0.0f64..1.5,
            mismatch in 0.0f64..3.0,
        ) {
            let c = AlignmentCosts { mismatch, gap_open: open, gap_extend: ext, ..Default::default() };
            let got = affine_alignment_distance(&LabeledSequence::new("a", a.clone()), &LabeledSequence::new("b", b.clone()), &c);
            let want = oracle::exhaustive(&a, &b, &c);
            prop_assert!((got - want).abs() < 1e-12, "{} vs {}", got, want);
            let back = affine_alignment_distance(&LabeledSequence::new("b", b), &LabeledSequence::new("a", a), &c);
            prop_assert!((got - back).abs() < 1e-12);
        }
    }
}
