use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Dissimilarity,
    SquaredDissimilarity,
    Similarity,
    Kernel,
}

/// A symmetric real matrix tagged with what its entries mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    pub role: Role,
    pub data: DMatrix<f64>,
}

impl SquareMatrix {
    pub fn new(role: Role, data: DMatrix<f64>) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::arg(format!(
                "matrix is {}x{}, expected square",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(SquareMatrix { role, data })
    }

    pub fn from_rows(role: Role, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::arg("ragged or non-square row list"));
        }
        Self::new(role, DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Entry-wise square, for dissimilarities.
    pub fn squared(&self) -> SquareMatrix {
        SquareMatrix {
            role: Role::SquaredDissimilarity,
            data: self.data.map(|d| d * d),
        }
    }

    /// Principal submatrix on `idx` (rows and columns in the given order).
    pub fn select(&self, idx: &[usize]) -> SquareMatrix {
        SquareMatrix {
            role: self.role,
            data: DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.data[(idx[i], idx[j])]),
        }
    }

    /// Mean of off-diagonal entries among `idx`.
    pub fn off_diagonal_mean(&self, idx: &[usize]) -> f64 {
        let n = idx.len();
        if n < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                sum += self.data[(i, j)] + self.data[(j, i)];
            }
        }
        sum / (n * (n - 1)) as f64
    }

    pub fn scaled(&self, factor: f64) -> SquareMatrix {
        SquareMatrix {
            role: self.role,
            data: &self.data * factor,
        }
    }

    /// Checks the invariants of the role tag. `tol` bounds asymmetry and
    /// negativity; for kernels it is relative to the largest |eigenvalue|.
    pub fn check(&self, tol: f64) -> Result<()> {
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (self.data[(i, j)], self.data[(j, i)]);
                if !a.is_finite() {
                    return Err(Error::arg(format!("non-finite entry at ({i}, {j})")));
                }
                if (a - b).abs() > tol * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::arg(format!("asymmetric at ({i}, {j}): {a} vs {b}")));
                }
            }
        }
        match self.role {
            Role::Dissimilarity | Role::SquaredDissimilarity => {
                for i in 0..n {
                    if self.data[(i, i)] != 0.0 {
                        return Err(Error::arg(format!("nonzero diagonal at {i}")));
                    }
                }
                if self.data.iter().any(|&v| v < 0.0) {
                    return Err(Error::arg("negative dissimilarity"));
                }
            }
            Role::Kernel => {
                let (min, max_abs) = spectrum_bounds(self);
                if min < -tol * max_abs {
                    return Err(Error::arg(format!("kernel not PSD: min eigenvalue {min:e}")));
                }
            }
            Role::Similarity => {}
        }
        Ok(())
    }
}

/// ½(D + Dᵀ) with a zero diagonal.
pub fn symmetrize(m: &SquareMatrix) -> SquareMatrix {
    let mut data = (&m.data + m.data.transpose()) * 0.5;
    data.fill_diagonal(0.0);
    SquareMatrix {
        role: Role::Dissimilarity,
        data,
    }
}

/// Divides by the mean off-diagonal entry and returns that mean.
pub fn normalize_distances(m: &SquareMatrix) -> Result<(SquareMatrix, f64)> {
    let all: Vec<usize> = (0..m.n()).collect();
    let mean = m.off_diagonal_mean(&all);
    if !(mean > 0.0) {
        return Err(Error::Degenerate(
            "all off-diagonal distances are zero; cannot normalize".into(),
        ));
    }
    Ok((m.scaled(1.0 / mean), mean))
}

/// exp(−½ (d/ψ)²).
pub fn rbf_similarity(d: f64, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::arg(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let r = d / bandwidth;
    Ok((-0.5 * r * r).exp())
}

/// Entry-wise RBF transform of a dissimilarity matrix.
pub fn rbf_matrix(d: &SquareMatrix, bandwidth: f64) -> Result<SquareMatrix> {
    rbf_similarity(0.0, bandwidth)?;
    let scale = -0.5 / (bandwidth * bandwidth);
    Ok(SquareMatrix {
        role: Role::Similarity,
        data: d.data.map(|v| (scale * v * v).exp()),
    })
}

/// (smallest eigenvalue, largest |eigenvalue|) of the symmetric part.
pub fn spectrum_bounds(m: &SquareMatrix) -> (f64, f64) {
    if m.n() == 0 {
        return (0.0, 0.0);
    }
    let sym = (&m.data + m.data.transpose()) * 0.5;
    let ev = sym.symmetric_eigenvalues();
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs = ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
    (min, max_abs)
}

/// Clip eigenvalue correction: U max(Λ, 0) Uᵀ.
pub fn eigenvalue_correct_clip(s: &SquareMatrix) -> SquareMatrix {
    let sym = (&s.data + s.data.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let u = &eig.eigenvectors;
    let mut data = u * DMatrix::from_diagonal(&clipped) * u.transpose();
    // Remove rounding asymmetry from the reconstruction.
    data = (&data + data.transpose()) * 0.5;
    SquareMatrix {
        role: Role::Kernel,
        data,
    }
}

/// Row-major comma-separated grid, no header. Non-finite values are refused.
pub fn write_matrix_csv(m: &SquareMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.n() {
        for j in 0..m.n() {
            let v = m.data[(i, j)];
            if !v.is_finite() {
                return Err(Error::arg(format!("cannot persist non-finite entry at ({i}, {j})")));
            }
            if j > 0 {
                out.push(',');
            }
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_matrix_csv(path: impl AsRef<Path>, role: Role) -> Result<SquareMatrix> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(col, field)| {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: line_no + 1,
                    column: col + 1,
                    message: format!("not a number: {field:?}"),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Parse {
                        line: line_no + 1,
                        column: col + 1,
                        message: "non-finite value".into(),
                    })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    SquareMatrix::from_rows(role, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(role: Role, rows: &[&[f64]]) -> SquareMatrix {
        SquareMatrix::from_rows(role, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn symmetrize_examples() {
        let a = m(Role::Dissimilarity, &[&[0.0, 1.0], &[3.0, 0.0]]);
        assert_eq!(symmetrize(&a), m(Role::Dissimilarity, &[&[0.0, 2.0], &[2.0, 0.0]]));
        let b = m(Role::Dissimilarity, &[&[5.0, 1.0], &[1.0, 5.0]]);
        assert_eq!(symmetrize(&b), m(Role::Dissimilarity, &[&[0.0, 1.0], &[1.0, 0.0]]));
        let s = symmetrize(&a);
        assert_eq!(symmetrize(&s), s);
    }

    #[test]
    fn normalize_examples() {
        let (n, mean) = normalize_distances(&m(Role::Dissimilarity, &[&[0.0, 2.0], &[2.0, 0.0]])).unwrap();
        assert_eq!(mean, 2.0);
        assert_eq!(n, m(Role::Dissimilarity, &[&[0.0, 1.0], &[1.0, 0.0]]));

        let c = SquareMatrix::new(
            Role::Dissimilarity,
            DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 3.5 }),
        )
        .unwrap();
        let (n, mean) = normalize_distances(&c).unwrap();
        assert_eq!(mean, 3.5);
        assert!(n
            .data
            .iter()
            .enumerate()
            .all(|(k, &v)| v == if k % 5 == 0 { 0.0 } else { 1.0 }));

        let zero = SquareMatrix::new(Role::Dissimilarity, DMatrix::zeros(3, 3)).unwrap();
        assert!(matches!(normalize_distances(&zero), Err(Error::Degenerate(_))));
    }

    #[test]
    fn rbf_examples() {
        assert_eq!(rbf_similarity(0.0, 0.7).unwrap(), 1.0);
        assert_abs_diff_eq!(rbf_similarity(0.7, 0.7).unwrap(), (-0.5f64).exp(), epsilon = 1e-15);
        assert!(rbf_similarity(7.0, 0.7).unwrap() < 1e-21);
        assert!(rbf_similarity(1.0, 0.0).is_err());
        assert!(rbf_similarity(1.0, -1.0).is_err());
    }

    #[test]
    fn clip_examples() {
        let id = SquareMatrix::new(Role::Similarity, DMatrix::identity(3, 3)).unwrap();
        assert!((eigenvalue_correct_clip(&id).data - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);

        let swap = m(Role::Similarity, &[&[0.0, 1.0], &[1.0, 0.0]]);
        let k = eigenvalue_correct_clip(&swap);
        assert!((k.data - DMatrix::from_element(2, 2, 0.5)).amax() < 1e-12);

        let neg = m(Role::Similarity, &[&[1.0, -2.0], &[-2.0, 1.0]]);
        let k = eigenvalue_correct_clip(&neg);
        let want = DMatrix::from_row_slice(2, 2, &[1.5, -1.5, -1.5, 1.5]);
        assert!((k.data - want).amax() < 1e-12);
    }

    #[test]
    fn check_flags_bad_matrices() {
        assert!(m(Role::Dissimilarity, &[&[0.0, 1.0], &[2.0, 0.0]])
            .check(1e-12)
            .is_err());
        assert!(m(Role::Dissimilarity, &[&[1.0, 1.0], &[1.0, 0.0]])
            .check(1e-12)
            .is_err());
        assert!(m(Role::Kernel, &[&[1.0, -2.0], &[-2.0, 1.0]]).check(1e-8).is_err());
        assert!(m(Role::Kernel, &[&[1.0, 0.5], &[0.5, 1.0]]).check(1e-8).is_ok());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let a = m(Role::Dissimilarity, &[&[0.0, 0.1 + 0.2], &[1.0 / 3.0, 0.0]]);
        write_matrix_csv(&a, &p).unwrap();
        assert_eq!(read_matrix_csv(&p, Role::Dissimilarity).unwrap(), a);

        fs::write(&p, "0,1\n1,x\n").unwrap();
        assert!(matches!(
            read_matrix_csv(&p, Role::Dissimilarity),
            Err(Error::Parse { line: 2, column: 2, .. })
        ));
        fs::write(&p, "0,inf\ninf,0\n").unwrap();
        assert!(read_matrix_csv(&p, Role::Dissimilarity).is_err());

        let inf = m(Role::Dissimilarity, &[&[0.0, f64::INFINITY], &[f64::INFINITY, 0.0]]);
        assert!(write_matrix_csv(&inf, &p).is_err());
    }
}
