//! Compressed-row sparse matrices and the sparse LU used by the solvers.

use std::io::{self, Write};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;
use thiserror::Error;

use crate::report::fmt_num;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols} but vector has length {len}")]
    DimensionMismatch { rows: usize, cols: usize, len: usize },
    #[error("sparsity patterns differ")]
    PatternMismatch,
    #[error("LU factorization failed: {0}")]
    Factorization(String),
    #[error("LU solve produced non-finite values (matrix numerically singular)")]
    Singular,
}

/// Square sparse matrix in compressed-row layout. Column indices are sorted
/// within each row; explicit zeros are kept so that matrices assembled on
/// the same grid share a pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; duplicate columns are
    /// summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows((0..n).map(|i| vec![(i, 1.0)]).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                rows: self.n,
                cols: self.n,
                len: x.len(),
            });
        }
        Ok((0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect())
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                rows[j].push((i, v));
            }
        }
        Self::from_rows(rows)
    }

    /// `alpha * self + beta * other`; both must share a pattern.
    pub fn lin_comb(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self, LinalgError> {
        if self.row_ptr != other.row_ptr || self.col_idx != other.col_idx {
            return Err(LinalgError::PatternMismatch);
        }
        Ok(Self {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        })
    }

    /// Smallest Gershgorin disc left edge: `min_i (a_ii − Σ_{j≠i} |a_ij|)`.
    pub fn gershgorin_min(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .map(|(j, v)| if i == j { v } else { -v.abs() })
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `MatrixMarket` coordinate format, 1-based indices.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(out, "{} {} {}", i + 1, j + 1, fmt_num(v))?;
            }
        }
        Ok(())
    }

    pub(crate) fn triplets(&self) -> Vec<Triplet<usize, usize, f64>> {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| Triplet::new(i, j, v)))
            .collect()
    }
}

/// Sparse LU with partial pivoting and a fill-reducing column ordering.
pub struct SparseLu {
    n: usize,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish()
    }
}

impl SparseLu {
    pub(crate) fn factor_triplets(n: usize, triplets: &[Triplet<usize, usize, f64>]) -> Result<Self, LinalgError> {
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, triplets)
            .map_err(|e| LinalgError::Factorization(format!("{e:?}")))?;
        let lu = m.sp_lu().map_err(|e| LinalgError::Factorization(format!("{e:?}")))?;
        Ok(Self { n, lu })
    }

    pub fn factor(m: &CsrMatrix) -> Result<Self, LinalgError> {
        Self::factor_triplets(m.n(), &m.triplets())
    }

    /// Factors `M − σI`, leaving masked rows untouched.
    pub fn factor_shifted(m: &CsrMatrix, sigma: f64, mask: &[bool]) -> Result<Self, LinalgError> {
        let mut t = m.triplets();
        for e in &mut t {
            if e.row == e.col && !mask[e.row] {
                e.val -= sigma;
            }
        }
        Self::factor_triplets(m.n(), &t)
    }

    /// Factors `M − σI` with row `pin` replaced by the unit row `e_pin`;
    /// nonsingular when `M − σI` has a one-dimensional kernel whose vectors
    /// do not vanish at `pin`, and likewise for its transpose.
    pub fn factor_pinned(m: &CsrMatrix, sigma: f64, mask: &[bool], pin: usize) -> Result<Self, LinalgError> {
        let mut t: Vec<_> = m.triplets().into_iter().filter(|e| e.row != pin).collect();
        for e in &mut t {
            if e.row == e.col && !mask[e.row] {
                e.val -= sigma;
            }
        }
        t.push(Triplet::new(pin, pin, 1.0));
        Self::factor_triplets(m.n(), &t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                rows: self.n,
                cols: self.n,
                len: b.len(),
            });
        }
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x: Col<f64> = self.lu.solve(rhs);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(LinalgError::Singular)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix {
        CsrMatrix::from_rows(vec![
            vec![(0, 4.0), (1, -1.0)],
            vec![(1, 4.0), (0, -2.0), (2, -1.0), (1, 0.5)],
            vec![(2, 3.0), (1, 1.0)],
        ])
    }

    #[test]
    fn builds_sorted_rows_and_merges_duplicates() {
        let m = sample();
        assert_eq!(m.get(1, 1), 4.5);
        assert_eq!(m.row(1).map(|e| e.0).collect::<Vec<_>>(), [0, 1, 2]);
        assert_eq!(m.get(0, 2), 0.0);
        assert_eq!(m.nnz(), 7);
        assert_eq!(m.transpose().get(0, 1), -2.0);
    }

    #[test]
    fn matvec_and_solve() {
        let m = sample();
        let x = [1.0, 2.0, 3.0];
        let b = m.matvec(&x).unwrap();
        assert_eq!(b, vec![2.0, 4.0, 11.0]);
        let lu = SparseLu::factor(&m).unwrap();
        let y = lu.solve(&b).unwrap();
        for (a, e) in y.iter().zip(x) {
            assert!((a - e).abs() < 1e-14);
        }
        assert!(m.matvec(&[1.0]).is_err());
    }

    #[test]
    fn shifted_and_pinned() {
        let m = sample();
        let mask = [false, true, false];
        let lu = SparseLu::factor_shifted(&m, 1.0, &mask).unwrap();
        // rows 0 and 2 shifted, row 1 kept
        let x = lu.solve(&[1.0, 4.0, 8.0]).unwrap();
        for (a, e) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - e).abs() < 1e-13);
        }
        // kernel of d − I is e_0; pinning row 0 leaves diag(1, 2)
        let d = CsrMatrix::from_rows(vec![vec![(0, 1.0), (1, 1.0)], vec![(1, 3.0)]]);
        let lu = SparseLu::factor_pinned(&d, 1.0, &[false, false], 0).unwrap();
        let x = lu.solve(&[0.0, 4.0]).unwrap();
        assert_eq!(x, vec![0.0, 2.0]);
    }

    #[test]
    fn gershgorin_and_norm() {
        let m = sample();
        assert_eq!(m.gershgorin_min(), 1.5);
        assert_eq!(m.norm_inf(), 7.5);
    }

    #[test]
    fn matrix_market() {
        let mut buf = Vec::new();
        CsrMatrix::identity(2).write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines[1], "2 2 2");
        assert_eq!(lines[2], "1 1 1.0000000000000000e0");
    }

    #[test]
    fn combination_requires_same_pattern() {
        let m = sample();
        let c = m.lin_comb(0.5, &m, 0.5).unwrap();
        assert_eq!(c, m);
        assert_eq!(m.lin_comb(1.0, &CsrMatrix::identity(3), 1.0), Err(LinalgError::PatternMismatch));
    }
}
