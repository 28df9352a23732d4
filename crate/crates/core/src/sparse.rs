//! Compressed sparse matrix with both column-wise and row-wise storage.
//!
//! LP solvers need `A x` and `Aᵀ y` about equally often, so the matrix keeps
//! a CSC copy and a CSR copy of the same entries. Both are built once and the
//! matrix is immutable afterwards; scaling produces a new matrix.

use std::fmt;

#[derive(Clone, PartialEq)]
pub struct CsMatrix {
    nrows: usize,
    ncols: usize,
    // CSC
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
    // CSR
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    row_val: Vec<f64>,
}

impl fmt::Debug for CsMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CsMatrix")
            .field("nrows", &self.nrows)
            .field("ncols", &self.ncols)
            .field("nnz", &self.nnz())
            .finish()
    }
}

impl CsMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate positions
    /// are summed; explicit zeros (including sums that cancel) are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(i, j, _) in &sorted {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) outside {nrows}x{ncols}");
        }
        sorted.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));

        let mut col_ptr = vec![0usize; ncols + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut col_val = Vec::with_capacity(sorted.len());
        let mut k = 0;
        while k < sorted.len() {
            let (i, j, mut v) = sorted[k];
            k += 1;
            while k < sorted.len() && sorted[k].0 == i && sorted[k].1 == j {
                v += sorted[k].2;
                k += 1;
            }
            if v != 0.0 {
                col_idx.push(i);
                col_val.push(v);
                col_ptr[j + 1] += 1;
            }
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Self::from_csc(nrows, ncols, col_ptr, col_idx, col_val)
    }

    /// Builds from a dense row-major slice of rows.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged dense matrix");
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &trip)
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_csc(nrows, ncols, vec![0; ncols + 1], Vec::new(), Vec::new())
    }

    fn from_csc(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        col_val: Vec<f64>,
    ) -> Self {
        let nnz = col_idx.len();
        let mut row_ptr = vec![0usize; nrows + 1];
        for &i in &col_idx {
            row_ptr[i + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut next = row_ptr.clone();
        let mut row_idx = vec![0usize; nnz];
        let mut row_val = vec![0.0; nnz];
        for j in 0..ncols {
            for p in col_ptr[j]..col_ptr[j + 1] {
                let i = col_idx[p];
                let q = next[i];
                row_idx[q] = j;
                row_val[q] = col_val[p];
                next[i] += 1;
            }
        }
        CsMatrix {
            nrows,
            ncols,
            col_ptr,
            col_idx,
            col_val,
            row_ptr,
            row_idx,
            row_val,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Entries of column `j` as `(row, value)`, rows ascending.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.col_val[r].iter().copied())
    }

    /// Entries of row `i` as `(col, value)`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.row_val[r].iter().copied())
    }

    pub fn col_nnz(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// All entries as triplets in column-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.ncols)
            .flat_map(|j| self.col(j).map(move |(i, v)| (i, j, v)))
            .collect()
    }

    /// `out = A x`
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(out.len(), self.nrows);
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.row_val[p] * x[self.row_idx[p]];
            }
            *o = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `out = Aᵀ y`
    pub fn tmul_vec_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.nrows);
        assert_eq!(out.len(), self.ncols);
        for (j, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                s += self.col_val[p] * y[self.col_idx[p]];
            }
            *o = s;
        }
    }

    pub fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        self.tmul_vec_into(y, &mut out);
        out
    }

    /// Returns `diag(row) · A · diag(col)`.
    pub fn scaled(&self, row: &[f64], col: &[f64]) -> Self {
        assert_eq!(row.len(), self.nrows);
        assert_eq!(col.len(), self.ncols);
        let mut col_val = self.col_val.clone();
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                col_val[p] *= row[self.col_idx[p]] * col[j];
            }
        }
        Self::from_csc(
            self.nrows,
            self.ncols,
            self.col_ptr.clone(),
            self.col_idx.clone(),
            col_val,
        )
    }

    /// Max absolute entry per row.
    pub fn row_inf_norms(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).fold(0.0_f64, |m, (_, v)| m.max(v.abs())))
            .collect()
    }

    /// Max absolute entry per column.
    pub fn col_inf_norms(&self) -> Vec<f64> {
        (0..self.ncols)
            .map(|j| self.col(j).fold(0.0_f64, |m, (_, v)| m.max(v.abs())))
            .collect()
    }

    /// Max over rows of the absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Max over columns of the absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.ncols)
            .map(|j| self.col(j).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.col_val.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let m = CsMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0), (1, 1, -1.0)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.to_dense(), vec![vec![3.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn row_and_column_views_agree() {
        let d = vec![vec![1.0, 0.0, 2.0], vec![0.0, -3.0, 4.0]];
        let m = CsMatrix::from_dense(&d);
        let rows: Vec<Vec<(usize, f64)>> = (0..2).map(|i| m.row(i).collect()).collect();
        assert_eq!(rows[0], vec![(0, 1.0), (2, 2.0)]);
        assert_eq!(rows[1], vec![(1, -3.0), (2, 4.0)]);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![3.0, 1.0]);
        assert_eq!(m.tmul_vec(&[1.0, 2.0]), vec![1.0, -6.0, 10.0]);
        assert_eq!(m.norm_inf(), 7.0);
        assert_eq!(m.norm_one(), 6.0);
    }

    #[test]
    fn scaling_multiplies_entries() {
        let m = CsMatrix::from_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let s = m.scaled(&[2.0, 0.5], &[1.0, 10.0]);
        assert_eq!(s.to_dense(), vec![vec![2.0, 40.0], vec![1.5, 20.0]]);
        assert_eq!(s.row(1).collect::<Vec<_>>(), vec![(0, 1.5), (1, 20.0)]);
    }
}
