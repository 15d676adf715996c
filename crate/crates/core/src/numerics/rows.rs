use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Rectangular row-compressed matrix for sparse feature rows.
///
/// Column indices are strictly increasing within a row and no stored value
/// is zero, so products visit terms in the same order as the zero-skipping
/// dense kernels and give bit-identical results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseRows {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRows {
    pub fn from_dense(x: &DenseMatrix) -> Self {
        Self::from_dense_map(x, |v| v)
    }

    /// Keeps `f(v)` for every nonzero `v`, visiting entries row by row;
    /// zeros are skipped without calling `f`, and zero results are dropped.
    pub fn from_dense_map(x: &DenseMatrix, mut f: impl FnMut(f64) -> f64) -> Self {
        let mut row_offsets = Vec::with_capacity(x.rows() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for row in x.row_iter() {
            for (c, &v) in row.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let mapped = f(v);
                if mapped != 0.0 {
                    col_indices.push(c);
                    values.push(mapped);
                }
            }
            row_offsets.push(col_indices.len());
        }
        SparseRows {
            rows: x.rows(),
            cols: x.cols(),
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Keeps `f(v)` for every stored value in row-major order, dropping
    /// zero results.
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let mut row_offsets = Vec::with_capacity(self.rows + 1);
        let mut col_indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        row_offsets.push(0);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let mapped = f(v);
                if mapped != 0.0 {
                    col_indices.push(c);
                    values.push(mapped);
                }
            }
            row_offsets.push(col_indices.len());
        }
        SparseRows {
            rows: self.rows,
            cols: self.cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out.set(r, c, v);
            }
        }
        out
    }

    /// `self · w`.
    pub fn matmul(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != w.rows() {
            return Err(Error::shape(
                "sparse_rows_matmul",
                format!("{}x{} times {}x{}", self.rows, self.cols, w.rows(), w.cols()),
            ));
        }
        let n = w.cols();
        let mut out = DenseMatrix::zeros(self.rows, n);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let o_row = out.row_mut(r);
            for (&c, &a) in cols.iter().zip(vals) {
                for (o, &b) in o_row.iter_mut().zip(w.row(c)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · d`.
    pub fn transpose_matmul(&self, d: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != d.rows() {
            return Err(Error::shape(
                "sparse_rows_transpose_matmul",
                format!("({}x{})ᵀ times {}x{}", self.rows, self.cols, d.rows(), d.cols()),
            ));
        }
        let n = d.cols();
        let mut out = DenseMatrix::zeros(self.cols, n);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let d_row = d.row(r);
            for (&c, &a) in cols.iter().zip(vals) {
                for (o, &b) in out.row_mut(c).iter_mut().zip(d_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }
}
