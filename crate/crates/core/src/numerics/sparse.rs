use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Square CSR matrix.
///
/// Invariants, enforced by every constructor:
/// * `row_offsets` has length `dim + 1` and is non-decreasing,
/// * column indices are in `[0, dim)` and strictly increasing within a row,
/// * no explicit zeros are stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    dim: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn empty(dim: usize) -> Self {
        SparseMatrix {
            dim,
            row_offsets: vec![0; dim + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        SparseMatrix {
            dim,
            row_offsets: (0..=dim).collect(),
            col_indices: (0..dim).collect(),
            values: vec![1.0; dim],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    /// Repeated coordinates are summed; entries that end up zero are dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::shape(
                "SparseMatrix::from_triplets",
                format!("entry ({r}, {c}) outside a {dim}x{dim} matrix"),
            ));
        }
        triplets.sort_by_key(|t| (t.0, t.1));

        let mut row_offsets = vec![0usize; dim + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut rows_of_entries = Vec::with_capacity(triplets.len());

        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                rows_of_entries.push(r);
                col_indices.push(c);
                values.push(v);
            }
        }
        for &r in &rows_of_entries {
            row_offsets[r + 1] += 1;
        }
        for i in 0..dim {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(SparseMatrix {
            dim,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Validating constructor from raw CSR arrays.
    pub fn from_csr(dim: usize, row_offsets: Vec<usize>, col_indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let m = SparseMatrix {
            dim,
            row_offsets,
            col_indices,
            values,
        };
        m.check_invariants()?;
        Ok(m)
    }

    pub fn from_dense(m: &DenseMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::shape(
                "SparseMatrix::from_dense",
                format!("{}x{} is not square", m.rows(), m.cols()),
            ));
        }
        let n = m.rows();
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for r in 0..n {
            for (c, &v) in m.row(r).iter().enumerate() {
                if v != 0.0 {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            dim: n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn check_invariants(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::shape("SparseMatrix", msg));
        if self.row_offsets.len() != self.dim + 1 {
            return bad(format!(
                "row_offsets has length {}, expected {}",
                self.row_offsets.len(),
                self.dim + 1
            ));
        }
        if self.row_offsets[0] != 0 || self.row_offsets[self.dim] != self.col_indices.len() {
            return bad("row_offsets do not span the entry arrays".into());
        }
        if self.col_indices.len() != self.values.len() {
            return bad("col_indices and values differ in length".into());
        }
        for r in 0..self.dim {
            let (start, end) = (self.row_offsets[r], self.row_offsets[r + 1]);
            if start > end {
                return bad(format!("row_offsets decrease at row {r}"));
            }
            let cols = &self.col_indices[start..end];
            if cols.iter().any(|&c| c >= self.dim) {
                return bad(format!("column index out of range in row {r}"));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("columns not strictly increasing in row {r}"));
            }
            if self.values[start..end].contains(&0.0) {
                return bad(format!("explicit zero stored in row {r}"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    /// Iterates stored entries as `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim).map(|r| self.row(r).1.iter().sum::<f64>()).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m.set(r, c, v);
        }
        m
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        SparseMatrix::from_triplets(self.dim, triplets).expect("transpose stays in range")
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.iter().all(|(r, c, v)| self.get(c, r) == v)
    }

    pub fn scale(&self, factor: f64) -> SparseMatrix {
        if factor == 0.0 {
            return SparseMatrix::empty(self.dim);
        }
        SparseMatrix {
            dim: self.dim,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// `P S Pᵀ` where node `i` moves to position `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<SparseMatrix> {
        if perm.len() != self.dim {
            return Err(Error::shape(
                "SparseMatrix::permute",
                format!("permutation of length {} for dim {}", perm.len(), self.dim),
            ));
        }
        let triplets = self.iter().map(|(r, c, v)| (perm[r], perm[c], v)).collect();
        SparseMatrix::from_triplets(self.dim, triplets)
    }

    /// `self · x`. Each output row is accumulated over the row's stored
    /// entries in column order.
    pub fn spmm(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if self.dim != x.rows() {
            return Err(Error::shape(
                "spmm",
                format!("{0}x{0} sparse times {1}x{2}", self.dim, x.rows(), x.cols()),
            ));
        }
        let mut out = DenseMatrix::zeros(self.dim, x.cols());
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let o = out.row_mut(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, &xv) in o.iter_mut().zip(x.row(c)) {
                    *o += v * xv;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · x` by scattering rows, without building the transpose.
    pub fn transpose_spmm(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if self.dim != x.rows() {
            return Err(Error::shape(
                "transpose_spmm",
                format!("({0}x{0})ᵀ sparse times {1}x{2}", self.dim, x.rows(), x.cols()),
            ));
        }
        let mut out = DenseMatrix::zeros(self.dim, x.cols());
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let xr = x.row(r);
                for (o, &xv) in out.row_mut(c).iter_mut().zip(xr) {
                    *o += v * xv;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_merged_sorted_and_zero_free() {
        let s = SparseMatrix::from_triplets(
            3,
            vec![(2, 0, 1.0), (0, 2, 1.0), (0, 1, 2.0), (0, 1, -2.0), (2, 0, 0.5)],
        )
        .unwrap();
        s.check_invariants().unwrap();
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.get(0, 2), 1.0);
        assert_eq!(s.get(2, 0), 1.5);
        assert_eq!(s.get(0, 1), 0.0);
    }

    #[test]
    fn from_csr_rejects_unsorted_columns() {
        let err = SparseMatrix::from_csr(2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]);
        assert!(err.is_err());
        let err = SparseMatrix::from_csr(2, vec![0, 1, 1], vec![0], vec![0.0]);
        assert!(err.is_err());
    }

    #[test]
    fn out_of_range_triplet_is_an_error() {
        assert!(SparseMatrix::from_triplets(2, vec![(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn transpose_spmm_matches_transpose_then_spmm() {
        let s = SparseMatrix::from_triplets(3, vec![(0, 1, 2.0), (2, 0, -1.0), (1, 1, 3.0)]).unwrap();
        let x = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        assert_eq!(s.transpose_spmm(&x).unwrap(), s.transpose().spmm(&x).unwrap());
    }

    #[test]
    fn permute_conjugates() {
        let s = SparseMatrix::from_triplets(3, vec![(0, 1, 2.0), (1, 0, 2.0), (1, 2, 5.0)]).unwrap();
        let p = s.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.get(2, 0), 2.0);
        assert_eq!(p.get(0, 1), 5.0);
    }
}
