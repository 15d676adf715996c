//! Dense and sparse matrix primitives, activations, and initialization.
//!
//! Everything is `f64`. Summation orders are fixed so that repeated runs on
//! identical inputs are bit-identical.

mod dense;
mod rows;
mod sparse;

pub use dense::DenseMatrix;
pub use rows::SparseRows;
pub use sparse::SparseMatrix;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

/// Seeded generator used for every random draw in the crate.
pub type Rng64 = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn matmul_dense(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    a.matmul(b)
}

pub fn spmm(s: &SparseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    s.spmm(x)
}

/// Which entries of a ReLU input were strictly positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReluMask {
    rows: usize,
    cols: usize,
    positive: Vec<bool>,
}

impl ReluMask {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_positive(&self, r: usize, c: usize) -> bool {
        self.positive[r * self.cols + c]
    }

    pub fn count_positive(&self) -> usize {
        self.positive.iter().filter(|&&p| p).count()
    }

    /// Zeroes the entries of `grad` whose forward input was not positive.
    pub fn gate(&self, grad: &mut DenseMatrix) {
        assert_eq!(grad.shape(), self.shape(), "relu mask shape");
        for (g, &p) in grad.as_mut_slice().iter_mut().zip(&self.positive) {
            if !p {
                *g = 0.0;
            }
        }
    }
}

pub fn relu(x: &DenseMatrix) -> (DenseMatrix, ReluMask) {
    let positive: Vec<bool> = x.as_slice().iter().map(|&v| v > 0.0).collect();
    let out = x.map(|v| if v > 0.0 { v } else { 0.0 });
    let mask = ReluMask {
        rows: x.rows(),
        cols: x.cols(),
        positive,
    };
    (out, mask)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Uniform Glorot initialization in `±sqrt(6 / (rows + cols))`.
pub fn glorot_init(rows: usize, cols: usize, rng_seed: u64) -> DenseMatrix {
    glorot_init_with(rows, cols, &mut seeded_rng(rng_seed))
}

pub fn glorot_init_with<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let bound = glorot_bound(rows, cols);
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
    DenseMatrix::from_vec(rows, cols, data).expect("length matches")
}

pub fn glorot_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}
