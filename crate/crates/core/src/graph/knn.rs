use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SparseMatrix};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Gaussian-weighted k-nearest-neighbour graph over feature rows.
///
/// Each node links to its `k` nearest other nodes (Euclidean; distance ties
/// go to the lower index) with weight `exp(−‖x_i − x_j‖² / (2σ²))`. The
/// directed kNN relation is symmetrized with `max(w_ij, w_ji)`, so an edge
/// exists whenever either endpoint selected the other. Brute force, O(n² p).
pub fn build_similarity_knn(features: &DenseMatrix, k: usize, sigma: f64) -> Result<SparseMatrix> {
    let n = features.rows();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "kNN needs 1 <= k < n, got k = {k} with n = {n}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    let denom = 2.0 * sigma * sigma;

    let mut weights = std::collections::BTreeMap::<(usize, usize), f64>::new();
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        candidates.clear();
        let xi = features.row(i);
        candidates.extend((0..n).filter(|&j| j != i).map(|j| (sq_dist(xi, features.row(j)), j)));
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(d2, j) in candidates.iter().take(k) {
            let w = (-d2 / denom).exp();
            let key = (i.min(j), i.max(j));
            let slot = weights.entry(key).or_insert(w);
            *slot = slot.max(w);
        }
    }

    let mut triplets = Vec::with_capacity(2 * weights.len());
    for (&(i, j), &w) in &weights {
        triplets.push((i, j, w));
        triplets.push((j, i, w));
    }
    SparseMatrix::from_triplets(n, triplets)
}
