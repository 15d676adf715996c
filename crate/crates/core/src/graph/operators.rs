use crate::error::{Error, Result};
use crate::numerics::SparseMatrix;

fn check_nonnegative(s: &SparseMatrix, what: &str) -> Result<()> {
    if let Some((r, c, v)) = s.iter().find(|&(_, _, v)| v < 0.0 || !v.is_finite()) {
        return Err(Error::invalid(format!(
            "{what} entry ({r}, {c}) = {v}; weights must be finite and non-negative"
        )));
    }
    Ok(())
}

/// Row sums of `A + I`.
fn augmented_degrees(adjacency: &SparseMatrix) -> Vec<f64> {
    adjacency.row_sums().iter().map(|&d| d + 1.0).collect()
}

/// Renormalized adjacency `D̄^{-1/2} (A + I) D̄^{-1/2}` with
/// `D̄_ii = Σ_j (A + I)_ij`.
pub fn normalize_adjacency(adjacency: &SparseMatrix) -> Result<SparseMatrix> {
    check_nonnegative(adjacency, "adjacency")?;
    if !adjacency.is_symmetric() {
        return Err(Error::invalid("adjacency is not symmetric"));
    }
    let n = adjacency.dim();
    let deg = augmented_degrees(adjacency);
    let mut triplets = Vec::with_capacity(adjacency.nnz() + n);
    for (r, c, v) in adjacency.iter() {
        triplets.push((r, c, v / (deg[r] * deg[c]).sqrt()));
    }
    for (r, &d) in deg.iter().enumerate() {
        triplets.push((r, r, 1.0 / d));
    }
    SparseMatrix::from_triplets(n, triplets)
}

/// Similarity graph taken from the adjacency.
///
/// With `normalize` off this is `A` itself. With it on, edges are scaled
/// the same way as in [`normalize_adjacency`], `A_ij / sqrt(D̄_ii D̄_jj)` with
/// `D̄ = D + I`, but no self-loops are added, so the result is the
/// off-diagonal part of the renormalized adjacency.
pub fn build_similarity_adj(adjacency: &SparseMatrix, normalize: bool) -> Result<SparseMatrix> {
    if !normalize {
        return Ok(adjacency.clone());
    }
    check_nonnegative(adjacency, "adjacency")?;
    let deg = augmented_degrees(adjacency);
    let triplets = adjacency
        .iter()
        .filter(|&(r, c, _)| r != c)
        .map(|(r, c, v)| (r, c, v / (deg[r] * deg[c]).sqrt()))
        .collect();
    SparseMatrix::from_triplets(adjacency.dim(), triplets)
}

/// `L = diag(rowsum(S)) − S`.
pub fn laplacian_from_similarity(s: &SparseMatrix) -> SparseMatrix {
    let degrees = s.row_sums();
    let mut triplets: Vec<_> = s.iter().map(|(r, c, v)| (r, c, -v)).collect();
    triplets.extend(degrees.iter().enumerate().map(|(r, &d)| (r, r, d)));
    SparseMatrix::from_triplets(s.dim(), triplets).expect("indices come from s")
}

/// Label-correlation matrix over the training nodes: `1` for pairs sharing a
/// class, `−alpha` for pairs with different classes, `0` elsewhere and on the
/// diagonal.
pub fn label_correlation(labels: &[Option<usize>], train_set: &[usize], alpha: f64) -> Result<SparseMatrix> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be >= 0, got {alpha}")));
    }
    let n = labels.len();
    let mut nodes = Vec::with_capacity(train_set.len());
    for &i in train_set {
        if i >= n {
            return Err(Error::invalid(format!(
                "training node {i} outside a graph of {n} nodes"
            )));
        }
        let class = labels[i].ok_or(Error::UnlabeledTrainingNode { node: i })?;
        nodes.push((i, class));
    }
    nodes.sort_unstable();
    nodes.dedup();

    let mut triplets = Vec::with_capacity(nodes.len() * nodes.len());
    for &(i, ci) in &nodes {
        for &(j, cj) in &nodes {
            if i == j {
                continue;
            }
            let w = if ci == cj { 1.0 } else { -alpha };
            triplets.push((i, j, w));
        }
    }
    SparseMatrix::from_triplets(n, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseMatrix;

    fn edge(n: usize, pairs: &[(usize, usize)]) -> SparseMatrix {
        let mut t = Vec::new();
        for &(a, b) in pairs {
            t.push((a, b, 1.0));
            t.push((b, a, 1.0));
        }
        SparseMatrix::from_triplets(n, t).unwrap()
    }

    /// Straight transcription of the renormalization formula on dense matrices.
    fn dense_renormalized(a: &DenseMatrix) -> DenseMatrix {
        let n = a.rows();
        let mut abar = a.clone();
        for i in 0..n {
            abar.set(i, i, abar.get(i, i) + 1.0);
        }
        let d: Vec<f64> = (0..n).map(|i| abar.row(i).iter().sum()).collect();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, abar.get(i, j) / (d[i].sqrt() * d[j].sqrt()));
            }
        }
        out
    }

    #[test]
    fn single_isolated_node() {
        let a_hat = normalize_adjacency(&SparseMatrix::empty(1)).unwrap();
        assert_eq!(a_hat.to_dense(), DenseMatrix::from_rows(&[[1.0]]));
    }

    #[test]
    fn two_nodes_one_edge() {
        let a_hat = normalize_adjacency(&edge(2, &[(0, 1)])).unwrap();
        assert_eq!(a_hat.to_dense(), DenseMatrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]));
    }

    #[test]
    fn path_of_three_matches_dense_formula() {
        let a = edge(3, &[(0, 1), (1, 2)]);
        let a_hat = normalize_adjacency(&a).unwrap();
        let oracle = dense_renormalized(&a.to_dense());
        assert!(a_hat.to_dense().max_abs_diff(&oracle) < 1e-15);
        assert!(a_hat.is_symmetric());
    }

    #[test]
    fn negative_weight_is_rejected() {
        let a = SparseMatrix::from_triplets(2, vec![(0, 1, -1.0), (1, 0, -1.0)]).unwrap();
        assert!(normalize_adjacency(&a).is_err());
    }

    #[test]
    fn similarity_from_adjacency() {
        let a = edge(2, &[(0, 1)]);
        assert_eq!(build_similarity_adj(&a, false).unwrap(), a);
        let s = build_similarity_adj(&a, true).unwrap();
        assert_eq!(s.to_dense(), DenseMatrix::from_rows(&[[0.0, 0.5], [0.5, 0.0]]));
        let empty = SparseMatrix::empty(4);
        assert_eq!(build_similarity_adj(&empty, false).unwrap().nnz(), 0);
        assert_eq!(build_similarity_adj(&empty, true).unwrap().nnz(), 0);
    }

    #[test]
    fn laplacian_small_cases() {
        let l = laplacian_from_similarity(&edge(2, &[(0, 1)]));
        assert_eq!(l.to_dense(), DenseMatrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]));
        assert_eq!(laplacian_from_similarity(&SparseMatrix::empty(3)).nnz(), 0);
    }

    #[test]
    fn correlation_entries() {
        let labels = vec![Some(0), Some(0), Some(1), None];
        let c = label_correlation(&labels, &[0, 1, 2], 0.5).unwrap();
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(1, 0), 1.0);
        assert_eq!(c.get(0, 2), -0.5);
        assert_eq!(c.get(2, 1), -0.5);
        for i in 0..4 {
            assert_eq!(c.get(i, i), 0.0);
            assert_eq!(c.get(3, i), 0.0);
            assert_eq!(c.get(i, 3), 0.0);
        }
        assert!(c.is_symmetric());
    }

    #[test]
    fn correlation_ignores_labeled_nodes_outside_training() {
        // node 2 has a label but is not in the training set
        let labels = vec![Some(0), Some(1), Some(1)];
        let c = label_correlation(&labels, &[0, 1], 1.0).unwrap();
        assert_eq!(c.nnz(), 2);
        assert_eq!(c.get(1, 2), 0.0);
    }

    #[test]
    fn correlation_rejects_unlabeled_training_node() {
        let labels = vec![Some(0), None];
        assert!(matches!(
            label_correlation(&labels, &[0, 1], 1.0),
            Err(Error::UnlabeledTrainingNode { node: 1 })
        ));
        assert!(label_correlation(&labels, &[0], -1.0).is_err());
    }
}
