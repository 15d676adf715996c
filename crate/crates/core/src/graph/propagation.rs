use super::argmax_lowest;
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SparseMatrix};

/// Iteration controls for [`label_propagation`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelPropagation {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for LabelPropagation {
    fn default() -> Self {
        LabelPropagation {
            max_iters: 1000,
            tol: 1e-9,
        }
    }
}

impl LabelPropagation {
    pub fn run(
        &self,
        similarity: &SparseMatrix,
        labels: &[Option<usize>],
        num_classes: usize,
        train_set: &[usize],
    ) -> Result<Vec<usize>> {
        label_propagation(similarity, labels, num_classes, train_set, self.max_iters, self.tol)
    }
}

/// Iterative label propagation.
///
/// Starts from one-hot rows for the training nodes and the uniform
/// distribution elsewhere, then repeats `F ← D⁻¹ S F` with training rows
/// clamped back to their one-hot targets, until the largest change in `F`
/// drops below `tol` or `max_iters` is reached. Nodes without neighbours
/// keep the uniform prior. Returns the row-argmax, ties to the lowest class.
pub fn label_propagation(
    similarity: &SparseMatrix,
    labels: &[Option<usize>],
    num_classes: usize,
    train_set: &[usize],
    max_iters: usize,
    tol: f64,
) -> Result<Vec<usize>> {
    let n = similarity.dim();
    if labels.len() != n {
        return Err(Error::shape(
            "label_propagation",
            format!("{} labels for {n} nodes", labels.len()),
        ));
    }
    if train_set.is_empty() {
        return Err(Error::invalid("label propagation needs at least one labeled node"));
    }
    if num_classes == 0 {
        return Err(Error::invalid("num_classes must be positive"));
    }

    let mut clamped: Vec<Option<usize>> = vec![None; n];
    for &i in train_set {
        if i >= n {
            return Err(Error::invalid(format!("training node {i} out of range")));
        }
        let c = labels[i].ok_or(Error::UnlabeledTrainingNode { node: i })?;
        if c >= num_classes {
            return Err(Error::invalid(format!("node {i} has class {c} >= {num_classes}")));
        }
        clamped[i] = Some(c);
    }

    let mut f = DenseMatrix::filled(n, num_classes, 1.0 / num_classes as f64);
    for (i, c) in clamped.iter().enumerate() {
        if let Some(c) = *c {
            f.row_mut(i).fill(0.0);
            f.set(i, c, 1.0);
        }
    }
    let degrees = similarity.row_sums();

    let mut next = f.clone();
    for _ in 0..max_iters {
        let mut max_change = 0.0f64;
        for i in 0..n {
            if clamped[i].is_some() || degrees[i] <= 0.0 {
                continue;
            }
            let (cols, vals) = similarity.row(i);
            let row = next.row_mut(i);
            row.fill(0.0);
            for (&j, &w) in cols.iter().zip(vals) {
                for (o, &v) in row.iter_mut().zip(f.row(j)) {
                    *o += w * v;
                }
            }
            for (o, &old) in row.iter_mut().zip(f.row(i)) {
                *o /= degrees[i];
                max_change = max_change.max((*o - old).abs());
            }
        }
        std::mem::swap(&mut f, &mut next);
        next.as_mut_slice().copy_from_slice(f.as_slice());
        if max_change < tol {
            break;
        }
    }

    Ok(f.row_iter().map(argmax_lowest).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn undirected(n: usize, pairs: &[(usize, usize)]) -> SparseMatrix {
        let mut t = Vec::new();
        for &(a, b) in pairs {
            t.push((a, b, 1.0));
            t.push((b, a, 1.0));
        }
        SparseMatrix::from_triplets(n, t).unwrap()
    }

    #[test]
    fn components_take_their_seed_label() {
        // {0,1,2} and {3,4,5,6}, one labeled node each
        let s = undirected(7, &[(0, 1), (1, 2), (3, 4), (4, 5), (5, 6), (6, 3)]);
        let mut labels = vec![None; 7];
        labels[2] = Some(1);
        labels[3] = Some(0);
        let out = label_propagation(&s, &labels, 2, &[2, 3], 1000, 1e-12).unwrap();
        assert_eq!(out, vec![1, 1, 1, 0, 0, 0, 0]);
    }

    #[test]
    fn all_labeled_is_identity() {
        let s = undirected(4, &[(0, 1), (1, 2), (2, 3)]);
        let labels = vec![Some(2), Some(0), Some(1), Some(0)];
        let out = label_propagation(&s, &labels, 3, &[0, 1, 2, 3], 50, 1e-9).unwrap();
        assert_eq!(out, vec![2, 0, 1, 0]);
    }

    #[test]
    fn path_midpoint_tie_goes_to_lower_class() {
        // middle row becomes (1,0)/2 + (0,1)/2 = (0.5, 0.5) after one step
        let s = undirected(3, &[(0, 1), (1, 2)]);
        let labels = vec![Some(0), None, Some(1)];
        let out = label_propagation(&s, &labels, 2, &[0, 2], 100, 1e-9).unwrap();
        assert_eq!(out[1], 0);
    }

    #[test]
    fn isolated_node_keeps_uniform_prior() {
        let s = undirected(3, &[(0, 1)]);
        let labels = vec![Some(1), None, None];
        let out = label_propagation(&s, &labels, 2, &[0], 100, 1e-9).unwrap();
        assert_eq!(out, vec![1, 1, 0]);
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let s = undirected(2, &[(0, 1)]);
        assert!(label_propagation(&s, &[None, None], 2, &[], 10, 1e-9).is_err());
    }
}
