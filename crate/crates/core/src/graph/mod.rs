//! Graph-derived operators: the renormalized adjacency used by every GCN
//! layer, similarity graphs and their Laplacians, the supervision-aware
//! label-correlation matrix, and a label-propagation baseline.

mod knn;
mod operators;
mod propagation;

pub use knn::build_similarity_knn;
pub use operators::{build_similarity_adj, label_correlation, laplacian_from_similarity, normalize_adjacency};
pub use propagation::{label_propagation, LabelPropagation};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SparseMatrix};

/// Undirected graph with node features and (partial) labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledGraph {
    pub adjacency: SparseMatrix,
    pub features: DenseMatrix,
    pub labels: Vec<Option<usize>>,
    pub num_classes: usize,
}

impl LabeledGraph {
    pub fn new(
        adjacency: SparseMatrix,
        features: DenseMatrix,
        labels: Vec<Option<usize>>,
        num_classes: usize,
    ) -> Result<Self> {
        let g = LabeledGraph {
            adjacency,
            features,
            labels,
            num_classes,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.dim()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.adjacency.dim();
        if self.features.rows() != n || self.labels.len() != n {
            return Err(Error::shape(
                "LabeledGraph",
                format!(
                    "{n} nodes but {} feature rows and {} labels",
                    self.features.rows(),
                    self.labels.len()
                ),
            ));
        }
        if !self.adjacency.is_symmetric() {
            return Err(Error::invalid("adjacency is not symmetric"));
        }
        if self.adjacency.iter().any(|(r, c, _)| r == c) {
            return Err(Error::invalid("adjacency has a non-empty diagonal"));
        }
        if let Some((node, c)) = self
            .labels
            .iter()
            .enumerate()
            .find_map(|(i, l)| l.filter(|&c| c >= self.num_classes).map(|c| (i, c)))
        {
            return Err(Error::invalid(format!(
                "node {node} has class {c} but there are {} classes",
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Relabels nodes so that node `i` becomes node `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<LabeledGraph> {
        let n = self.num_nodes();
        let mut inverse = vec![usize::MAX; n];
        for (i, &p) in perm.iter().enumerate() {
            if p >= n || inverse[p] != usize::MAX {
                return Err(Error::invalid("not a permutation"));
            }
            inverse[p] = i;
        }
        Ok(LabeledGraph {
            adjacency: self.adjacency.permute(perm)?,
            features: self.features.select_rows(&inverse),
            labels: inverse.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        })
    }
}

/// Row-argmax with ties going to the lowest index.
pub(crate) fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}
