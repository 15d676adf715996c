use rand::Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::LabeledGraph;
use crate::numerics::{seeded_rng, DenseMatrix, SparseMatrix};

/// Parameters of a planted-partition fixture.
#[derive(Clone, Debug, PartialEq)]
pub struct FixtureSpec {
    pub n_per_class: usize,
    pub classes: usize,
    pub p: usize,
    pub intra_edge_prob: f64,
    pub inter_edge_prob: f64,
    pub seed: u64,
}

impl Default for FixtureSpec {
    /// Two classes of ten nodes each.
    fn default() -> Self {
        FixtureSpec {
            n_per_class: 10,
            classes: 2,
            p: 8,
            intra_edge_prob: 0.5,
            inter_edge_prob: 0.05,
            seed: 0,
        }
    }
}

impl FixtureSpec {
    pub fn build(&self) -> Result<Dataset> {
        synth_fixture(
            self.n_per_class,
            self.classes,
            self.p,
            self.intra_edge_prob,
            self.inter_edge_prob,
            self.seed,
        )
    }
}

/// Share of each class placed in the training split, and in validation.
const TRAIN_SHARE: f64 = 0.3;
const VAL_SHARE: f64 = 0.2;
/// Standard deviation of the per-feature noise around the class mean.
const FEATURE_NOISE: f64 = 0.5;

/// Planted-partition graph with class-dependent Gaussian features.
///
/// Nodes are laid out class by class. Each pair is linked with
/// `intra_edge_prob` inside a class and `inter_edge_prob` across classes.
/// Class `c` has mean feature vector with ones on the coordinates
/// `j ≡ c (mod classes)`; features add N(0, 0.5²) noise. Every node is
/// labeled; per class the first 30% (at least one) go to `train`, the next
/// 20% (at least one when possible) to `val`, the rest to `test`.
pub fn synth_fixture(
    n_per_class: usize,
    classes: usize,
    p: usize,
    intra_edge_prob: f64,
    inter_edge_prob: f64,
    seed: u64,
) -> Result<Dataset> {
    for (name, v) in [
        ("intra_edge_prob", intra_edge_prob),
        ("inter_edge_prob", inter_edge_prob),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("{name} = {v} outside [0, 1]")));
        }
    }
    if n_per_class == 0 || classes == 0 || p == 0 {
        return Err(Error::invalid("fixture sizes must be positive"));
    }
    let n = n_per_class * classes;
    let class_of = |i: usize| i / n_per_class;
    let mut rng = seeded_rng(seed);

    let mut triplets = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = if class_of(i) == class_of(j) {
                intra_edge_prob
            } else {
                inter_edge_prob
            };
            if rng.gen::<f64>() < prob {
                triplets.push((i, j, 1.0));
                triplets.push((j, i, 1.0));
            }
        }
    }
    let adjacency = SparseMatrix::from_triplets(n, triplets)?;

    let mut features = DenseMatrix::zeros(n, p);
    for i in 0..n {
        let c = class_of(i);
        for (j, v) in features.row_mut(i).iter_mut().enumerate() {
            let mean = if j % classes == c { 1.0 } else { 0.0 };
            let noise: f64 = rng.sample(StandardNormal);
            *v = mean + FEATURE_NOISE * noise;
        }
    }

    let labels = (0..n).map(|i| Some(class_of(i))).collect();
    let n_train = ((n_per_class as f64 * TRAIN_SHARE).round() as usize).max(1);
    let n_val = ((n_per_class as f64 * VAL_SHARE).round() as usize)
        .max(1)
        .min(n_per_class.saturating_sub(n_train));
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for c in 0..classes {
        let base = c * n_per_class;
        for k in 0..n_per_class {
            let i = base + k;
            if k < n_train {
                train.push(i);
            } else if k < n_train + n_val {
                val.push(i);
            } else {
                test.push(i);
            }
        }
    }

    let graph = LabeledGraph::new(adjacency, features, labels, classes)?;
    Dataset::new(format!("sbm{classes}-{n}-s{seed}"), graph, train, val, test)
}

/// Six-node, two-class graph used for gradient checks.
///
/// Two triangles `{0,1,2}` and `{3,4,5}` joined by the edge `2–3`, with
/// dense features (no zeros, so every weight entry influences the loss).
/// Training nodes `0, 1` (class 0) and `3, 4` (class 1) give the
/// label-correlation matrix both positive and negative entries.
pub fn six_node_fixture() -> Dataset {
    let pairs = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)];
    let mut triplets = Vec::new();
    for (a, b) in pairs {
        triplets.push((a, b, 1.0));
        triplets.push((b, a, 1.0));
    }
    let adjacency = SparseMatrix::from_triplets(6, triplets).expect("fixed fixture");
    let features = DenseMatrix::from_rows(&[
        [0.9, 0.2, -0.4],
        [0.7, -0.3, 0.1],
        [0.35, 0.6, -0.8],
        [-0.5, 0.45, 0.3],
        [-0.8, -0.15, 0.65],
        [-0.25, 0.9, 0.55],
    ]);
    let labels = vec![Some(0), Some(0), Some(0), Some(1), Some(1), Some(1)];
    let graph = LabeledGraph::new(adjacency, features, labels, 2).expect("fixed fixture");
    Dataset::new("six-node", graph, vec![0, 1, 3, 4], vec![2], vec![5]).expect("fixed fixture")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_intra_no_inter_is_block_diagonal() {
        let ds = synth_fixture(5, 3, 4, 1.0, 0.0, 3).unwrap();
        let a = &ds.graph.adjacency;
        for (i, j, _) in a.iter() {
            assert_eq!(i / 5, j / 5);
        }
        // each block is a clique
        assert_eq!(a.nnz(), 3 * 5 * 4);
    }

    #[test]
    fn same_seed_same_dataset() {
        let a = FixtureSpec::default().build().unwrap();
        let b = FixtureSpec::default().build().unwrap();
        assert_eq!(a, b);
        let c = FixtureSpec {
            seed: 1,
            ..FixtureSpec::default()
        }
        .build()
        .unwrap();
        assert_ne!(a.graph.features, c.graph.features);
    }

    #[test]
    fn default_fixture_shape() {
        let ds = FixtureSpec::default().build().unwrap();
        assert_eq!(ds.num_nodes(), 20);
        assert_eq!(ds.train.len(), 6);
        assert_eq!(ds.val.len(), 4);
        assert_eq!(ds.test.len(), 10);
        ds.validate().unwrap();
    }

    #[test]
    fn six_node_fixture_is_valid() {
        let ds = six_node_fixture();
        ds.validate().unwrap();
        assert!(ds.graph.features.as_slice().iter().all(|&v| v != 0.0));
    }

    #[test]
    fn bad_probability_rejected() {
        assert!(synth_fixture(4, 2, 2, 1.5, 0.0, 0).is_err());
    }
}
