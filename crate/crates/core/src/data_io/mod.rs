//! On-disk dataset directories, synthetic fixtures and checkpoints.
//!
//! A dataset directory holds:
//!
//! | file           | contents                                                   |
//! |----------------|------------------------------------------------------------|
//! | `meta.json`    | manifest: name and counts (see [`Manifest`])               |
//! | `edges.txt`    | one `src dst` pair per line, 0-indexed, undirected          |
//! | `features.txt` | line `i` holds node `i` as `idx:value` pairs; empty = zero  |
//! | `labels.txt`   | `node_id class_id` per line; missing nodes are unlabeled   |
//! | `train.txt`, `val.txt`, `test.txt` | one node id per line                   |

mod checkpoint;
mod fixtures;
mod format;

pub use checkpoint::{load_checkpoint, load_checkpoint_expecting, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use fixtures::{six_node_fixture, synth_fixture, FixtureSpec};
pub use format::{load_dataset, write_dataset, Manifest, MANIFEST_FILE};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::LabeledGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::invalid(format!("unknown split {s:?}"))),
        }
    }
}

/// A labeled graph with its train/validation/test node sets.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graph: LabeledGraph,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    /// Edge lines as listed on disk, duplicates included.
    pub edge_lines: usize,
    /// Distinct undirected edges after dropping self-loops and duplicates.
    pub undirected_edges: usize,
    /// Non-fatal notices raised while loading (e.g. dropped self-loops).
    pub warnings: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from parts, checking split and label invariants.
    pub fn new(
        name: impl Into<String>,
        graph: LabeledGraph,
        train: Vec<usize>,
        val: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Self> {
        let undirected_edges = graph.adjacency.nnz() / 2;
        let ds = Dataset {
            name: name.into(),
            graph,
            train,
            val,
            test,
            edge_lines: undirected_edges,
            undirected_edges,
            warnings: Vec::new(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_classes(&self) -> usize {
        self.graph.num_classes
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.graph.labels
    }

    pub fn split(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// Fraction of nodes in the training split.
    pub fn label_rate(&self) -> f64 {
        self.train.len() as f64 / self.num_nodes().max(1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        let n = self.num_nodes();
        let mut owner: Vec<Option<Split>> = vec![None; n];
        for split in [Split::Train, Split::Val, Split::Test] {
            for &i in self.split(split) {
                if i >= n {
                    return Err(Error::invalid(format!("{split} node {i} out of range (n = {n})")));
                }
                if let Some(other) = owner[i] {
                    return Err(Error::invalid(format!("node {i} is in both {other} and {split}")));
                }
                owner[i] = Some(split);
                if split == Split::Train && self.graph.labels[i].is_none() {
                    return Err(Error::UnlabeledTrainingNode { node: i });
                }
            }
        }
        Ok(())
    }

    /// Relabels nodes so that node `i` becomes node `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Dataset> {
        let graph = self.graph.permute(perm)?;
        let map = |v: &[usize]| v.iter().map(|&i| perm[i]).collect::<Vec<_>>();
        Ok(Dataset {
            name: self.name.clone(),
            graph,
            train: map(&self.train),
            val: map(&self.val),
            test: map(&self.test),
            edge_lines: self.edge_lines,
            undirected_edges: self.undirected_edges,
            warnings: self.warnings.clone(),
        })
    }
}
