//! Graph-Laplacian-regularized graph convolutional networks (gLGCN) for
//! transductive semi-supervised node classification.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: dense and CSR sparse matrices, activations, initialization.
//! * [`graph`]: renormalized adjacency, similarity graphs, Laplacians, the
//!   label-correlation matrix and a label-propagation baseline.
//! * [`model`]: the K-layer GCN forward pass.
//! * [`loss_grad`]: loss terms, the hand-written backward pass and a
//!   central-difference gradient checker.
//! * [`optim_train`]: Adam, the full-batch training loop with early stopping,
//!   and validation-driven selection of the regularization weights.
//! * [`data_io`]: the on-disk dataset format, synthetic fixtures, checkpoints.
//! * [`bench`]: the accuracy table over datasets and methods.
//! * [`report`]: versioned JSON reports and their text and markdown renderings.

pub mod bench;
pub mod data_io;
pub mod error;
pub mod graph;
pub mod loss_grad;
pub mod model;
pub mod numerics;
pub mod optim_train;
pub mod report;

pub use data_io::{Dataset, Split};
pub use error::{Error, Result};
pub use graph::LabeledGraph;
pub use loss_grad::{Gradients, LossBreakdown, Objective, Variant};
pub use model::{ForwardTrace, ModelParams};
pub use numerics::{DenseMatrix, SparseMatrix};
pub use optim_train::{TrainConfig, TrainReport};
