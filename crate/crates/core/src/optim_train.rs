//! Adam, the full-batch training loop, evaluation and λ/α grid search.
//!
//! Hyperparameter defaults follow the usual two-layer GCN setup for citation
//! graphs: 16 hidden units, dropout 0.5, learning rate 0.01, weight decay
//! 5e-4 on the first layer, at most 200 epochs, patience 10.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::{six_node_fixture, Dataset, Split};
use crate::error::{Error, Result};
use crate::graph::{build_similarity_adj, build_similarity_knn, label_correlation, normalize_adjacency};
use crate::loss_grad::{
    backward, cross_entropy_masked, finite_diff_check, total_loss, GradCheckReport, Gradients, LabelRegTarget,
    LossBreakdown, Objective, Variant,
};
use crate::model::{gcn_forward_rows, predict, Dropout, ModelParams};
use crate::numerics::{seeded_rng, DenseMatrix, SparseMatrix, SparseRows};

/// Graph used by the feature-side regularizer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureRegGraph {
    /// The similarity graph `S`.
    #[default]
    Similarity,
    /// The label-correlation matrix `C` over training nodes.
    Correlation,
}

/// How the similarity graph `S` is built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    #[default]
    Adjacency,
    Knn,
}

macro_rules! simple_from_str {
    ($ty:ty, $($name:literal => $val:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($val),)+
                    _ => Err(Error::invalid(format!(
                        concat!("unknown ", stringify!($ty), " {:?}; expected one of: ", $($name, " "),+),
                        s
                    ))),
                }
            }
        }
    };
}

simple_from_str!(FeatureRegGraph, "similarity" => FeatureRegGraph::Similarity, "s" => FeatureRegGraph::Similarity,
    "correlation" => FeatureRegGraph::Correlation, "c" => FeatureRegGraph::Correlation);
simple_from_str!(SimilarityKind, "adjacency" => SimilarityKind::Adjacency, "knn" => SimilarityKind::Knn);
simple_from_str!(LabelRegTarget, "probabilities" => LabelRegTarget::Probabilities, "logits" => LabelRegTarget::Logits);

impl fmt::Display for FeatureRegGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureRegGraph::Similarity => "similarity",
            FeatureRegGraph::Correlation => "correlation",
        })
    }
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityKind::Adjacency => "adjacency",
            SimilarityKind::Knn => "knn",
        })
    }
}

impl fmt::Display for LabelRegTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelRegTarget::Probabilities => "probabilities",
            LabelRegTarget::Logits => "logits",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub variant: Variant,
    pub lambda_label: f64,
    pub lambda_feature: f64,
    /// Weight of cross-class pairs in the label-correlation matrix.
    pub alpha: f64,
    pub feature_reg_graph: FeatureRegGraph,
    pub similarity: SimilarityKind,
    /// Degree-normalize `S` when it is built from the adjacency.
    pub normalize_similarity: bool,
    pub knn_k: usize,
    pub knn_sigma: f64,
    pub label_reg_target: LabelRegTarget,
    /// Hidden layer regularized by the feature term; `None` is the last one.
    pub feature_layer: Option<usize>,
    pub hidden_dims: Vec<usize>,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    /// L2 coefficient on the first weight matrix.
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub bias: bool,
    /// Scale each feature row to unit L1 norm before training.
    pub normalize_features: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: Variant::Gcn,
            lambda_label: 1e-2,
            lambda_feature: 1e-2,
            alpha: 1.0,
            feature_reg_graph: FeatureRegGraph::Similarity,
            similarity: SimilarityKind::Adjacency,
            normalize_similarity: false,
            knn_k: 10,
            knn_sigma: 1.0,
            label_reg_target: LabelRegTarget::Probabilities,
            feature_layer: None,
            hidden_dims: vec![16],
            dropout_rate: 0.5,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            max_epochs: 200,
            patience: 10,
            seed: 0,
            bias: false,
            normalize_features: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("lambda_label", self.lambda_label),
            ("lambda_feature", self.lambda_feature),
            ("alpha", self.alpha),
            ("weight_decay", self.weight_decay),
            ("learning_rate", self.learning_rate),
            ("dropout_rate", self.dropout_rate),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.dropout_rate >= 1.0 {
            return Err(Error::invalid("dropout_rate must be < 1"));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::invalid("max_epochs and patience must be >= 1"));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::invalid("hidden widths must be positive"));
        }
        if self.similarity == SimilarityKind::Knn && (self.knn_sigma.is_nan() || self.knn_sigma <= 0.0) {
            return Err(Error::invalid("knn_sigma must be > 0"));
        }
        if let Some(l) = self.feature_layer {
            if l == 0 || l > self.hidden_dims.len() {
                return Err(Error::invalid(format!(
                    "feature_layer {l} not in 1..={}",
                    self.hidden_dims.len()
                )));
            }
        }
        Ok(())
    }

    pub fn layer_dims(&self, dataset: &Dataset) -> Vec<usize> {
        let mut dims = vec![dataset.graph.num_features()];
        dims.extend(&self.hidden_dims);
        dims.push(dataset.num_classes());
        dims
    }
}

/// Adam moments and step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<DenseMatrix>,
    pub v: Vec<DenseMatrix>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros = || {
            params
                .tensors()
                .map(|t| DenseMatrix::zeros(t.rows(), t.cols()))
                .collect()
        };
        AdamState {
            m: zeros(),
            v: zeros(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut ModelParams, grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<()> {
    let n = params.tensors().count();
    if grads.tensors().count() != n || state.m.len() != n {
        return Err(Error::shape("adam_step", "tensor counts differ"));
    }
    for ((p, g), m) in params.tensors().zip(grads.tensors()).zip(&state.m) {
        if !p.same_shape(g) || !p.same_shape(m) {
            return Err(Error::shape(
                "adam_step",
                format!("param {:?} vs grad {:?}", p.shape(), g.shape()),
            ));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((p, g), m), v) in params
        .tensors_mut()
        .zip(grads.tensors())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for (((pv, &gv), mv), vv) in p
            .as_mut_slice()
            .iter_mut()
            .zip(g.as_slice())
            .zip(m.as_mut_slice())
            .zip(v.as_mut_slice())
        {
            *mv = b1 * *mv + (1.0 - b1) * gv;
            *vv = b2 * *vv + (1.0 - b2) * gv * gv;
            let m_hat = *mv / c1;
            let v_hat = *vv / c2;
            *pv -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

/// Graph operators and features derived once per (dataset, config).
#[derive(Clone, Debug)]
pub struct Prepared {
    pub a_hat: SparseMatrix,
    pub features: DenseMatrix,
    /// `features` with zeros dropped; the forward pass reads this copy.
    pub feature_rows: SparseRows,
    pub similarity: SparseMatrix,
    pub feature_graph: SparseMatrix,
}

fn l1_normalize_rows(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let norm: f64 = row.iter().map(|v| v.abs()).sum();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
    out
}

fn similarity_from(dataset: &Dataset, features: &DenseMatrix, config: &TrainConfig) -> Result<SparseMatrix> {
    match config.similarity {
        SimilarityKind::Adjacency => build_similarity_adj(&dataset.graph.adjacency, config.normalize_similarity),
        SimilarityKind::Knn => build_similarity_knn(features, config.knn_k, config.knn_sigma),
    }
}

/// The similarity graph `S` selected by `config`; kNN graphs are built on
/// the (optionally row-normalized) features.
pub fn similarity_graph(dataset: &Dataset, config: &TrainConfig) -> Result<SparseMatrix> {
    let g = &dataset.graph;
    if config.similarity == SimilarityKind::Knn && config.normalize_features {
        similarity_from(dataset, &l1_normalize_rows(&g.features), config)
    } else {
        similarity_from(dataset, &g.features, config)
    }
}

impl Prepared {
    pub fn new(dataset: &Dataset, config: &TrainConfig) -> Result<Self> {
        let g = &dataset.graph;
        let a_hat = normalize_adjacency(&g.adjacency)?;
        let features = if config.normalize_features {
            l1_normalize_rows(&g.features)
        } else {
            g.features.clone()
        };
        let needs_similarity = config.variant.uses_label_reg()
            || (config.variant.uses_feature_reg() && config.feature_reg_graph == FeatureRegGraph::Similarity);
        let similarity = if needs_similarity {
            similarity_from(dataset, &features, config)?
        } else {
            SparseMatrix::empty(g.num_nodes())
        };
        let feature_graph = match config.feature_reg_graph {
            FeatureRegGraph::Correlation if config.variant.uses_feature_reg() => {
                label_correlation(&g.labels, &dataset.train, config.alpha)?
            }
            _ => similarity.clone(),
        };
        Ok(Prepared {
            a_hat,
            feature_rows: SparseRows::from_dense(&features),
            features,
            similarity,
            feature_graph,
        })
    }

    pub fn objective<'a>(&'a self, config: &TrainConfig) -> Objective<'a> {
        Objective {
            variant: config.variant,
            lambda_label: config.lambda_label,
            lambda_feature: config.lambda_feature,
            similarity: &self.similarity,
            feature_graph: &self.feature_graph,
            label_target: config.label_reg_target,
            feature_layer: config.feature_layer,
        }
    }

    /// Class probabilities with dropout off.
    pub fn infer(&self, params: &ModelParams) -> Result<DenseMatrix> {
        Ok(gcn_forward_rows(&self.a_hat, &self.feature_rows, params, None)?.z)
    }

    pub fn evaluate(&self, params: &ModelParams, dataset: &Dataset, split: Split) -> Result<f64> {
        accuracy(&self.infer(params)?, dataset, split)
    }
}

fn accuracy(z: &DenseMatrix, dataset: &Dataset, split: Split) -> Result<f64> {
    let nodes = dataset.split(split);
    if nodes.is_empty() {
        return Err(Error::invalid(format!("{split} split is empty")));
    }
    let predicted = predict(z);
    let mut correct = 0usize;
    for &i in nodes {
        let y = dataset.labels()[i].ok_or_else(|| Error::invalid(format!("{split} node {i} has no label")))?;
        if predicted[i] == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / nodes.len() as f64)
}

/// Accuracy on `split` with dropout off.
pub fn evaluate(params: &ModelParams, dataset: &Dataset, config: &TrainConfig, split: Split) -> Result<f64> {
    Prepared::new(dataset, config)?.evaluate(params, dataset, split)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Objective terms on the training split (dropout on).
    pub train_loss: LossBreakdown,
    /// What the optimizer minimizes: `total / |train| + weight_decay/2 · ‖W⁽⁰⁾‖²`.
    pub train_objective: f64,
    /// Mean cross-entropy over the validation split, dropout off.
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub train_accuracy: f64,
}

/// Everything about a run except its configuration and timing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    /// 1-based epoch whose parameters are returned.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub dataset: String,
    #[serde(flatten)]
    pub outcome: TrainOutcome,
    pub wall_clock_seconds: f64,
}

impl TrainReport {
    /// True when both runs followed the same trajectory bit for bit, ignoring
    /// the configuration echo and wall-clock time.
    pub fn same_trajectory(&self, other: &TrainReport) -> bool {
        serde_json::to_string(&self.outcome).ok() == serde_json::to_string(&other.outcome).ok()
    }

    /// Highest train accuracy seen at any epoch.
    pub fn peak_train_accuracy(&self) -> f64 {
        self.outcome
            .history
            .iter()
            .map(|r| r.train_accuracy)
            .fold(self.outcome.train_accuracy, f64::max)
    }
}

/// Trains a model and returns the parameters of the best-validation epoch.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<(ModelParams, TrainReport)> {
    let started = Instant::now();
    config.validate()?;
    dataset.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::invalid("training split is empty"));
    }
    if dataset.val.is_empty() {
        return Err(Error::invalid("validation split is empty"));
    }

    let prepared = Prepared::new(dataset, config)?;
    let objective = prepared.objective(config);
    let labels = dataset.labels();
    let train_nodes = &dataset.train;
    let scale = 1.0 / train_nodes.len() as f64;

    let mut rng = seeded_rng(config.seed);
    let mut params = ModelParams::glorot(&config.layer_dims(dataset), config.bias, &mut rng)?;
    let mut adam = AdamState::new(&params);

    let mut history = Vec::with_capacity(config.max_epochs);
    let mut best: Option<(usize, f64, ModelParams)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        let dropout = Dropout {
            rate: config.dropout_rate,
            rng: &mut rng,
        };
        let trace = gcn_forward_rows(&prepared.a_hat, &prepared.feature_rows, &params, Some(dropout))?;
        let loss = total_loss(&objective, &trace, labels, train_nodes)?;
        let mut grads = backward(&objective, &trace, &params, &prepared.a_hat, labels, train_nodes)?;
        drop(trace);

        let w0 = &params.weights()[0];
        let train_objective = loss.total * scale + 0.5 * config.weight_decay * w0.frobenius_sq();
        if !train_objective.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                detail: format!("training loss is {train_objective} ({loss:?})"),
            });
        }
        for g in grads.weights.iter_mut().chain(grads.biases.iter_mut()) {
            *g = g.scale(scale);
        }
        if config.weight_decay > 0.0 {
            grads.weights[0].add_scaled(w0, config.weight_decay)?;
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                detail: "gradient has non-finite entries".into(),
            });
        }
        adam_step(&mut params, &grads, &mut adam, config.learning_rate)?;

        let z = prepared.infer(&params)?;
        let val_loss = cross_entropy_masked(&z, labels, &dataset.val)? / dataset.val.len() as f64;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                detail: format!("validation loss is {val_loss}"),
            });
        }
        history.push(EpochRecord {
            epoch,
            train_loss: loss,
            train_objective,
            val_loss,
            val_accuracy: accuracy(&z, dataset, Split::Val)?,
            train_accuracy: accuracy(&z, dataset, Split::Train)?,
        });
        log::debug!("epoch {epoch}: objective {train_objective:.5} val loss {val_loss:.5}");

        let improved = best.as_ref().is_none_or(|(_, b, _)| val_loss < *b);
        if improved {
            best = Some((epoch, val_loss, params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                stopped_early = epoch < config.max_epochs;
                break;
            }
        }
    }

    let (best_epoch, best_val_loss, best_params) = best.expect("at least one epoch ran");
    let z = prepared.infer(&best_params)?;
    let test_accuracy = if dataset.test.is_empty() {
        None
    } else {
        Some(accuracy(&z, dataset, Split::Test)?)
    };
    let outcome = TrainOutcome {
        epochs_run: history.len(),
        history,
        best_epoch,
        best_val_loss,
        stopped_early,
        train_accuracy: accuracy(&z, dataset, Split::Train)?,
        val_accuracy: accuracy(&z, dataset, Split::Val)?,
        test_accuracy,
    };
    let report = TrainReport {
        config: config.clone(),
        dataset: dataset.name.clone(),
        outcome,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((best_params, report))
}

/// Trains one model per seed (in parallel); reports come back in seed order.
pub fn train_seeds(dataset: &Dataset, config: &TrainConfig, seeds: &[u64]) -> Result<Vec<TrainReport>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = TrainConfig { seed, ..config.clone() };
            train(dataset, &cfg).map(|(_, report)| report)
        })
        .collect()
}

/// One cell of a λ/α grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lambda: f64,
    pub alpha: f64,
    pub val_accuracy: f64,
    pub val_loss: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSearch {
    pub best: TrainConfig,
    pub best_cell: usize,
    pub table: Vec<GridCell>,
}

/// Applies a grid value λ to whichever regularizers the variant uses.
pub fn with_lambda(config: &TrainConfig, lambda: f64, alpha: f64) -> TrainConfig {
    let mut cfg = config.clone();
    if cfg.variant.uses_label_reg() {
        cfg.lambda_label = lambda;
    }
    if cfg.variant.uses_feature_reg() {
        cfg.lambda_feature = lambda;
    }
    cfg.alpha = alpha;
    cfg
}

/// Grid search over λ (shared by both regularizers) and α, picking the cell
/// with the highest validation accuracy; ties go to the smaller λ, then the
/// smaller α. α only matters for the correlation-based feature term, so for
/// other configurations the α grid collapses to the configured value.
pub fn select_lambda(
    dataset: &Dataset,
    base_config: &TrainConfig,
    lambda_grid: &[f64],
    alpha_grid: &[f64],
) -> Result<LambdaSearch> {
    if lambda_grid.is_empty() || alpha_grid.is_empty() {
        return Err(Error::invalid("λ and α grids must be non-empty"));
    }
    let uses_alpha =
        base_config.variant.uses_feature_reg() && base_config.feature_reg_graph == FeatureRegGraph::Correlation;
    let mut lambdas = lambda_grid.to_vec();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let mut alphas = if uses_alpha {
        alpha_grid.to_vec()
    } else {
        vec![base_config.alpha]
    };
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();

    let cells: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| alphas.iter().map(move |&a| (l, a)))
        .collect();
    let table: Vec<GridCell> = cells
        .par_iter()
        .map(|&(lambda, alpha)| {
            let cfg = with_lambda(base_config, lambda, alpha);
            let (_, report) = train(dataset, &cfg)?;
            log::info!(
                "{} λ={lambda} α={alpha}: val acc {:.4}",
                cfg.variant,
                report.outcome.val_accuracy
            );
            Ok(GridCell {
                lambda,
                alpha,
                val_accuracy: report.outcome.val_accuracy,
                val_loss: report.outcome.best_val_loss,
                test_accuracy: report.outcome.test_accuracy,
            })
        })
        .collect::<Result<_>>()?;

    let mut best_cell = 0;
    for (i, cell) in table.iter().enumerate() {
        if cell.val_accuracy > table[best_cell].val_accuracy {
            best_cell = i;
        }
    }
    let chosen = &table[best_cell];
    Ok(LambdaSearch {
        best: with_lambda(base_config, chosen.lambda, chosen.alpha),
        best_cell,
        table,
    })
}

/// Configuration used for finite-difference checks of `variant`: both
/// regularizers at weight 1, the combined variant on the label-correlation
/// graph with α = 0.5 so that the feature graph has negative entries.
pub fn gradcheck_config(variant: Variant) -> TrainConfig {
    TrainConfig {
        variant,
        lambda_label: 1.0,
        lambda_feature: 1.0,
        alpha: 0.5,
        feature_reg_graph: if variant == Variant::GlgcnFl {
            FeatureRegGraph::Correlation
        } else {
            FeatureRegGraph::Similarity
        },
        hidden_dims: vec![4],
        bias: true,
        normalize_features: false,
        ..TrainConfig::default()
    }
}

/// Compares analytic and central-difference gradients at the Glorot
/// initialization drawn from `config.seed`.
pub fn gradcheck(dataset: &Dataset, config: &TrainConfig, epsilon: f64) -> Result<GradCheckReport> {
    config.validate()?;
    let prepared = Prepared::new(dataset, config)?;
    let objective = prepared.objective(config);
    let params = ModelParams::glorot(&config.layer_dims(dataset), config.bias, &mut seeded_rng(config.seed))?;
    finite_diff_check(
        &objective,
        &prepared.a_hat,
        &prepared.features,
        dataset.labels(),
        &dataset.train,
        &params,
        epsilon,
    )
}

/// [`gradcheck`] for each variant on the six-node fixture.
pub fn gradcheck_suite(variants: &[Variant], epsilon: f64) -> Result<Vec<(Variant, GradCheckReport)>> {
    let dataset = six_node_fixture();
    variants
        .iter()
        .map(|&v| Ok((v, gradcheck(&dataset, &gradcheck_config(v), epsilon)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;

    fn small_params() -> ModelParams {
        ModelParams::glorot(&[3, 4, 2], false, &mut seeded_rng(5)).unwrap()
    }

    fn zero_grads(p: &ModelParams) -> Gradients {
        Gradients {
            weights: p
                .weights()
                .iter()
                .map(|w| DenseMatrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: Vec::new(),
        }
    }

    #[test]
    fn adam_zero_gradient_leaves_params() {
        let mut p = small_params();
        let before = p.clone();
        let mut st = AdamState::new(&p);
        let grads = zero_grads(&p);
        adam_step(&mut p, &grads, &mut st, 0.01).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn adam_first_step_moves_by_about_lr() {
        // m̂ = g, v̂ = g², so the step is lr · g / (|g| + ε) ≈ lr · sign(g)
        for g in [1e-3, 0.5, 40.0, -7.0] {
            let mut p = small_params();
            let before = p.clone();
            let mut grads = zero_grads(&p);
            grads.weights[0].set(0, 0, g);
            let mut st = AdamState::new(&p);
            adam_step(&mut p, &grads, &mut st, 0.01).unwrap();
            let moved = p.weights()[0].get(0, 0) - before.weights()[0].get(0, 0);
            let expected = -0.01 * g / (g.abs() + 1e-8);
            assert!((moved - expected).abs() < 1e-15, "g={g}: {moved} vs {expected}");
        }
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut p = small_params();
            let mut st = AdamState::new(&p);
            let mut grads = zero_grads(&p);
            for k in 0..5 {
                grads.weights[1].set(1, 1, (k as f64).sin());
                adam_step(&mut p, &grads, &mut st, 0.05).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn adam_rejects_shape_mismatch() {
        let mut p = small_params();
        let mut st = AdamState::new(&p);
        let bad = Gradients {
            weights: vec![DenseMatrix::zeros(3, 4), DenseMatrix::zeros(4, 3)],
            biases: Vec::new(),
        };
        assert!(adam_step(&mut p, &bad, &mut st, 0.01).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        ok.validate().unwrap();
        for bad in [
            TrainConfig {
                lambda_label: -1.0,
                ..ok.clone()
            },
            TrainConfig {
                dropout_rate: 1.0,
                ..ok.clone()
            },
            TrainConfig {
                max_epochs: 0,
                ..ok.clone()
            },
            TrainConfig {
                patience: 0,
                ..ok.clone()
            },
            TrainConfig {
                feature_layer: Some(2),
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn config_json_round_trips() {
        let cfg = TrainConfig {
            variant: Variant::GlgcnFl,
            feature_reg_graph: FeatureRegGraph::Correlation,
            feature_layer: Some(1),
            ..TrainConfig::default()
        };
        let back: TrainConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        // missing fields fall back to defaults
        let partial: TrainConfig = serde_json::from_str(r#"{"variant":"glgcn-l"}"#).unwrap();
        assert_eq!(partial.variant, Variant::GlgcnL);
        assert_eq!(partial.hidden_dims, vec![16]);
    }

    #[test]
    fn evaluate_counts_matches() {
        let ds = six_node_fixture();
        // W⁰ = 0 and W¹ = 0 give uniform Z, so everything is predicted class 0
        let params = ModelParams::new(vec![DenseMatrix::zeros(3, 2), DenseMatrix::zeros(2, 2)], vec![]).unwrap();
        let cfg = TrainConfig::default();
        // train = {0,1,3,4}: two of class 0
        assert_eq!(evaluate(&params, &ds, &cfg, Split::Train).unwrap(), 0.5);
        assert_eq!(evaluate(&params, &ds, &cfg, Split::Val).unwrap(), 1.0);
        assert_eq!(evaluate(&params, &ds, &cfg, Split::Test).unwrap(), 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (variant, report) in gradcheck_suite(&Variant::ALL, 1e-5).unwrap() {
            assert!(report.max_rel_error < 1e-6, "{variant}: {report:?}");
        }
    }

    #[test]
    fn gradients_match_for_other_settings() {
        let ds = six_node_fixture();
        let cases = [
            TrainConfig {
                feature_reg_graph: FeatureRegGraph::Correlation,
                ..gradcheck_config(Variant::GlgcnF)
            },
            TrainConfig {
                label_reg_target: LabelRegTarget::Logits,
                ..gradcheck_config(Variant::GlgcnL)
            },
            TrainConfig {
                hidden_dims: vec![5, 3],
                feature_layer: Some(1),
                ..gradcheck_config(Variant::GlgcnFl)
            },
            TrainConfig {
                similarity: SimilarityKind::Knn,
                knn_k: 2,
                normalize_features: true,
                ..gradcheck_config(Variant::GlgcnFl)
            },
            TrainConfig {
                normalize_similarity: true,
                bias: false,
                seed: 3,
                ..gradcheck_config(Variant::GlgcnL)
            },
        ];
        for cfg in cases {
            let report = gradcheck(&ds, &cfg, 1e-5).unwrap();
            assert!(report.max_rel_error < 1e-6, "{cfg:?}: {report:?}");
        }
    }

    #[test]
    fn empty_split_is_an_error() {
        let mut ds = six_node_fixture();
        ds.test.clear();
        let params = small_params();
        assert!(evaluate(&params, &ds, &TrainConfig::default(), Split::Test).is_err());
        ds.train.clear();
        assert!(train(&ds, &TrainConfig::default()).is_err());
    }
}
