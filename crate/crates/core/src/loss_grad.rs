//! Loss terms, the analytic backward pass, and a central-difference checker.
//!
//! The objective for every variant is
//!
//! ```text
//! total = CE(Z) + λ_L · Σ_ij S_ij ‖Z_i − Z_j‖² + λ_F · Σ_ij G_ij ‖X^(l)_i − X^(l)_j‖²
//! ```
//!
//! where `G` is either the similarity graph `S` or the label-correlation
//! matrix `C`, and `X^(l)` is a hidden representation (the last one by
//! default). `gcn` keeps only the cross-entropy, `glgcn-l` adds the label
//! term, `glgcn-f` the feature term and `glgcn-fl` both.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{gcn_forward, ForwardTrace, ModelParams};
use crate::numerics::{DenseMatrix, SparseMatrix};

/// Lower clamp on probabilities before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Gcn,
    GlgcnF,
    GlgcnL,
    GlgcnFl,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Gcn, Variant::GlgcnF, Variant::GlgcnL, Variant::GlgcnFl];

    pub fn uses_label_reg(self) -> bool {
        matches!(self, Variant::GlgcnL | Variant::GlgcnFl)
    }

    pub fn uses_feature_reg(self) -> bool {
        matches!(self, Variant::GlgcnF | Variant::GlgcnFl)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Gcn => "gcn",
            Variant::GlgcnF => "glgcn-f",
            Variant::GlgcnL => "glgcn-l",
            Variant::GlgcnFl => "glgcn-fl",
        }
    }

    /// Row label used in benchmark tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Variant::Gcn => "GCN",
            Variant::GlgcnF => "gLGCN-F",
            Variant::GlgcnL => "gLGCN-L",
            Variant::GlgcnFl => "gLGCN-F-L",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown variant {s:?}; expected gcn, glgcn-f, glgcn-l or glgcn-fl"
                ))
            })
    }
}

/// What the label-side regularizer smooths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelRegTarget {
    /// Softmax output `Z`.
    #[default]
    Probabilities,
    /// Pre-softmax scores; ablation only.
    Logits,
}

/// Variant, weights and graphs that define the training objective.
#[derive(Clone, Copy, Debug)]
pub struct Objective<'a> {
    pub variant: Variant,
    pub lambda_label: f64,
    pub lambda_feature: f64,
    /// Graph for the label-side term.
    pub similarity: &'a SparseMatrix,
    /// Graph for the feature-side term: `S` or the label correlation `C`.
    pub feature_graph: &'a SparseMatrix,
    pub label_target: LabelRegTarget,
    /// Hidden layer `l ∈ 1..=K` regularized by the feature term; `None` means `K`.
    pub feature_layer: Option<usize>,
}

impl<'a> Objective<'a> {
    /// Plain cross-entropy objective.
    pub fn gcn(graph: &'a SparseMatrix) -> Self {
        Objective {
            variant: Variant::Gcn,
            lambda_label: 0.0,
            lambda_feature: 0.0,
            similarity: graph,
            feature_graph: graph,
            label_target: LabelRegTarget::Probabilities,
            feature_layer: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_label", self.lambda_label),
            ("lambda_feature", self.lambda_feature),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// The label term is evaluated only when the variant has it and its
    /// weight is non-zero; a zero weight removes the term entirely.
    pub fn label_active(&self) -> bool {
        self.variant.uses_label_reg() && self.lambda_label != 0.0
    }

    pub fn feature_active(&self) -> bool {
        self.variant.uses_feature_reg() && self.lambda_feature != 0.0
    }

    fn resolve_feature_layer(&self, hidden_layers: usize) -> Result<usize> {
        let l = self.feature_layer.unwrap_or(hidden_layers);
        if l == 0 || l > hidden_layers {
            return Err(Error::invalid(format!(
                "feature regularizer layer {l} not in 1..={hidden_layers}"
            )));
        }
        Ok(l)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub cross_entropy: f64,
    pub reg_label: f64,
    pub reg_feature: f64,
    pub total: f64,
    pub lambda_label: f64,
    pub lambda_feature: f64,
}

/// Per-tensor gradients, congruent with [`ModelParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DenseMatrix>,
    pub biases: Vec<DenseMatrix>,
}

impl Gradients {
    pub fn tensors(&self) -> impl Iterator<Item = &DenseMatrix> {
        self.weights.iter().chain(&self.biases)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(DenseMatrix::is_finite)
    }
}

fn check_mask(labels: &[Option<usize>], mask: &[usize], rows: usize, classes: usize) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::invalid("cross-entropy over an empty node set"));
    }
    if labels.len() != rows {
        return Err(Error::shape(
            "cross_entropy",
            format!("{} labels for {rows} rows", labels.len()),
        ));
    }
    for &i in mask {
        match labels.get(i).copied().flatten() {
            Some(c) if c < classes => {}
            Some(c) => return Err(Error::invalid(format!("node {i} has class {c} >= {classes}"))),
            None => return Err(Error::UnlabeledTrainingNode { node: i }),
        }
    }
    Ok(())
}

/// `−Σ_{i ∈ mask} ln Z_{i, y_i}` with probabilities clamped at [`PROB_FLOOR`].
pub fn cross_entropy_masked(z: &DenseMatrix, labels: &[Option<usize>], mask: &[usize]) -> Result<f64> {
    check_mask(labels, mask, z.rows(), z.cols())?;
    let mut loss = 0.0;
    for &i in mask {
        let y = labels[i].expect("checked");
        loss -= z.get(i, y).max(PROB_FLOOR).ln();
    }
    Ok(loss)
}

/// `Σ_ij S_ij ‖M_i − M_j‖²` over all ordered pairs, one pass over the stored
/// entries of `S`.
pub fn laplacian_reg(m: &DenseMatrix, s: &SparseMatrix) -> Result<f64> {
    if s.dim() != m.rows() {
        return Err(Error::shape(
            "laplacian_reg",
            format!("S is {0}x{0} but M has {1} rows", s.dim(), m.rows()),
        ));
    }
    let mut total = 0.0;
    for (i, j, w) in s.iter() {
        let d2: f64 = m.row(i).iter().zip(m.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
        total += w * d2;
    }
    Ok(total)
}

/// Gradient of [`laplacian_reg`] with respect to `M`. Each stored entry
/// `(i, j, w)` contributes `2w(M_i − M_j)` to row `i` and the negation to
/// row `j`; for symmetric `S` this totals `4 L M`.
pub fn laplacian_reg_grad(m: &DenseMatrix, s: &SparseMatrix) -> Result<DenseMatrix> {
    if s.dim() != m.rows() {
        return Err(Error::shape(
            "laplacian_reg_grad",
            format!("S is {0}x{0} but M has {1} rows", s.dim(), m.rows()),
        ));
    }
    let cols = m.cols();
    let mut g = DenseMatrix::zeros(m.rows(), cols);
    let mut diff = vec![0.0; cols];
    for (i, j, w) in s.iter() {
        for ((d, a), b) in diff.iter_mut().zip(m.row(i)).zip(m.row(j)) {
            *d = 2.0 * w * (a - b);
        }
        for (o, d) in g.row_mut(i).iter_mut().zip(&diff) {
            *o += d;
        }
        for (o, d) in g.row_mut(j).iter_mut().zip(&diff) {
            *o -= d;
        }
    }
    Ok(g)
}

fn label_reg_input<'t>(objective: &Objective<'_>, trace: &'t ForwardTrace) -> &'t DenseMatrix {
    match objective.label_target {
        LabelRegTarget::Probabilities => &trace.z,
        LabelRegTarget::Logits => trace.logits(),
    }
}

pub fn total_loss(
    objective: &Objective<'_>,
    trace: &ForwardTrace,
    labels: &[Option<usize>],
    train: &[usize],
) -> Result<LossBreakdown> {
    objective.validate()?;
    let cross_entropy = cross_entropy_masked(&trace.z, labels, train)?;
    let reg_label = if objective.label_active() {
        laplacian_reg(label_reg_input(objective, trace), objective.similarity)?
    } else {
        0.0
    };
    let reg_feature = if objective.feature_active() {
        let l = objective.resolve_feature_layer(trace.hidden.len())?;
        laplacian_reg(&trace.hidden[l - 1], objective.feature_graph)?
    } else {
        0.0
    };
    // weights of terms the objective does not evaluate are reported as 0
    let lambda_label = if objective.label_active() {
        objective.lambda_label
    } else {
        0.0
    };
    let lambda_feature = if objective.feature_active() {
        objective.lambda_feature
    } else {
        0.0
    };
    Ok(LossBreakdown {
        cross_entropy,
        reg_label,
        reg_feature,
        total: cross_entropy + lambda_label * reg_label + lambda_feature * reg_feature,
        lambda_label,
        lambda_feature,
    })
}

/// Analytic gradient of [`total_loss`] with respect to every parameter.
///
/// At the output layer the cross-entropy and softmax combine to
/// `Z − Y` on the training rows. The label term's gradient `g = ∂reg/∂Z`
/// is pulled back through the softmax Jacobian row by row,
/// `Z_i ⊙ g_i − (g_i · Z_i) Z_i`. From there each layer propagates
/// `∂/∂(XW) = Ãᵀ ∂/∂pre`, `∂/∂W = Xᵀ ∂/∂(XW)` and `∂/∂X = ∂/∂(XW) Wᵀ`,
/// with the stored dropout scales and ReLU masks replayed on the way down.
/// The feature term's gradient joins at its hidden layer.
pub fn backward(
    objective: &Objective<'_>,
    trace: &ForwardTrace,
    params: &ModelParams,
    a_hat: &SparseMatrix,
    labels: &[Option<usize>],
    train: &[usize],
) -> Result<Gradients> {
    objective.validate()?;
    let layers = params.weights().len();
    if trace.num_layers() != layers || trace.hidden.len() + 1 != layers {
        return Err(Error::shape(
            "backward",
            format!("trace has {} layers, params {}", trace.num_layers(), layers),
        ));
    }
    let z = &trace.z;
    if z.cols() != params.num_classes() {
        return Err(Error::shape(
            "backward",
            format!("trace has {} classes, params {}", z.cols(), params.num_classes()),
        ));
    }
    check_mask(labels, train, z.rows(), z.cols())?;

    let mut d_pre = DenseMatrix::zeros(z.rows(), z.cols());
    for &i in train {
        let y = labels[i].expect("checked");
        for (c, (d, &p)) in d_pre.row_mut(i).iter_mut().zip(z.row(i)).enumerate() {
            *d += p - if c == y { 1.0 } else { 0.0 };
        }
    }

    if objective.label_active() {
        let lambda = objective.lambda_label;
        match objective.label_target {
            LabelRegTarget::Probabilities => {
                let g = laplacian_reg_grad(z, objective.similarity)?;
                for r in 0..z.rows() {
                    let zr = z.row(r);
                    let gr = g.row(r);
                    let dot: f64 = zr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for ((d, &zv), &gv) in d_pre.row_mut(r).iter_mut().zip(zr).zip(gr) {
                        *d += lambda * zv * (gv - dot);
                    }
                }
            }
            LabelRegTarget::Logits => {
                let g = laplacian_reg_grad(trace.logits(), objective.similarity)?;
                d_pre.add_scaled(&g, lambda)?;
            }
        }
    }

    let feature_layer = if objective.feature_active() {
        Some(objective.resolve_feature_layer(trace.hidden.len())?)
    } else {
        None
    };

    let mut weight_grads = vec![DenseMatrix::zeros(0, 0); layers];
    let mut bias_grads = if params.has_bias() {
        vec![DenseMatrix::zeros(0, 0); layers]
    } else {
        Vec::new()
    };

    for k in (0..layers).rev() {
        if params.has_bias() {
            bias_grads[k] = d_pre.column_sums();
        }
        let d_xw = a_hat.transpose_spmm(&d_pre)?;
        weight_grads[k] = trace.inputs[k].transpose_matmul(&d_xw)?;
        if k == 0 {
            break;
        }
        // Gradient with respect to X^(k), the (pre-dropout) output of layer k-1.
        let mut d_hidden = d_xw.matmul_transpose(&params.weights()[k])?;
        if let Some(mask) = &trace.dropout_masks[k] {
            d_hidden.hadamard_in_place(mask)?;
        }
        if feature_layer == Some(k) {
            let g = laplacian_reg_grad(&trace.hidden[k - 1], objective.feature_graph)?;
            d_hidden.add_scaled(&g, objective.lambda_feature)?;
        }
        trace.relu_masks[k - 1].gate(&mut d_hidden);
        d_pre = d_hidden;
    }

    Ok(Gradients {
        weights: weight_grads,
        biases: bias_grads,
    })
}

/// Where the analytic and numeric gradients disagree most.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Index into `weights ++ biases`, then row and column.
    pub worst_entry: (usize, usize, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub entries_checked: usize,
}

/// `|a − n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares [`backward`] against central differences of [`total_loss`],
/// perturbing every parameter entry by `±epsilon` in turn. Dropout is off.
pub fn finite_diff_check(
    objective: &Objective<'_>,
    a_hat: &SparseMatrix,
    features: &DenseMatrix,
    labels: &[Option<usize>],
    train: &[usize],
    params: &ModelParams,
    epsilon: f64,
) -> Result<GradCheckReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")));
    }
    let loss_at = |p: &ModelParams| -> Result<f64> {
        let trace = gcn_forward(a_hat, features, p, None)?;
        Ok(total_loss(objective, &trace, labels, train)?.total)
    };

    let trace = gcn_forward(a_hat, features, params, None)?;
    let grads = backward(objective, &trace, params, a_hat, labels, train)?;
    let analytic: Vec<&DenseMatrix> = grads.tensors().collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_entry: (0, 0, 0),
        analytic: 0.0,
        numeric: 0.0,
        entries_checked: 0,
    };
    let mut work = params.clone();
    for (t, grad) in analytic.iter().enumerate() {
        let (rows, cols) = grad.shape();
        for r in 0..rows {
            for c in 0..cols {
                let original = work.tensors().nth(t).expect("index").get(r, c);
                set_entry(&mut work, t, r, c, original + epsilon);
                let plus = loss_at(&work)?;
                set_entry(&mut work, t, r, c, original - epsilon);
                let minus = loss_at(&work)?;
                set_entry(&mut work, t, r, c, original);

                let numeric = (plus - minus) / (2.0 * epsilon);
                let a = grad.get(r, c);
                let err = relative_error(a, numeric);
                report.entries_checked += 1;
                if err > report.max_rel_error || report.entries_checked == 1 {
                    report.max_rel_error = err;
                    report.worst_entry = (t, r, c);
                    report.analytic = a;
                    report.numeric = numeric;
                }
            }
        }
    }
    Ok(report)
}

fn set_entry(params: &mut ModelParams, tensor: usize, r: usize, c: usize, v: f64) {
    params
        .tensors_mut()
        .nth(tensor)
        .expect("tensor index in range")
        .set(r, c, v);
}
