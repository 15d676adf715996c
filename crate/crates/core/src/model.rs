//! K-layer GCN forward pass.
//!
//! Hidden layers compute `X^(k+1) = ReLU(Ã X^(k) W^(k))`; the output layer
//! computes `Z = softmax(Ã X^(K) W^(K))`. Products are evaluated as
//! `Ã (X W)`, which keeps the wide first-layer product dense-times-narrow.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::argmax_lowest;
use crate::numerics::{glorot_init_with, relu, softmax_rows, DenseMatrix, ReluMask, Rng64, SparseMatrix, SparseRows};

/// Weights `W^(0) … W^(K)` and optional per-layer biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    weights: Vec<DenseMatrix>,
    /// Either empty or one `1 × cols` row per layer.
    biases: Vec<DenseMatrix>,
}

impl ModelParams {
    pub fn new(weights: Vec<DenseMatrix>, biases: Vec<DenseMatrix>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("a model needs at least one weight matrix"));
        }
        for (k, pair) in weights.windows(2).enumerate() {
            if pair[0].cols() != pair[1].rows() {
                return Err(Error::shape(
                    "ModelParams",
                    format!(
                        "W^({k}) is {}x{} but W^({}) is {}x{}",
                        pair[0].rows(),
                        pair[0].cols(),
                        k + 1,
                        pair[1].rows(),
                        pair[1].cols()
                    ),
                ));
            }
        }
        if !biases.is_empty() {
            if biases.len() != weights.len() {
                return Err(Error::shape(
                    "ModelParams",
                    format!("{} biases for {} layers", biases.len(), weights.len()),
                ));
            }
            for (k, (b, w)) in biases.iter().zip(&weights).enumerate() {
                if b.shape() != (1, w.cols()) {
                    return Err(Error::shape(
                        "ModelParams",
                        format!("bias {k} is {}x{}, expected 1x{}", b.rows(), b.cols(), w.cols()),
                    ));
                }
            }
        }
        Ok(ModelParams { weights, biases })
    }

    /// Glorot-uniform weights for `layer_dims = [p, d_1, …, d_K, d]`; biases,
    /// when requested, start at zero.
    pub fn glorot(layer_dims: &[usize], bias: bool, rng: &mut impl Rng) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::invalid(format!(
                "layer dims {layer_dims:?} need at least two positive entries"
            )));
        }
        let weights: Vec<_> = layer_dims
            .windows(2)
            .map(|w| glorot_init_with(w[0], w[1], rng))
            .collect();
        let biases = if bias {
            layer_dims[1..].iter().map(|&c| DenseMatrix::zeros(1, c)).collect()
        } else {
            Vec::new()
        };
        ModelParams::new(weights, biases)
    }

    pub fn weights(&self) -> &[DenseMatrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[DenseMatrix] {
        &self.biases
    }

    pub fn has_bias(&self) -> bool {
        !self.biases.is_empty()
    }

    /// Number of hidden layers, K.
    pub fn hidden_layers(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.weights[0].rows()];
        dims.extend(self.weights.iter().map(DenseMatrix::cols));
        dims
    }

    pub fn num_classes(&self) -> usize {
        self.weights.last().expect("non-empty").cols()
    }

    /// All parameter tensors: weights first, then biases.
    pub fn tensors(&self) -> impl Iterator<Item = &DenseMatrix> {
        self.weights.iter().chain(&self.biases)
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut DenseMatrix> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().map(|t| t.rows() * t.cols()).sum()
    }
}

/// Post-dropout input of one layer. The first layer reads the features in
/// row-sparse form; later layers read dense hidden activations.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerInput {
    Sparse(SparseRows),
    Dense(DenseMatrix),
}

impl LayerInput {
    pub fn matmul(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            LayerInput::Sparse(s) => s.matmul(w),
            LayerInput::Dense(d) => d.matmul(w),
        }
    }

    /// `selfᵀ · d`.
    pub fn transpose_matmul(&self, d: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            LayerInput::Sparse(s) => s.transpose_matmul(d),
            LayerInput::Dense(x) => x.transpose_matmul(d),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            LayerInput::Sparse(s) => s.to_dense(),
            LayerInput::Dense(d) => d.clone(),
        }
    }
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// Input to each of the K+1 layers, after dropout.
    pub inputs: Vec<LayerInput>,
    /// Inverted-dropout scale factors applied to each layer input. Always
    /// `None` for the first layer, whose input receives no gradient.
    pub dropout_masks: Vec<Option<DenseMatrix>>,
    /// `Ã X W (+ b)` for each layer; the last one holds the logits.
    pub pre_activations: Vec<DenseMatrix>,
    pub relu_masks: Vec<ReluMask>,
    /// `X^(1) … X^(K)` before dropout.
    pub hidden: Vec<DenseMatrix>,
    pub z: DenseMatrix,
}

impl ForwardTrace {
    pub fn logits(&self) -> &DenseMatrix {
        self.pre_activations.last().expect("at least one layer")
    }

    pub fn num_layers(&self) -> usize {
        self.pre_activations.len()
    }

    /// `X^(l)` for `l` in `1..=K`.
    pub fn hidden_layer(&self, l: usize) -> Option<&DenseMatrix> {
        l.checked_sub(1).and_then(|i| self.hidden.get(i))
    }
}

/// Dropout settings for a training-mode forward pass.
pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut Rng64,
}

fn apply_dropout(x: &DenseMatrix, rate: f64, rng: &mut Rng64) -> (DenseMatrix, DenseMatrix) {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let mut mask = DenseMatrix::zeros(x.rows(), x.cols());
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for ((m, o), &v) in mask.as_mut_slice().iter_mut().zip(out.as_mut_slice()).zip(x.as_slice()) {
        // Zero inputs stay zero whatever the draw, so they consume no randomness.
        if v == 0.0 {
            continue;
        }
        if rng.gen::<f64>() < keep {
            *m = scale;
            *o = v * scale;
        }
    }
    (out, mask)
}

pub fn gcn_forward(
    a_hat: &SparseMatrix,
    x: &DenseMatrix,
    params: &ModelParams,
    dropout: Option<Dropout<'_>>,
) -> Result<ForwardTrace> {
    gcn_forward_rows(a_hat, &SparseRows::from_dense(x), params, dropout)
}

/// [`gcn_forward`] on features already in row-sparse form.
pub fn gcn_forward_rows(
    a_hat: &SparseMatrix,
    x: &SparseRows,
    params: &ModelParams,
    mut dropout: Option<Dropout<'_>>,
) -> Result<ForwardTrace> {
    if a_hat.dim() != x.rows() {
        return Err(Error::shape(
            "gcn_forward",
            format!("Ã is {0}x{0} but X has {1} rows", a_hat.dim(), x.rows()),
        ));
    }
    if x.cols() != params.weights[0].rows() {
        return Err(Error::shape(
            "gcn_forward",
            format!(
                "X has {} columns but W^(0) has {} rows",
                x.cols(),
                params.weights[0].rows()
            ),
        ));
    }
    if let Some(d) = &dropout {
        if !(0.0..1.0).contains(&d.rate) {
            return Err(Error::invalid(format!("dropout rate {} outside [0, 1)", d.rate)));
        }
    }

    let layers = params.weights.len();
    let mut trace = ForwardTrace {
        inputs: Vec::with_capacity(layers),
        dropout_masks: Vec::with_capacity(layers),
        pre_activations: Vec::with_capacity(layers),
        relu_masks: Vec::with_capacity(layers - 1),
        hidden: Vec::with_capacity(layers - 1),
        z: DenseMatrix::zeros(0, 0),
    };

    let mut current = DenseMatrix::zeros(0, 0);
    for (k, w) in params.weights.iter().enumerate() {
        let input = match dropout.as_mut() {
            Some(d) if d.rate > 0.0 && k == 0 => {
                let scale = 1.0 / (1.0 - d.rate);
                let keep = 1.0 - d.rate;
                let rng = &mut *d.rng;
                trace.dropout_masks.push(None);
                LayerInput::Sparse(x.map_values(|v| if rng.gen::<f64>() < keep { v * scale } else { 0.0 }))
            }
            Some(d) if d.rate > 0.0 => {
                let (dropped, mask) = apply_dropout(&current, d.rate, d.rng);
                trace.dropout_masks.push(Some(mask));
                LayerInput::Dense(dropped)
            }
            _ => {
                trace.dropout_masks.push(None);
                if k == 0 {
                    LayerInput::Sparse(x.clone())
                } else {
                    LayerInput::Dense(std::mem::replace(&mut current, DenseMatrix::zeros(0, 0)))
                }
            }
        };
        let mut pre = a_hat.spmm(&input.matmul(w)?)?;
        if let Some(b) = params.biases.get(k) {
            for r in 0..pre.rows() {
                for (p, &bv) in pre.row_mut(r).iter_mut().zip(b.as_slice()) {
                    *p += bv;
                }
            }
        }
        trace.inputs.push(input);

        if k + 1 < layers {
            let (h, mask) = relu(&pre);
            trace.relu_masks.push(mask);
            trace.hidden.push(h.clone());
            current = h;
        } else {
            trace.z = softmax_rows(&pre);
            current = DenseMatrix::zeros(0, 0);
        }
        trace.pre_activations.push(pre);
    }
    drop(current);
    Ok(trace)
}

/// Row-argmax of class probabilities, ties to the lowest class id.
pub fn predict(z: &DenseMatrix) -> Vec<usize> {
    z.row_iter().map(argmax_lowest).collect()
}
