//! Graph-convolution layer and the graph-convolutional autoencoder.
//!
//! A layer computes `Ahat * (X * W)` with no bias; the propagation matrix
//! `Ahat` is fixed per method and shared by every layer. The autoencoder
//! stacks layers symmetrically: relu-activated encoder layers down to a
//! sigmoid latent of width `latent`, then relu-activated decoder layers
//! back up to vocabulary logits. Because all shapes are `n x features`,
//! one parameter set serves sequences of any length.
//!
//! The backward pass is hand-derived for the full objective
//! `mean-over-positions softmax cross-entropy + lambda * sum ||W||^2`
//! and is checked against central finite differences in the test suite.

pub mod model_io;

use crate::flowgraph::PropagationMatrix;
use crate::lexer::OneHotMatrix;
use crate::matrix::{relu, sigmoid, Matrix, MatrixError};
use crate::rng::PortableRng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(#[from] MatrixError),
    #[error("target list length {targets} does not match sequence length {rows}")]
    TargetMismatch { targets: usize, rows: usize },
}

/// Widths of the autoencoder stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GcaeDims {
    /// One-hot width of the input and output.
    pub vocab: usize,
    /// Hidden feature width.
    pub hidden: usize,
    /// Latent bottleneck width.
    pub latent: usize,
    /// Count of extra hidden layers in each half.
    pub depth: usize,
}

impl GcaeDims {
    pub fn new(vocab: usize, hidden: usize, latent: usize, depth: usize) -> Self {
        assert!(
            vocab > 0 && hidden > 0 && latent > 0,
            "dims must be positive"
        );
        Self {
            vocab,
            hidden,
            latent,
            depth,
        }
    }

    /// Total layer count: encoder and decoder halves of `depth + 2` each.
    pub fn layer_count(&self) -> usize {
        2 * self.depth + 4
    }
}

/// Activation applied by the decoder's last layer before the loss.
///
/// The faithful stack rectifies the output logits; `Identity` is an
/// escape hatch for feeding raw logits to the softmax instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FinalActivation {
    #[default]
    Relu,
    Identity,
}

impl FinalActivation {
    pub fn tag(self) -> &'static str {
        match self {
            FinalActivation::Relu => "relu",
            FinalActivation::Identity => "identity",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "relu" => Some(FinalActivation::Relu),
            "identity" => Some(FinalActivation::Identity),
            _ => None,
        }
    }
}

/// One layer's weight matrix, `in_features x out_features`. No bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    w: Matrix,
}

impl LayerWeights {
    /// Entries drawn uniformly from `(-s, s)` with `s = 1/sqrt(out)`,
    /// in row-major order.
    fn init(rng: &mut PortableRng, in_features: usize, out_features: usize) -> Self {
        let bound = 1.0 / (out_features as f64).sqrt();
        let data = (0..in_features * out_features)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        Self {
            w: Matrix::from_vec(in_features, out_features, data),
        }
    }

    pub fn from_matrix(w: Matrix) -> Self {
        Self { w }
    }

    pub fn weights(&self) -> &Matrix {
        &self.w
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.w
    }
}

/// All weights of the autoencoder, in the documented layer order:
/// `encoder_init`, `encoder_hidden[..]`, `encoder_final`, `decoder_init`,
/// `decoder_hidden[..]`, `decoder_final`. That order fixes initialization
/// draws, optimizer state alignment, and the model file layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GcaeParameters {
    dims: GcaeDims,
    layers: Vec<LayerWeights>,
}

impl GcaeParameters {
    pub fn dims(&self) -> GcaeDims {
        self.dims
    }

    pub fn layers(&self) -> &[LayerWeights] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerWeights] {
        &mut self.layers
    }

    pub fn from_layers(dims: GcaeDims, layers: Vec<LayerWeights>) -> Self {
        let expected = layer_shapes(dims);
        assert_eq!(layers.len(), expected.len(), "wrong layer count");
        for (layer, (inf, outf)) in layers.iter().zip(&expected) {
            assert_eq!(
                (layer.w.rows(), layer.w.cols()),
                (*inf, *outf),
                "bad layer shape"
            );
        }
        Self { dims, layers }
    }

    /// Human-readable role of the layer at `index` in the documented order.
    pub fn layer_name(&self, index: usize) -> String {
        layer_name(self.dims, index)
    }

    /// Activation of the layer at `index`.
    pub fn activation(&self, index: usize, final_act: FinalActivation) -> Activation {
        let last = self.dims.layer_count() - 1;
        let latent_layer = self.dims.depth + 1;
        if index == latent_layer {
            Activation::Sigmoid
        } else if index == last {
            match final_act {
                FinalActivation::Relu => Activation::Relu,
                FinalActivation::Identity => Activation::Identity,
            }
        } else {
            Activation::Relu
        }
    }

    /// FNV-1a over the exact bit patterns of every weight, in layer order.
    pub fn checksum(&self) -> u64 {
        let mut hash: u64 = 0xcbf29ce484222325;
        for layer in &self.layers {
            for &x in layer.w.data() {
                for b in x.to_bits().to_le_bytes() {
                    hash ^= u64::from(b);
                    hash = hash.wrapping_mul(0x100000001b3);
                }
            }
        }
        hash
    }
}

fn layer_shapes(dims: GcaeDims) -> Vec<(usize, usize)> {
    let mut shapes = Vec::with_capacity(dims.layer_count());
    shapes.push((dims.vocab, dims.hidden));
    shapes.extend(std::iter::repeat_n((dims.hidden, dims.hidden), dims.depth));
    shapes.push((dims.hidden, dims.latent));
    shapes.push((dims.latent, dims.hidden));
    shapes.extend(std::iter::repeat_n((dims.hidden, dims.hidden), dims.depth));
    shapes.push((dims.hidden, dims.vocab));
    shapes
}

fn layer_name(dims: GcaeDims, index: usize) -> String {
    let d = dims.depth;
    match index {
        0 => "encoder_init".to_string(),
        k if k <= d => format!("encoder_hidden_{}", k - 1),
        k if k == d + 1 => "encoder_final".to_string(),
        k if k == d + 2 => "decoder_init".to_string(),
        k if k <= 2 * d + 2 => format!("decoder_hidden_{}", k - d - 3),
        _ => "decoder_final".to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

/// Fresh parameters with every weight drawn uniformly from `(-s, s)`,
/// `s = 1/sqrt(out_features)`, in the documented layer order. Deterministic
/// for a fixed seed.
pub fn init_parameters(dims: GcaeDims, rng_seed: u64) -> GcaeParameters {
    let mut rng = PortableRng::from_parts(&[rng_seed, 0x6763_6165]);
    let layers = layer_shapes(dims)
        .into_iter()
        .map(|(inf, outf)| LayerWeights::init(&mut rng, inf, outf))
        .collect();
    GcaeParameters { dims, layers }
}

/// One graph convolution: `Ahat * (X * W)`. No activation, no bias.
pub fn gc_forward(
    x: &Matrix,
    ahat: &PropagationMatrix,
    layer: &LayerWeights,
) -> Result<Matrix, NetError> {
    let support = x.matmul(&layer.w)?;
    Ok(ahat.as_matrix().matmul(&support)?)
}

/// Every intermediate of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
    latent_layer: usize,
}

impl ForwardTrace {
    /// Latent sequence `Z`, `n x latent`, sigmoid-activated.
    pub fn latent(&self) -> &Matrix {
        &self.post[self.latent_layer]
    }

    /// Reconstruction logits `R`, `n x vocab`.
    pub fn reconstruction(&self) -> &Matrix {
        self.post.last().expect("trace has layers")
    }

    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre
    }

    pub fn post_activations(&self) -> &[Matrix] {
        &self.post
    }

    /// Smallest `|pre-activation|` over every relu layer. The gradient
    /// check harness uses this to stay away from the relu kink.
    pub fn min_relu_margin(&self, params: &GcaeParameters, final_act: FinalActivation) -> f64 {
        let mut margin = f64::INFINITY;
        for (l, pre) in self.pre.iter().enumerate() {
            if params.activation(l, final_act) == Activation::Relu {
                for &x in pre.data() {
                    margin = margin.min(x.abs());
                }
            }
        }
        margin
    }
}

fn apply_activation(kind: Activation, pre: &Matrix) -> Matrix {
    match kind {
        Activation::Relu => relu(pre),
        Activation::Sigmoid => sigmoid(pre),
        Activation::Identity => pre.clone(),
    }
}

/// Full encoder/decoder pass over one method.
pub fn gcae_forward(
    x: &OneHotMatrix,
    ahat: &PropagationMatrix,
    params: &GcaeParameters,
    final_act: FinalActivation,
) -> Result<ForwardTrace, NetError> {
    let mut h = x.as_matrix().clone();
    let mut pre = Vec::with_capacity(params.layers.len());
    let mut post = Vec::with_capacity(params.layers.len());
    for (l, layer) in params.layers.iter().enumerate() {
        let s = gc_forward(&h, ahat, layer)?;
        let a = apply_activation(params.activation(l, final_act), &s);
        pre.push(s);
        h = a.clone();
        post.push(a);
    }
    Ok(ForwardTrace {
        pre,
        post,
        latent_layer: params.dims.depth + 1,
    })
}

/// Row-wise softmax with the max-shift stabilization.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(logits.rows(), logits.cols());
    for r in 0..logits.rows() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        let mut exps = vec![0.0; row.len()];
        for (k, &v) in row.iter().enumerate() {
            let e = (v - max).exp();
            exps[k] = e;
            sum += e;
        }
        for (k, e) in exps.into_iter().enumerate() {
            out.set(r, k, e / sum);
        }
    }
    out
}

/// Gradient of mean-over-positions softmax cross-entropy with respect to
/// the logits: `(softmax(R) - onehot(targets)) / n`.
pub fn softmax_ce_grad(logits: &Matrix, targets: &[usize]) -> Result<Matrix, NetError> {
    if targets.len() != logits.rows() {
        return Err(NetError::TargetMismatch {
            targets: targets.len(),
            rows: logits.rows(),
        });
    }
    let n = logits.rows() as f64;
    let mut grad = softmax_rows(logits);
    for (r, &t) in targets.iter().enumerate() {
        grad.set(r, t, grad.get(r, t) - 1.0);
    }
    Ok(grad.map(|v| v / n))
}

/// Gradients for every weight matrix, aligned with the documented layer
/// order of [`GcaeParameters`].
#[derive(Debug, Clone)]
pub struct GcaeGradients {
    pub layers: Vec<Matrix>,
}

impl GcaeGradients {
    /// Error unless this gradient set is shape-aligned with `params`.
    pub fn check_shapes(&self, params: &GcaeParameters) -> Result<(), NetError> {
        if self.layers.len() != params.layers.len() {
            return Err(NetError::ShapeMismatch(MatrixError::DimensionMismatch(
                self.layers.len(),
                0,
                params.layers.len(),
                0,
            )));
        }
        for (g, p) in self.layers.iter().zip(&params.layers) {
            if g.rows() != p.w.rows() || g.cols() != p.w.cols() {
                return Err(NetError::ShapeMismatch(MatrixError::DimensionMismatch(
                    g.rows(),
                    g.cols(),
                    p.w.rows(),
                    p.w.cols(),
                )));
            }
        }
        Ok(())
    }
}

/// Exact gradients of
/// `mean-over-positions softmax cross-entropy(R, targets) + lambda * sum ||W||^2`
/// with respect to every weight matrix. The relu subgradient at zero is
/// taken as zero; the L2 term contributes `2 * lambda * W` per layer.
pub fn gcae_backward(
    trace: &ForwardTrace,
    x: &OneHotMatrix,
    ahat: &PropagationMatrix,
    params: &GcaeParameters,
    targets: &[usize],
    l2_lambda: f64,
    final_act: FinalActivation,
) -> Result<GcaeGradients, NetError> {
    let layer_count = params.layers.len();
    assert_eq!(
        trace.post.len(),
        layer_count,
        "trace does not match parameters"
    );
    let ahat_t = ahat.as_matrix().transpose();

    // Start from dL/dR of the data term.
    let mut grad_post = softmax_ce_grad(trace.reconstruction(), targets)?;
    let mut grads: Vec<Matrix> = Vec::with_capacity(layer_count);

    for l in (0..layer_count).rev() {
        let grad_pre = match params.activation(l, final_act) {
            Activation::Relu => {
                let mask = trace.pre[l].map(|v| if v > 0.0 { 1.0 } else { 0.0 });
                grad_post.hadamard(&mask)?
            }
            Activation::Sigmoid => {
                let dsig = trace.post[l].map(|p| p * (1.0 - p));
                grad_post.hadamard(&dsig)?
            }
            Activation::Identity => grad_post,
        };
        let propagated = ahat_t.matmul(&grad_pre)?;
        let h_in = if l == 0 {
            x.as_matrix()
        } else {
            &trace.post[l - 1]
        };
        let mut grad_w = h_in.transpose().matmul(&propagated)?;
        grad_w.add_scaled(&params.layers[l].w, 2.0 * l2_lambda);
        grads.push(grad_w);
        grad_post = propagated.matmul(&params.layers[l].w.transpose())?;
    }

    grads.reverse();
    Ok(GcaeGradients { layers: grads })
}
