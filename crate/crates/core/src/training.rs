//! Loss, optimizer, and the per-regime training loop.
//!
//! Training is batch-size-1: every method is one sample of its own length,
//! so no padding is involved and one parameter set serves the whole corpus.
//! The optimized objective is mean-over-positions softmax cross-entropy
//! plus `lambda * sum ||W||^2`; the reported loss metric is the
//! cross-entropy term in nats.

use crate::corpus::{CorpusManifest, ManifestEntry, Split};
use crate::flowgraph::{edges_for_regime, normalize, FlowError, PropagationMatrix, Regime};
use crate::lexer::{one_hot, LexError, OneHotMatrix, Vocabulary};
use crate::matrix::Matrix;
use crate::neuralnet::{
    gcae_backward, gcae_forward, init_parameters, FinalActivation, GcaeDims, GcaeGradients,
    GcaeParameters, NetError,
};
use crate::rng::PortableRng;
use std::time::{Duration, Instant};
use thiserror::Error;

const EPOCH_SHUFFLE_STREAM: u64 = 0x65706f63;

/// Steps between training-curve samples within an epoch.
pub const CURVE_SAMPLE_INTERVAL: usize = 100;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("the {0} split is empty")]
    EmptySplit(&'static str),
    #[error("non-finite loss at epoch {epoch} on method {origin:?}")]
    NonFiniteLoss { epoch: usize, origin: String },
    #[error("method {origin:?}: {source}")]
    Graph {
        origin: String,
        #[source]
        source: FlowError,
    },
    #[error("method {origin:?}: {source}")]
    Lex {
        origin: String,
        #[source]
        source: LexError,
    },
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Everything one training run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    pub latent: usize,
    pub depth: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    pub regime: Regime,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub final_activation: FinalActivation,
}

impl TrainConfig {
    pub fn for_regime(regime: Regime) -> Self {
        Self {
            hidden: 32,
            latent: 4,
            depth: 0,
            learning_rate: 1e-3,
            l2_lambda: 1e-5,
            epochs: 5,
            seed: 1,
            regime,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            final_activation: FinalActivation::Relu,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs < 1 {
            return Err(TrainError::InvalidConfig(
                "epochs must be at least 1".into(),
            ));
        }
        if self.learning_rate <= 0.0 {
            return Err(TrainError::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        if self.l2_lambda < 0.0 {
            return Err(TrainError::InvalidConfig(
                "l2_lambda must be non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(TrainError::InvalidConfig("betas must lie in [0, 1)".into()));
        }
        if self.epsilon <= 0.0 {
            return Err(TrainError::InvalidConfig("epsilon must be positive".into()));
        }
        if self.hidden == 0 || self.latent == 0 {
            return Err(TrainError::InvalidConfig(
                "layer widths must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn dims(&self, vocab_size: usize) -> GcaeDims {
        GcaeDims::new(vocab_size, self.hidden, self.latent, self.depth)
    }
}

/// Mean over positions of `-log softmax(R_k)[target_k]`, in nats, with the
/// max-shift stabilization.
pub fn cross_entropy(logits: &Matrix, targets: &[usize]) -> Result<f64, NetError> {
    if targets.len() != logits.rows() {
        return Err(NetError::TargetMismatch {
            targets: targets.len(),
            rows: logits.rows(),
        });
    }
    let mut total = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum: f64 = row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln() + max;
        total += log_sum - row[t];
    }
    Ok(total / targets.len() as f64)
}

/// Fraction of positions whose row-argmax equals the target; argmax ties
/// resolve to the lowest index.
pub fn token_accuracy(logits: &Matrix, targets: &[usize]) -> Result<f64, NetError> {
    if targets.len() != logits.rows() {
        return Err(NetError::TargetMismatch {
            targets: targets.len(),
            rows: logits.rows(),
        });
    }
    let correct = targets
        .iter()
        .enumerate()
        .filter(|&(r, &t)| logits.row_argmax(r) == t)
        .count();
    Ok(correct as f64 / targets.len() as f64)
}

/// Adam moment estimates, one pair of matrices per weight matrix, in the
/// documented layer order.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &GcaeParameters) -> Self {
        let zero_like = |w: &Matrix| Matrix::zeros(w.rows(), w.cols());
        Self {
            m: params
                .layers()
                .iter()
                .map(|l| zero_like(l.weights()))
                .collect(),
            v: params
                .layers()
                .iter()
                .map(|l| zero_like(l.weights()))
                .collect(),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update with bias-corrected moments:
/// `m <- b1*m + (1-b1)*g`, `v <- b2*v + (1-b2)*g^2`,
/// `theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)`.
pub fn adam_step(
    params: &mut GcaeParameters,
    grads: &GcaeGradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<(), NetError> {
    grads.check_shapes(params)?;
    state.t += 1;
    let t = state.t as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);
    for (l, layer) in params.layers_mut().iter_mut().enumerate() {
        let w = layer.weights_mut();
        let g = &grads.layers[l];
        let m = &mut state.m[l];
        let v = &mut state.v[l];
        for k in 0..w.data().len() {
            let gk = g.data()[k];
            let mk = cfg.beta1 * m.data()[k] + (1.0 - cfg.beta1) * gk;
            let vk = cfg.beta2 * v.data()[k] + (1.0 - cfg.beta2) * gk * gk;
            m.data_mut()[k] = mk;
            v.data_mut()[k] = vk;
            let m_hat = mk / bias1;
            let v_hat = vk / bias2;
            w.data_mut()[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

/// Per-split metrics: per-method values plus population-sigma aggregates.
#[derive(Debug, Clone)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub per_method_loss: Vec<f64>,
    pub per_method_accuracy: Vec<f64>,
    pub mean_loss: f64,
    pub loss_std: f64,
    pub mean_accuracy: f64,
    pub accuracy_std: f64,
    pub wall_clock: Duration,
}

impl MetricsRecord {
    /// Aggregate with the population formula
    /// `sigma = sqrt(mean((x - mean)^2))`.
    pub fn aggregate(
        epoch: usize,
        per_method_loss: Vec<f64>,
        per_method_accuracy: Vec<f64>,
        wall_clock: Duration,
    ) -> Self {
        let (mean_loss, loss_std) = mean_and_population_std(&per_method_loss);
        let (mean_accuracy, accuracy_std) = mean_and_population_std(&per_method_accuracy);
        Self {
            epoch,
            per_method_loss,
            per_method_accuracy,
            mean_loss,
            loss_std,
            mean_accuracy,
            accuracy_std,
            wall_clock,
        }
    }
}

fn mean_and_population_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// A training-curve sample: running means within the epoch so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub epoch: usize,
    pub step: usize,
    pub loss: f64,
    pub accuracy: f64,
}

/// A method fully prepared for the model: targets, one-hot input, and the
/// regime's propagation matrix.
pub struct PreparedMethod {
    pub origin: String,
    pub targets: Vec<usize>,
    pub input: OneHotMatrix,
    pub propagation: PropagationMatrix,
}

/// Lex, graph, and encode one manifest entry under `regime`.
pub fn prepare_method(
    entry: &ManifestEntry,
    regime: Regime,
    vocab: &Vocabulary,
) -> Result<PreparedMethod, TrainError> {
    let seq = entry
        .token_sequence(vocab)
        .map_err(|source| TrainError::Lex {
            origin: entry.origin.clone(),
            source,
        })?;
    let graph = edges_for_regime(&seq, regime).map_err(|source| TrainError::Graph {
        origin: entry.origin.clone(),
        source,
    })?;
    let propagation = normalize(&graph);
    let input = one_hot(&seq, vocab.size()).map_err(|source| TrainError::Lex {
        origin: entry.origin.clone(),
        source,
    })?;
    Ok(PreparedMethod {
        origin: entry.origin.clone(),
        targets: seq.indices().to_vec(),
        input,
        propagation,
    })
}

fn prepare_split(
    manifest: &CorpusManifest,
    split: Split,
    regime: Regime,
    vocab: &Vocabulary,
) -> Result<Vec<PreparedMethod>, TrainError> {
    manifest
        .split_entries(split)
        .map(|e| prepare_method(e, regime, vocab))
        .collect()
}

/// Result of one training run.
pub struct FitResult {
    pub params: GcaeParameters,
    pub epoch_metrics: Vec<MetricsRecord>,
    pub curve: Vec<CurvePoint>,
}

/// Train one model on the manifest's train split.
///
/// Initial weights are a pure function of `cfg.seed` (not the regime), so
/// regime comparisons start from identical parameters. Methods are visited
/// in a fresh seed-derived shuffle every epoch, one optimizer step per
/// method. Loss and accuracy are recorded from each step's forward pass,
/// aggregated per epoch, and sampled as running means every
/// [`CURVE_SAMPLE_INTERVAL`] steps.
pub fn fit(manifest: &CorpusManifest, cfg: &TrainConfig) -> Result<FitResult, TrainError> {
    cfg.validate()?;
    let vocab = Vocabulary::builtin();
    let train = prepare_split(manifest, Split::Train, cfg.regime, &vocab)?;
    if train.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }

    let mut params = init_parameters(cfg.dims(vocab.size()), cfg.seed);
    let mut adam = AdamState::new(&params);
    let mut epoch_metrics = Vec::with_capacity(cfg.epochs);
    let mut curve = Vec::new();

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut rng = PortableRng::from_parts(&[cfg.seed, EPOCH_SHUFFLE_STREAM, epoch as u64]);
        rng.shuffle(&mut order);

        let mut losses = Vec::with_capacity(train.len());
        let mut accuracies = Vec::with_capacity(train.len());
        for (step, &idx) in order.iter().enumerate() {
            let method = &train[idx];
            let trace = gcae_forward(
                &method.input,
                &method.propagation,
                &params,
                cfg.final_activation,
            )?;
            let loss = cross_entropy(trace.reconstruction(), &method.targets)?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    origin: method.origin.clone(),
                });
            }
            let accuracy = token_accuracy(trace.reconstruction(), &method.targets)?;
            losses.push(loss);
            accuracies.push(accuracy);

            let grads = gcae_backward(
                &trace,
                &method.input,
                &method.propagation,
                &params,
                &method.targets,
                cfg.l2_lambda,
                cfg.final_activation,
            )?;
            adam_step(&mut params, &grads, &mut adam, cfg)?;

            let done = step + 1;
            if done % CURVE_SAMPLE_INTERVAL == 0 || done == train.len() {
                let (running_loss, _) = mean_and_population_std(&losses);
                let (running_acc, _) = mean_and_population_std(&accuracies);
                curve.push(CurvePoint {
                    epoch,
                    step: done,
                    loss: running_loss,
                    accuracy: running_acc,
                });
            }
        }
        epoch_metrics.push(MetricsRecord::aggregate(
            epoch,
            losses,
            accuracies,
            started.elapsed(),
        ));
    }

    Ok(FitResult {
        params,
        epoch_metrics,
        curve,
    })
}

/// Forward-only metrics over one split. Never mutates the parameters.
pub fn evaluate_split(
    params: &GcaeParameters,
    manifest: &CorpusManifest,
    cfg: &TrainConfig,
    split: Split,
) -> Result<MetricsRecord, TrainError> {
    let vocab = Vocabulary::builtin();
    let prepared = prepare_split(manifest, split, cfg.regime, &vocab)?;
    if prepared.is_empty() {
        return Err(TrainError::EmptySplit(match split {
            Split::Train => "train",
            Split::Test => "test",
        }));
    }
    let started = Instant::now();
    let mut losses = Vec::with_capacity(prepared.len());
    let mut accuracies = Vec::with_capacity(prepared.len());
    for method in &prepared {
        let trace = gcae_forward(
            &method.input,
            &method.propagation,
            params,
            cfg.final_activation,
        )?;
        losses.push(cross_entropy(trace.reconstruction(), &method.targets)?);
        accuracies.push(token_accuracy(trace.reconstruction(), &method.targets)?);
    }
    Ok(MetricsRecord::aggregate(
        cfg.epochs,
        losses,
        accuracies,
        started.elapsed(),
    ))
}

/// Forward-only metrics over the test split.
pub fn evaluate(
    params: &GcaeParameters,
    manifest: &CorpusManifest,
    cfg: &TrainConfig,
) -> Result<MetricsRecord, TrainError> {
    evaluate_split(params, manifest, cfg, Split::Test)
}
