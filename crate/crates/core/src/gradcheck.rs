//! Finite-difference verification of the autoencoder gradients.
//!
//! Central differences of the full objective (mean softmax cross-entropy
//! plus `lambda * sum ||W||^2`) against the analytic backward pass, one
//! weight at a time. Used by the test suites; kept in the crate so every
//! consumer checks the same way.

use crate::flowgraph::PropagationMatrix;
use crate::lexer::OneHotMatrix;
use crate::neuralnet::{gcae_backward, gcae_forward, FinalActivation, GcaeParameters};
use crate::training::cross_entropy;

/// Outcome of one configuration's sweep.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    /// Largest relative error over every weight entry.
    pub max_rel_error: f64,
    /// Number of entries checked.
    pub entries: usize,
    /// Smallest `|pre-activation|` seen over the relu layers; configurations
    /// too close to the kink should be resampled by the caller.
    pub relu_margin: f64,
}

/// Relative error with a floor: tiny values compare absolutely against it.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / scale
}

/// Full objective evaluated at `params`.
pub fn objective(
    params: &GcaeParameters,
    x: &OneHotMatrix,
    ahat: &PropagationMatrix,
    targets: &[usize],
    lambda: f64,
    final_act: FinalActivation,
) -> f64 {
    let trace = gcae_forward(x, ahat, params, final_act).expect("shapes fixed by caller");
    let data = cross_entropy(trace.reconstruction(), targets).expect("target length fixed");
    let l2: f64 = params.layers().iter().map(|l| l.weights().frob_sq()).sum();
    data + lambda * l2
}

/// Sweep every weight entry with a central difference of step `fd_step`.
pub fn check_gradients(
    params: &GcaeParameters,
    x: &OneHotMatrix,
    ahat: &PropagationMatrix,
    targets: &[usize],
    lambda: f64,
    final_act: FinalActivation,
    fd_step: f64,
) -> GradCheckReport {
    let trace = gcae_forward(x, ahat, params, final_act).expect("shapes fixed by caller");
    let relu_margin = trace.min_relu_margin(params, final_act);
    let analytic = gcae_backward(&trace, x, ahat, params, targets, lambda, final_act)
        .expect("trace from same inputs");

    let mut max_rel_error: f64 = 0.0;
    let mut entries = 0;
    for layer_ix in 0..params.layers().len() {
        let rows = params.layers()[layer_ix].weights().rows();
        let cols = params.layers()[layer_ix].weights().cols();
        for r in 0..rows {
            for c in 0..cols {
                let nudge = |delta: f64| {
                    let mut p = params.clone();
                    let w = p.layers_mut()[layer_ix].weights_mut();
                    w.set(r, c, w.get(r, c) + delta);
                    objective(&p, x, ahat, targets, lambda, final_act)
                };
                let numeric = (nudge(fd_step) - nudge(-fd_step)) / (2.0 * fd_step);
                let a = analytic.layers[layer_ix].get(r, c);
                max_rel_error = max_rel_error.max(relative_error(a, numeric));
                entries += 1;
            }
        }
    }
    GradCheckReport {
        max_rel_error,
        entries,
        relu_margin,
    }
}
