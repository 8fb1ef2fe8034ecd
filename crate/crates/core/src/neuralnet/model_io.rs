//! Versioned plain-text model files.
//!
//! Layout: a format header, provenance fields, then every weight matrix in
//! the documented layer order, one row per line. Floats are written with
//! Rust's shortest round-trip formatting, so saving and loading is exact
//! and two identical models serialize to identical bytes.

use super::{FinalActivation, GcaeDims, GcaeParameters, LayerWeights};
use crate::flowgraph::Regime;
use crate::matrix::Matrix;
use thiserror::Error;

pub const FORMAT_HEADER: &str = "gcae-model v1";

#[derive(Debug, Error, PartialEq)]
pub enum ModelIoError {
    #[error("not a model file: expected header {FORMAT_HEADER:?}, got {0:?}")]
    BadHeader(String),
    #[error("model file line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(
        "model was trained against vocabulary {expected:016x}, current vocabulary is {actual:016x}"
    )]
    ChecksumMismatch { expected: u64, actual: u64 },
}

/// A trained model plus the provenance needed to use it safely.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub dims: GcaeDims,
    pub vocab_checksum: u64,
    pub seed: u64,
    pub regime: Regime,
    pub final_activation: FinalActivation,
    pub params: GcaeParameters,
}

impl ModelFile {
    /// Error unless the model was trained against the given vocabulary.
    pub fn verify_vocab(&self, actual_checksum: u64) -> Result<(), ModelIoError> {
        if self.vocab_checksum != actual_checksum {
            return Err(ModelIoError::ChecksumMismatch {
                expected: self.vocab_checksum,
                actual: actual_checksum,
            });
        }
        Ok(())
    }
}

pub fn to_string(model: &ModelFile) -> String {
    let mut out = String::new();
    out.push_str(FORMAT_HEADER);
    out.push('\n');
    out.push_str(&format!("vocab_checksum {:016x}\n", model.vocab_checksum));
    let d = model.dims;
    out.push_str(&format!(
        "dims {} {} {} {}\n",
        d.vocab, d.hidden, d.latent, d.depth
    ));
    out.push_str(&format!("seed {}\n", model.seed));
    out.push_str(&format!("regime {}\n", model.regime.tag()));
    out.push_str(&format!(
        "final_activation {}\n",
        model.final_activation.tag()
    ));
    for (l, layer) in model.params.layers().iter().enumerate() {
        let w = layer.weights();
        out.push_str(&format!(
            "layer {} {} {}\n",
            model.params.layer_name(l),
            w.rows(),
            w.cols()
        ));
        for r in 0..w.rows() {
            let row: Vec<String> = w.row(r).iter().map(|x| format!("{x}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn from_string(text: &str) -> Result<ModelFile, ModelIoError> {
    let mut lines = text.lines().enumerate();
    let mut next = |expected: &str| -> Result<(usize, String), ModelIoError> {
        match lines.next() {
            Some((k, line)) => Ok((k, line.to_string())),
            None => Err(ModelIoError::Malformed {
                line: 0,
                reason: format!("missing {expected}"),
            }),
        }
    };

    let (_, header) = next("header")?;
    if header != FORMAT_HEADER {
        return Err(ModelIoError::BadHeader(header));
    }

    let parse_field = |entry: (usize, String), key: &str| -> Result<String, ModelIoError> {
        let (k, line) = entry;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| ModelIoError::Malformed {
                line: k + 1,
                reason: format!("expected {key:?} field"),
            })
    };

    let vocab_checksum =
        u64::from_str_radix(&parse_field(next("vocab_checksum")?, "vocab_checksum")?, 16).map_err(
            |e| ModelIoError::Malformed {
                line: 2,
                reason: format!("bad checksum: {e}"),
            },
        )?;

    let dims_line = parse_field(next("dims")?, "dims")?;
    let dims_parts: Vec<usize> = dims_line
        .split_whitespace()
        .map(|p| p.parse())
        .collect::<Result<_, _>>()
        .map_err(|e| ModelIoError::Malformed {
            line: 3,
            reason: format!("bad dims: {e}"),
        })?;
    if dims_parts.len() != 4 {
        return Err(ModelIoError::Malformed {
            line: 3,
            reason: "dims needs 4 fields".into(),
        });
    }
    let dims = GcaeDims::new(dims_parts[0], dims_parts[1], dims_parts[2], dims_parts[3]);

    let seed: u64 =
        parse_field(next("seed")?, "seed")?
            .parse()
            .map_err(|e| ModelIoError::Malformed {
                line: 4,
                reason: format!("bad seed: {e}"),
            })?;

    let regime_tag = parse_field(next("regime")?, "regime")?;
    let regime = Regime::from_tag(&regime_tag).ok_or_else(|| ModelIoError::Malformed {
        line: 5,
        reason: format!("unknown regime {regime_tag:?}"),
    })?;

    let act_tag = parse_field(next("final_activation")?, "final_activation")?;
    let final_activation =
        FinalActivation::from_tag(&act_tag).ok_or_else(|| ModelIoError::Malformed {
            line: 6,
            reason: format!("unknown final activation {act_tag:?}"),
        })?;

    let mut layers = Vec::with_capacity(dims.layer_count());
    for _ in 0..dims.layer_count() {
        let (k, decl) = next("layer declaration")?;
        let parts: Vec<&str> = decl.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "layer" {
            return Err(ModelIoError::Malformed {
                line: k + 1,
                reason: format!("expected layer declaration, got {decl:?}"),
            });
        }
        let rows: usize = parts[2].parse().map_err(|_| ModelIoError::Malformed {
            line: k + 1,
            reason: "bad row count".into(),
        })?;
        let cols: usize = parts[3].parse().map_err(|_| ModelIoError::Malformed {
            line: k + 1,
            reason: "bad column count".into(),
        })?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (rk, row) = next("weight row")?;
            for cell in row.split_whitespace() {
                let v: f64 = cell.parse().map_err(|e| ModelIoError::Malformed {
                    line: rk + 1,
                    reason: format!("bad weight {cell:?}: {e}"),
                })?;
                data.push(v);
            }
            if data.len() % cols != 0 {
                return Err(ModelIoError::Malformed {
                    line: rk + 1,
                    reason: format!("expected {cols} entries per row"),
                });
            }
        }
        if data.len() != rows * cols {
            return Err(ModelIoError::Malformed {
                line: k + 1,
                reason: "wrong entry count".into(),
            });
        }
        layers.push(LayerWeights::from_matrix(Matrix::from_vec(
            rows, cols, data,
        )));
    }

    Ok(ModelFile {
        dims,
        vocab_checksum,
        seed,
        regime,
        final_activation,
        params: GcaeParameters::from_layers(dims, layers),
    })
}
