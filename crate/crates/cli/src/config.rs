//! Flat key=value run configuration.
//!
//! A config file is plain text: one `key=value` per line, `#` comments and
//! blank lines ignored. Command-line flags override file values. The
//! canonical serialization (fixed key order) is checksummed into every
//! report so two reports with the same provenance line really did come
//! from the same configuration.
//!
//! Keys:
//!   hidden, latent, depth        model widths and extra layer count
//!   learning_rate, l2_lambda     optimizer and regularization
//!   epochs, seed                 training length and master seed
//!   regime                       sequence | linear | naive (train)
//!   regimes                      comma list for compare
//!   beta1, beta2, epsilon        Adam moments
//!   final_activation             relu | identity
//!   count, test_fraction         synthetic corpus size and split
//!   max_depth, max_stmts,        generator shape
//!   max_params, control_density,
//!   allow_recursion
//!   extension                    source file extension for ingest
//!   out_dir                      output directory

use gcae_core::corpus::GenShape;
use gcae_core::flowgraph::Regime;
use gcae_core::neuralnet::FinalActivation;
use gcae_core::training::TrainConfig;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: expected key=value, got {text:?}")]
    BadLine { line: usize, text: String },
    #[error("config key {key:?}: bad value {value:?}")]
    BadValue { key: String, value: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
}

/// One run's full configuration: training plus corpus plus output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub regimes: Vec<Regime>,
    pub count: usize,
    pub test_fraction: f64,
    pub shape: GenShape,
    pub extension: String,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::for_regime(Regime::Sequence),
            regimes: vec![Regime::Sequence, Regime::Linear, Regime::Naive],
            count: 500,
            test_fraction: 0.1,
            shape: GenShape::default(),
            extension: "java".to_string(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::BadLine {
                line: k + 1,
                text: raw.to_string(),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        match key {
            "hidden" => self.train.hidden = value.parse().map_err(|_| bad())?,
            "latent" => self.train.latent = value.parse().map_err(|_| bad())?,
            "depth" => self.train.depth = value.parse().map_err(|_| bad())?,
            "learning_rate" => self.train.learning_rate = value.parse().map_err(|_| bad())?,
            "l2_lambda" => self.train.l2_lambda = value.parse().map_err(|_| bad())?,
            "epochs" => self.train.epochs = value.parse().map_err(|_| bad())?,
            "seed" => self.train.seed = value.parse().map_err(|_| bad())?,
            "regime" => self.train.regime = Regime::from_tag(value).ok_or_else(bad)?,
            "regimes" => {
                let regimes: Option<Vec<Regime>> = value
                    .split(',')
                    .map(|t| Regime::from_tag(t.trim()))
                    .collect();
                self.regimes = regimes.ok_or_else(bad)?;
                if self.regimes.is_empty() {
                    return Err(bad());
                }
            }
            "beta1" => self.train.beta1 = value.parse().map_err(|_| bad())?,
            "beta2" => self.train.beta2 = value.parse().map_err(|_| bad())?,
            "epsilon" => self.train.epsilon = value.parse().map_err(|_| bad())?,
            "final_activation" => {
                self.train.final_activation = FinalActivation::from_tag(value).ok_or_else(bad)?
            }
            "count" => self.count = value.parse().map_err(|_| bad())?,
            "test_fraction" => {
                self.test_fraction = value.parse().map_err(|_| bad())?;
                if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
                    return Err(bad());
                }
            }
            "max_depth" => self.shape.max_depth = value.parse().map_err(|_| bad())?,
            "max_stmts" => self.shape.max_stmts = value.parse().map_err(|_| bad())?,
            "max_params" => self.shape.max_params = value.parse().map_err(|_| bad())?,
            "control_density" => self.shape.control_density = value.parse().map_err(|_| bad())?,
            "allow_recursion" => self.shape.allow_recursion = value.parse().map_err(|_| bad())?,
            "extension" => self.extension = value.trim_start_matches('.').to_string(),
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Fixed-order serialization; checksummed into report provenance.
    pub fn canonical_string(&self) -> String {
        let t = &self.train;
        let regimes: Vec<&str> = self.regimes.iter().map(|r| r.tag()).collect();
        format!(
            "hidden={}\nlatent={}\ndepth={}\nlearning_rate={}\nl2_lambda={}\nepochs={}\nseed={}\nregime={}\nregimes={}\nbeta1={}\nbeta2={}\nepsilon={}\nfinal_activation={}\ncount={}\ntest_fraction={}\nmax_depth={}\nmax_stmts={}\nmax_params={}\ncontrol_density={}\nallow_recursion={}\nextension={}\n",
            t.hidden,
            t.latent,
            t.depth,
            t.learning_rate,
            t.l2_lambda,
            t.epochs,
            t.seed,
            t.regime.tag(),
            regimes.join(","),
            t.beta1,
            t.beta2,
            t.epsilon,
            t.final_activation.tag(),
            self.count,
            self.test_fraction,
            self.shape.max_depth,
            self.shape.max_stmts,
            self.shape.max_params,
            self.shape.control_density,
            self.shape.allow_recursion,
            self.extension,
        )
    }

    /// FNV-1a 64 over the canonical serialization.
    pub fn checksum(&self) -> u64 {
        let mut hash: u64 = 0xcbf29ce484222325;
        for b in self.canonical_string().as_bytes() {
            hash ^= u64::from(*b);
            hash = hash.wrapping_mul(0x100000001b3);
        }
        hash
    }
}
