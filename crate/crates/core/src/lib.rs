//! Token-level program autoencoding with graph convolutions.
//!
//! The crate turns methods of a curly-brace language into anonymized token
//! sequences, derives per-method graphs under three adjacency regimes
//! (token-level control flow, plain linear chain, no edges at all), and
//! trains one graph-convolutional autoencoder per regime so their
//! reconstruction quality can be compared on the same corpus.
//!
//! Modules follow the pipeline order:
//! - [`corpus`]: method extraction from source trees and a synthetic
//!   generator with controlled control-flow density
//! - [`lexer`]: tokenization, anonymization onto a closed vocabulary,
//!   numericalization, one-hot encoding
//! - [`flowgraph`]: per-regime edge sets and the normalized propagation
//!   matrix used by every layer
//! - [`neuralnet`]: the matrix engine, graph-convolution layer, and the
//!   autoencoder with exact hand-derived gradients
//! - [`training`]: loss, Adam, the epoch loop, and evaluation

pub mod corpus;
pub mod flowgraph;
pub mod gradcheck;
pub mod lexer;
pub mod matrix;
pub mod neuralnet;
pub mod rng;
pub mod training;
