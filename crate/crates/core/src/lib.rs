//! Core library of the EEG schizophrenia-vs-control classification benchmark.
//!
//! The crate is organised around the experiment pipeline:
//!
//! * [`tensor`] / [`linalg`] — dense `f64` tensors and GEMM helpers;
//! * [`nn`] — layer kernels (conv, pooling, dense, LSTM, dropout, loss);
//! * [`graph`] — reverse-mode automatic differentiation over those kernels;
//! * [`optim`] / [`init`] — optimisers and weight initialisation;
//! * [`data`] — EDF/CSV ingestion, framing, normalisation, fold splitting;
//! * [`models`] — the seven network architectures plus training loop;
//! * [`baselines`] — the seven classical classifiers;
//! * [`eval`] — confusion/ROC metrics and the cross-validation harness.

pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod init;
pub mod linalg;
pub mod models;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
