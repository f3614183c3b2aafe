//! Contextual-hallucination detection from the high-frequency energy of
//! transformer attention.
//!
//! Each generation step's attention over the context and over previously
//! generated tokens is treated as a discrete signal. A spectral operator
//! ([`signal_ops`]) reduces every head's signal to one energy value, the
//! per-head energies are stacked into a feature vector ([`features`]), and a
//! logistic-regression detector ([`classifier`]) scores tokens or spans.
//! [`evaluation`] holds the metrics and the model-analysis drivers, and
//! [`toy_model`] is a Monte-Carlo check of how topic heterogeneity
//! roughens softmax attention.

pub mod classifier;
pub mod cli;
pub mod data_io;
mod error;
pub mod evaluation;
pub mod features;
pub mod repro;
pub mod rng;
pub mod signal_ops;
pub mod toy_model;

pub use error::{Error, ErrorClass, Result};
