//! Neonatal EEG seizure detection: EDF input, feature extraction, an SVM
//! detector with an outlier gate, agreement statistics against human
//! raters and clinical seizure-burden summaries.

pub mod cli;
pub mod clinical;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod model;
pub mod outlier_gate;
pub mod pipeline;
pub mod postprocess;
pub mod preprocess;
pub mod signal_io;
pub mod synth;

pub use error::{Error, Result};
