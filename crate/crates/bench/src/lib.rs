//! Dataset loading, model selection and experiment orchestration for elastic
//! linear classifiers and nearest-neighbor baselines.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod folds;
pub mod grid;
pub mod report;

pub use error::{BenchError, Result};
