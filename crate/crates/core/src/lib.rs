//! Generalized gradient learning on univariate time series under dynamic
//! time warping.
//!
//! The crate is organised bottom-up:
//!
//! - [`warp`]: time series, warping paths, DTW distance with traceback and a
//!   brute-force path enumerator.
//! - [`dp`]: the shared min/max alignment recurrence and its score matrix.
//! - [`elastic`]: weight matrices, elastic embeddings, the elastic inner
//!   product and the elastic Euclidean distance.
//! - [`learn`]: the four elastic linear classifiers and their stochastic
//!   generalized gradient trainer.
//! - [`centroid`]: DTW-space means, k-means, Ward prototypes and
//!   nearest-neighbour baselines.
//! - [`model`]: the JSON container used to persist classifiers and prototype sets.

pub mod centroid;
pub mod dp;
pub mod elastic;
mod error;
pub mod learn;
pub mod matrix;
pub mod model;
pub mod seed;
pub mod warp;

pub use error::{Error, Result};
pub use matrix::WeightMatrix;
pub use warp::{GridDims, TimeSeries, WarpingPath};
