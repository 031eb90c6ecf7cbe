//! Differentially private uncapacitated facility location.
//!
//! The library solves facility location in the super-set output setting:
//! the mechanism publishes a set of facilities built from a hierarchically
//! separated tree over the input points, and per-vertex client counts are
//! protected with calibrated Laplace noise. General metrics are handled by
//! a randomized low-distortion tree embedding, and a small exact-oracle
//! module backs the statistical tests.

pub mod audit;
pub mod error;
pub mod exec;
pub mod frt;
pub mod general;
pub mod generators;
pub mod hst;
pub mod instance;
pub mod lowerbound;
pub mod oracle;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use hst::{HstTree, VertexId};
pub use instance::{ClientVector, CostBreakdown, Metric, PointId, UflInstance};
