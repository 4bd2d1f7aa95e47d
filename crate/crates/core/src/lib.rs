//! Sampling, sparse regression oracles, reductions and low-degree bound
//! arithmetic for the negative-spike sparse PCA / sparse linear regression
//! hardness pipeline.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the default `f64` precision.

pub mod error;
pub mod ldlr;
pub mod model;
pub mod reductions;
pub mod rng;
pub mod scalar;
pub mod solvers;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SampleMatrix = model::SampleMatrix<f64>;
pub type SpikeVector = model::SpikeVector<f64>;
pub type CovarianceSpec = model::CovarianceSpec<f64>;
pub type SlrInstance = model::SlrInstance<f64>;
pub type SolveReport = solvers::SolveReport<f64>;
