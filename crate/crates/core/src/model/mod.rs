//! Samplers for the negative-spike sparse PCA models and the Gaussian-design
//! sparse linear regression model.

mod covariance;
mod params;
mod samples;
mod slr;
mod spike;

pub use covariance::{sample_model, CovarianceKind, CovarianceSpec};
pub use params::{default_theta, ModelParams};
pub use samples::{sample_pair, sample_single, HypothesisLabel, Layout, Planted, SampleMatrix};
pub use slr::{
    column_regression, derive_planted_slr, sample_slr_instance, ColumnRegression, PlantedSlr,
    SlrInstance, SlrTruth,
};
pub use spike::{sample_spike, SpikeVector};
