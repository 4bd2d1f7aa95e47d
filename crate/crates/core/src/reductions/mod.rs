//! Distinguishers built from a sparse regression oracle.
//!
//! The paired test regresses `Z_1 + Z_{d+1}` on the remaining columns and
//! compares the fit against each pinned column. Order boosting turns a pair
//! distinguisher into a single-sample one, and the warm-up tests regress one
//! column of a single sample on the rest.

mod boost;
mod pair;
mod warmup;

use serde::{Deserialize, Serialize};

use crate::solvers::SolverOptions;

pub use boost::{boost_order, distinguish_negspca, BoostConfig, BoostOutcome};
pub use pair::{distinguish_pair, pair_truth, reduce_pair_to_slr, PairOutcome, ReducedPair};
pub use warmup::{warmup_distinguish, warmup_distinguish_allcols, WarmupOutcome};

/// Oracle inputs shared by the reductions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionConfig {
    /// Sparsity hint passed to the oracle.
    pub k_hint: usize,
    /// Noise variance announced to the oracle.
    pub sigma2_known: f64,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl ReductionConfig {
    /// Paired reduction: planted noise `1/2` plus the unit-variance null column.
    pub fn pair(k: usize) -> Self {
        Self { k_hint: k, sigma2_known: 1.5, solver: SolverOptions::default() }
    }

    /// Single-sample warm-up, where the residual variance is at most one.
    pub fn warmup(k: usize) -> Self {
        Self { k_hint: k, sigma2_known: 1.0, solver: SolverOptions::default() }
    }
}
