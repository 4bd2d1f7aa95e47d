use serde::{Deserialize, Serialize};

use super::pair::distinguish_pair;
use super::ReductionConfig;
use crate::error::{dim, param, Result};
use crate::model::{sample_single, HypothesisLabel, Layout, ModelParams, SampleMatrix};
use crate::rng::SeedStream;
use crate::scalar::Real;
use crate::solvers::SlrOracle;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostConfig {
    /// Assumed failure probability of the pair distinguisher.
    pub delta: f64,
    /// Iteration count; defaults to `ceil(1 / sqrt(2 delta))`.
    #[serde(default)]
    pub m: Option<usize>,
}

impl BoostConfig {
    pub fn new(delta: f64) -> Result<Self> {
        let cfg = Self { delta, m: None };
        cfg.iterations()?;
        Ok(cfg)
    }

    pub fn with_iterations(delta: f64, m: usize) -> Result<Self> {
        let cfg = Self { delta, m: Some(m) };
        cfg.iterations()?;
        Ok(cfg)
    }

    /// `M`, validated.
    pub fn iterations(&self) -> Result<usize> {
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return param(format!("delta must lie in (0, 1/2), got {}", self.delta));
        }
        match self.m {
            Some(0) => param("boost iteration count must be at least 1"),
            Some(m) => Ok(m),
            None => {
                // 1/sqrt(0.04) lands a hair above 5 in floating point
                let raw = 1.0 / (2.0 * self.delta).sqrt();
                Ok(((raw - 1e-9).ceil() as usize).max(1))
            }
        }
    }

    /// Lower bound `1 - sqrt(2 delta)` on the success probability on either side.
    pub fn success_bound(&self) -> f64 {
        1.0 - (2.0 * self.delta).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoostOutcome {
    pub verdict: HypothesisLabel,
    /// Iterations in which both orders agreed with `x` being planted.
    pub agreements: usize,
    pub iterations: usize,
    pub distinguisher_calls: usize,
    pub sampler_calls: usize,
}

/// Decides P vs Q for `x` with a pair distinguisher and fresh null batches.
///
/// Each of the `M` rounds draws `x'` with `q_sampler(round)` and counts an
/// agreement iff `pair(x, x') = PxQ` and `pair(x', x) = QxP`. The verdict is
/// P iff every round agrees. Rounds never stop early, so the call counts are
/// always `2M` and `M`.
pub fn boost_order<T, D, S>(
    x: &SampleMatrix<T>,
    mut pair_distinguisher: D,
    mut q_sampler: S,
    cfg: &BoostConfig,
) -> Result<BoostOutcome>
where
    T: Real,
    D: FnMut(&SampleMatrix<T>, &SampleMatrix<T>) -> Result<HypothesisLabel>,
    S: FnMut(usize) -> Result<SampleMatrix<T>>,
{
    let m = cfg.iterations()?;
    let mut agreements = 0;
    let mut calls = 0;
    for round in 0..m {
        let fresh = q_sampler(round)?;
        let forward = pair_distinguisher(x, &fresh)?;
        let backward = pair_distinguisher(&fresh, x)?;
        calls += 2;
        if forward == HypothesisLabel::PxQ && backward == HypothesisLabel::QxP {
            agreements += 1;
        }
    }
    Ok(BoostOutcome {
        verdict: if agreements == m { HypothesisLabel::P } else { HypothesisLabel::Q },
        agreements,
        iterations: m,
        distinguisher_calls: calls,
        sampler_calls: m,
    })
}

/// Full single-sample distinguisher: order boosting over the paired test.
///
/// Round `i` draws its null batch from `stream.child(i)`.
pub fn distinguish_negspca<T: Real, O: SlrOracle<T> + ?Sized>(
    samples: &SampleMatrix<T>,
    oracle: &O,
    reduction: &ReductionConfig,
    boost: &BoostConfig,
    stream: &SeedStream,
) -> Result<BoostOutcome> {
    if samples.layout() != Layout::Single {
        return dim("distinguish_negspca needs a single-block sample matrix");
    }
    let d = samples.d();
    let k = reduction.k_hint.clamp(1, d.max(1));
    let null_params = ModelParams::with_default_theta(d, k, samples.nrows())?;
    boost_order(
        samples,
        |a, b| Ok(distinguish_pair(&SampleMatrix::pair(a, b)?, oracle, reduction)?.verdict),
        |round| {
            let mut rng = stream.child(round as u64).rng();
            sample_single(HypothesisLabel::Q, &null_params, true, &mut rng)
        },
        boost,
    )
}
