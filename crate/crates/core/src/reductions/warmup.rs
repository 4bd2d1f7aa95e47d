use ndarray::{concatenate, s, Array1, Axis};

use super::ReductionConfig;
use crate::error::{dim, Result};
use crate::model::{column_regression, HypothesisLabel, Layout, SampleMatrix};
use crate::scalar::Real;
use crate::solvers::{SlrOracle, SolveRequest};

#[derive(Clone, Debug, PartialEq)]
pub struct WarmupOutcome<T> {
    pub verdict: HypothesisLabel,
    /// `||A x_hat|| / sqrt(n)` for each regressed column, in column order.
    pub stats: Vec<T>,
    pub solver_calls: usize,
}

/// Regresses column `col` on the others and returns `||A x_hat|| / sqrt(n)`.
fn column_statistic<T: Real, O: SlrOracle<T> + ?Sized>(
    samples: &SampleMatrix<T>,
    col: usize,
    oracle: &O,
    cfg: &ReductionConfig,
) -> Result<T> {
    let z = samples.data();
    let y = z.column(col).to_owned();
    let a = concatenate(Axis(1), &[z.slice(s![.., ..col]), z.slice(s![.., col + 1..])])
        .expect("blocks share a row count");
    let mut req = SolveRequest::new(a.view(), y.view(), cfg.k_hint, T::lit(cfg.sigma2_known))?
        .with_options(cfg.solver);
    if let Some(blocks) = samples.truth_blocks() {
        let x = match &blocks[0] {
            Some(p) => Array1::from(column_regression(&p.spike, p.theta, col)?.coef),
            None => Array1::zeros(a.ncols()),
        };
        req = req.with_truth(x)?;
    }
    let report = oracle.solve(&req)?;
    let fit = a.dot(&report.x_hat);
    Ok(fit.dot(&fit).sqrt() / T::from_count(a.nrows()).sqrt())
}

fn single_block<T: Real>(samples: &SampleMatrix<T>) -> Result<()> {
    if samples.layout() != Layout::Single {
        return dim("warm-up tests need a single-block sample matrix");
    }
    Ok(())
}

/// Regresses `Z_1` on the other columns; P iff the fit norm exceeds `threshold`.
pub fn warmup_distinguish<T: Real, O: SlrOracle<T> + ?Sized>(
    samples: &SampleMatrix<T>,
    oracle: &O,
    threshold: T,
    cfg: &ReductionConfig,
) -> Result<WarmupOutcome<T>> {
    single_block(samples)?;
    let stat = column_statistic(samples, 0, oracle, cfg)?;
    Ok(WarmupOutcome {
        verdict: if stat > threshold { HypothesisLabel::P } else { HypothesisLabel::Q },
        stats: vec![stat],
        solver_calls: 1,
    })
}

/// Runs the warm-up test on every column; P iff any column exceeds `threshold`.
pub fn warmup_distinguish_allcols<T: Real, O: SlrOracle<T> + ?Sized>(
    samples: &SampleMatrix<T>,
    oracle: &O,
    threshold: T,
    cfg: &ReductionConfig,
) -> Result<WarmupOutcome<T>> {
    single_block(samples)?;
    let stats = (0..samples.ncols())
        .map(|i| column_statistic(samples, i, oracle, cfg))
        .collect::<Result<Vec<T>>>()?;
    let hit = stats.iter().any(|&s| s > threshold);
    Ok(WarmupOutcome {
        verdict: if hit { HypothesisLabel::P } else { HypothesisLabel::Q },
        solver_calls: stats.len(),
        stats,
    })
}
