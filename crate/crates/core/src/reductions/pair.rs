use ndarray::{concatenate, s, Array1, Array2, Axis};

use super::ReductionConfig;
use crate::error::{dim, Result};
use crate::model::{column_regression, HypothesisLabel, Layout, SampleMatrix};
use crate::scalar::Real;
use crate::solvers::{prediction_error, SlrOracle, SolveReport, SolveRequest};

/// `y = Z_1 + Z_{d+1}` regressed on the other `2d` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedPair<T> {
    /// `Z` without its two pinned columns, left block first.
    pub design: Array2<T>,
    pub response: Array1<T>,
    pub z1: Array1<T>,
    pub zd1: Array1<T>,
}

impl<T: Real> ReducedPair<T> {
    /// Rebuilds the paired matrix from its parts.
    pub fn reconstruct(&self) -> Array2<T> {
        let d = self.design.ncols() / 2;
        concatenate(
            Axis(1),
            &[
                self.z1.view().insert_axis(Axis(1)),
                self.design.slice(s![.., ..d]),
                self.zd1.view().insert_axis(Axis(1)),
                self.design.slice(s![.., d..]),
            ],
        )
        .expect("blocks share a row count")
    }
}

pub fn reduce_pair_to_slr<T: Real>(paired: &SampleMatrix<T>) -> Result<ReducedPair<T>> {
    if paired.layout() != Layout::Paired {
        return dim("pair reduction needs a paired sample matrix");
    }
    let left = paired.block(0);
    let right = paired.block(1);
    let z1 = left.column(0).to_owned();
    let zd1 = right.column(0).to_owned();
    let response = &z1 + &zd1;
    let design = concatenate(Axis(1), &[left.slice(s![.., 1..]), right.slice(s![.., 1..])])
        .expect("blocks share a row count");
    Ok(ReducedPair { design, response, z1, zd1 })
}

/// Regression vector of the reduced instance implied by the attached truth.
///
/// Each planted block contributes the population regression of its pinned
/// column on the rest of the block; a null block contributes zeros.
pub fn pair_truth<T: Real>(paired: &SampleMatrix<T>) -> Result<Option<Array1<T>>> {
    let Some(blocks) = paired.truth_blocks() else {
        return Ok(None);
    };
    if paired.layout() != Layout::Paired {
        return dim("pair truth needs a paired sample matrix");
    }
    let d = paired.d();
    let mut x = Array1::<T>::zeros(2 * d);
    for (b, block) in blocks.iter().enumerate() {
        if let Some(planted) = block {
            let reg = column_regression(&planted.spike, planted.theta, 0)?;
            x.slice_mut(s![b * d..(b + 1) * d]).assign(&Array1::from(reg.coef));
        }
    }
    Ok(Some(x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairOutcome<T> {
    pub verdict: HypothesisLabel,
    /// `||A x_hat - Z_1|| / sqrt(n)`.
    pub stat_left: T,
    /// `||A x_hat - Z_{d+1}|| / sqrt(n)`.
    pub stat_right: T,
    /// Prediction error against the attached truth, when there is one.
    pub pred_error: Option<T>,
    pub report: SolveReport<T>,
}

/// Outputs `PxQ` iff the fit is at least as close to `Z_1` as to `Z_{d+1}`.
pub fn distinguish_pair<T: Real, O: SlrOracle<T> + ?Sized>(
    paired: &SampleMatrix<T>,
    oracle: &O,
    cfg: &ReductionConfig,
) -> Result<PairOutcome<T>> {
    let reduced = reduce_pair_to_slr(paired)?;
    let mut req = SolveRequest::new(
        reduced.design.view(),
        reduced.response.view(),
        cfg.k_hint,
        T::lit(cfg.sigma2_known),
    )?
    .with_options(cfg.solver);
    let truth = pair_truth(paired)?;
    if let Some(x) = &truth {
        req = req.with_truth(x.clone())?;
    }
    let report = oracle.solve(&req)?;
    if report.x_hat.len() != reduced.design.ncols() {
        return dim(format!(
            "oracle {} returned {} coefficients for {} columns",
            oracle.name(),
            report.x_hat.len(),
            reduced.design.ncols()
        ));
    }
    let fit = reduced.design.dot(&report.x_hat);
    let root_n = T::from_count(reduced.design.nrows()).sqrt();
    let dist = |z: &Array1<T>| {
        let r = &fit - z;
        r.dot(&r).sqrt() / root_n
    };
    let stat_left = dist(&reduced.z1);
    let stat_right = dist(&reduced.zd1);
    let verdict = if stat_left <= stat_right {
        HypothesisLabel::PxQ
    } else {
        HypothesisLabel::QxP
    };
    let pred_error = match &truth {
        Some(x) => Some(prediction_error(reduced.design.view(), report.x_hat.view(), x.view())?),
        None => None,
    };
    Ok(PairOutcome { verdict, stat_left, stat_right, pred_error, report })
}
