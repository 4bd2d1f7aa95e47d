//! Sparse linear regression oracles behind one interface.
//!
//! Every oracle maps a [`SolveRequest`] to a [`SolveReport`]. The reductions
//! only ever see the trait, so the reference oracles ([`ExactOracle`],
//! [`ZeroOracle`]) can stand in for a real solver when auditing reduction
//! logic on its own.

mod best_subset;
mod lasso;
mod lstsq;
mod reference;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{dim, Error, Result};
use crate::scalar::Real;

pub use best_subset::{solve_best_subset, BestSubset};
pub use lasso::{default_lambda, soft_threshold, solve_lasso, Lasso};
pub use lstsq::least_squares;
pub use reference::{oracle_exact, oracle_zero, ExactOracle, ZeroOracle};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// LASSO weight; `None` selects [`default_lambda`].
    pub lambda: Option<f64>,
    pub max_sweeps: usize,
    pub tol_kkt: f64,
    /// Rescale columns to squared norm `n` before solving.
    pub normalize_columns: bool,
    /// Upper bound on supports enumerated by best-subset selection.
    pub subset_budget: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            lambda: None,
            max_sweeps: 10_000,
            tol_kkt: 1e-8,
            normalize_columns: false,
            subset_budget: 1_000_000,
        }
    }
}

/// Inputs handed to an oracle. `truth` is read only by [`ExactOracle`].
#[derive(Clone, Debug)]
pub struct SolveRequest<'a, T> {
    pub design: ArrayView2<'a, T>,
    pub response: ArrayView1<'a, T>,
    pub k_hint: usize,
    pub sigma2_known: T,
    pub options: SolverOptions,
    pub truth: Option<Array1<T>>,
}

impl<'a, T: Real> SolveRequest<'a, T> {
    pub fn new(
        design: ArrayView2<'a, T>,
        response: ArrayView1<'a, T>,
        k_hint: usize,
        sigma2_known: T,
    ) -> Result<Self> {
        if design.nrows() == 0 || design.ncols() == 0 {
            return dim("design must have at least one row and one column");
        }
        if design.nrows() != response.len() {
            return dim(format!(
                "design has {} rows but response has {} entries",
                design.nrows(),
                response.len()
            ));
        }
        Ok(Self {
            design,
            response,
            k_hint,
            sigma2_known,
            options: SolverOptions::default(),
            truth: None,
        })
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_truth(mut self, truth: Array1<T>) -> Result<Self> {
        if truth.len() != self.design.ncols() {
            return dim(format!(
                "truth has length {}, design has {} columns",
                truth.len(),
                self.design.ncols()
            ));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.design.iter().chain(self.response.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("design or response has non-finite entries".into()));
        }
        if !self.sigma2_known.is_finite() || self.sigma2_known < T::zero() {
            return Err(Error::Data(format!("sigma2_known = {}", self.sigma2_known)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport<T> {
    pub x_hat: Array1<T>,
    pub sweeps_used: usize,
    pub kkt_residual: T,
    /// Objective after each sweep (LASSO) or each improvement (best subset).
    pub objective_trace: Vec<T>,
    pub converged: bool,
    pub lambda: Option<T>,
}

pub trait SlrOracle<T: Real>: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, req: &SolveRequest<'_, T>) -> Result<SolveReport<T>>;
}

/// Oracle selector used by configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Lasso,
    BestSubset,
    Exact,
    Zero,
}

impl<T: Real> SlrOracle<T> for OracleKind {
    fn name(&self) -> &'static str {
        match self {
            Self::Lasso => "lasso",
            Self::BestSubset => "best-subset",
            Self::Exact => "exact",
            Self::Zero => "zero",
        }
    }

    fn solve(&self, req: &SolveRequest<'_, T>) -> Result<SolveReport<T>> {
        match self {
            Self::Lasso => solve_lasso(req),
            Self::BestSubset => solve_best_subset(req, req.k_hint),
            Self::Exact => oracle_exact(req),
            Self::Zero => oracle_zero(req),
        }
    }
}

/// `(1/n) ||A (x_hat - x_star)||^2`.
pub fn prediction_error<T: Real>(
    design: ArrayView2<'_, T>,
    x_hat: ArrayView1<'_, T>,
    x_star: ArrayView1<'_, T>,
) -> Result<T> {
    if x_hat.len() != design.ncols() || x_star.len() != design.ncols() {
        return dim(format!(
            "design has {} columns, x_hat {} and x_star {} entries",
            design.ncols(),
            x_hat.len(),
            x_star.len()
        ));
    }
    let delta = &x_hat - &x_star;
    let fit = design.dot(&delta);
    Ok(fit.dot(&fit) / T::from_count(design.nrows()))
}
