use ndarray::Array1;

use super::{SlrOracle, SolveReport, SolveRequest};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Returns the planted regression vector attached to the request.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactOracle;

/// Always returns the zero vector.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroOracle;

fn fixed<T: Real>(x_hat: Array1<T>) -> SolveReport<T> {
    SolveReport {
        x_hat,
        sweeps_used: 0,
        kkt_residual: T::zero(),
        objective_trace: Vec::new(),
        converged: true,
        lambda: None,
    }
}

pub fn oracle_exact<T: Real>(req: &SolveRequest<'_, T>) -> Result<SolveReport<T>> {
    match &req.truth {
        Some(x) => Ok(fixed(x.clone())),
        None => Err(Error::Contract("exact oracle called on an instance without truth".into())),
    }
}

pub fn oracle_zero<T: Real>(req: &SolveRequest<'_, T>) -> Result<SolveReport<T>> {
    Ok(fixed(Array1::zeros(req.p())))
}

impl<T: Real> SlrOracle<T> for ExactOracle {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn solve(&self, req: &SolveRequest<'_, T>) -> Result<SolveReport<T>> {
        oracle_exact(req)
    }
}

impl<T: Real> SlrOracle<T> for ZeroOracle {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn solve(&self, req: &SolveRequest<'_, T>) -> Result<SolveReport<T>> {
        oracle_zero(req)
    }
}
