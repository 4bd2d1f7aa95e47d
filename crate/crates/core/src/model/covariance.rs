use ndarray::Array2;
use rand::Rng;

use super::samples::{Layout, Planted, SampleMatrix};
use super::spike::SpikeVector;
use crate::error::{param, Result};
use crate::rng::fill_standard_normal;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub enum CovarianceKind<T> {
    Identity,
    NegativeSpike { spike: SpikeVector<T>, theta: T },
}

/// Either `Id` or `Id - theta * x x^T` over `R^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceSpec<T> {
    dim: usize,
    kind: CovarianceKind<T>,
}

impl<T: Real> CovarianceSpec<T> {
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return param("covariance dimension must be positive");
        }
        Ok(Self {
            dim,
            kind: CovarianceKind::Identity,
        })
    }

    /// `theta` may be anything in `[0, 1]`; `theta = 1` is the singular case.
    pub fn negative_spike(spike: SpikeVector<T>, theta: T) -> Result<Self> {
        if !(theta >= T::zero() && theta <= T::one()) {
            return param(format!("theta must lie in [0, 1], got {theta}"));
        }
        Ok(Self {
            dim: spike.entries().len(),
            kind: CovarianceKind::NegativeSpike { spike, theta },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &CovarianceKind<T> {
        &self.kind
    }

    pub fn theta(&self) -> T {
        match &self.kind {
            CovarianceKind::Identity => T::zero(),
            CovarianceKind::NegativeSpike { theta, .. } => *theta,
        }
    }

    pub fn spike(&self) -> Option<&SpikeVector<T>> {
        match &self.kind {
            CovarianceKind::Identity => None,
            CovarianceKind::NegativeSpike { spike, .. } => Some(spike),
        }
    }

    /// `c = 1 - sqrt(1 - theta)`, so that `(Id - c xx^T)^2 = Id - theta xx^T`.
    pub fn transform_coeff(&self) -> T {
        T::one() - (T::one() - self.theta()).sqrt()
    }

    /// Dense `Sigma`, for tests and diagnostics on small `dim`.
    pub fn dense(&self) -> Array2<T> {
        let mut sigma = Array2::eye(self.dim);
        if let CovarianceKind::NegativeSpike { spike, theta } = &self.kind {
            let x = spike.entries();
            for &i in spike.support() {
                for &j in spike.support() {
                    sigma[[i, j]] -= *theta * x[i] * x[j];
                }
            }
        }
        sigma
    }
}

/// Draws `n` i.i.d. rows from `N(0, spec)`.
///
/// Spiked rows are `z = g - c <x, g> x` with `g ~ N(0, Id)`; only the spike
/// support is touched after the Gaussian fill, so each row costs `O(dim)`.
pub fn sample_model<T: Real, R: Rng + ?Sized>(
    spec: &CovarianceSpec<T>,
    n: usize,
    rng: &mut R,
) -> Result<SampleMatrix<T>> {
    if n == 0 {
        return param("n must be at least 1");
    }
    let dim = spec.dim;
    let mut data = Array2::<T>::zeros((n, dim));
    let c = spec.transform_coeff();
    for mut row in data.rows_mut() {
        let row = row.as_slice_mut().expect("fresh array is row-major");
        fill_standard_normal(rng, row);
        if let CovarianceKind::NegativeSpike { spike, .. } = &spec.kind {
            let proj = c * spike.dot(row);
            let x = spike.entries();
            for &j in spike.support() {
                row[j] -= proj * x[j];
            }
        }
    }
    let planted = match &spec.kind {
        CovarianceKind::Identity => None,
        CovarianceKind::NegativeSpike { spike, theta } => Some(Planted {
            spike: spike.clone(),
            theta: *theta,
        }),
    };
    SampleMatrix::synthetic(data, Layout::Single, vec![planted])
}
