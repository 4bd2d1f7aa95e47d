use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Dimensions and strengths shared by every model in the crate.
///
/// `d` is the ambient dimension of the regression design. Sparse PCA samples
/// live in `d + 1` coordinates, the extra one carrying the pinned spike entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub d: usize,
    pub k: usize,
    pub n: usize,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
}

fn default_sigma2() -> f64 {
    1.0
}

/// The spike strength `(k+1)/(k+2)` used by the known-variance reduction.
pub fn default_theta(k: usize) -> f64 {
    (k as f64 + 1.0) / (k as f64 + 2.0)
}

impl ModelParams {
    pub fn new(d: usize, k: usize, n: usize, theta: f64, sigma2: f64) -> Result<Self> {
        let p = Self {
            d,
            k,
            n,
            theta: Some(theta),
            sigma2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `theta = (k+1)/(k+2)` and unit noise.
    pub fn with_default_theta(d: usize, k: usize, n: usize) -> Result<Self> {
        Self::new(d, k, n, default_theta(k), 1.0)
    }

    pub fn theta(&self) -> f64 {
        self.theta.unwrap_or_else(|| default_theta(self.k))
    }

    pub fn validate(&self) -> Result<()> {
        validate_sparsity(self.d, self.k)?;
        if self.n == 0 {
            return param("n must be at least 1");
        }
        let theta = self.theta();
        if !(theta > 0.0 && theta <= 1.0) {
            return param(format!("theta must lie in (0, 1], got {theta}"));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return param(format!("sigma2 must be finite and non-negative, got {}", self.sigma2));
        }
        Ok(())
    }
}

pub(crate) fn validate_sparsity(d: usize, k: usize) -> Result<()> {
    if k == 0 {
        return param("k must be at least 1 (the spike prior is undefined for k = 0)");
    }
    if k > d {
        return param(format!("k = {k} exceeds d = {d}"));
    }
    Ok(())
}
