use ndarray::{Array1, Array2};
use rand::Rng;

use super::covariance::{sample_model, CovarianceSpec};
use super::params::ModelParams;
use super::spike::SpikeVector;
use crate::error::{dim, param, Result};
use crate::rng::standard_normal;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct SlrTruth<T> {
    pub x_star: Array1<T>,
    pub sigma2_noise: T,
}

/// A regression instance `y = A x* + w`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlrInstance<T> {
    pub design: Array2<T>,
    pub response: Array1<T>,
    pub truth: Option<SlrTruth<T>>,
}

/// Constants of the planted-case decomposition `Z_1 = Z_{\1} x* + w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantedSlr<T> {
    pub gamma: T,
    /// `x* = x_star_scale * x_{\1}`.
    pub x_star_scale: T,
    pub sigma2_resid: T,
}

/// `gamma = theta / (1 - theta k/(k+1))`, `x* = gamma/sqrt(k+1) * x_{\1}`,
/// `sigma^2 = 1 - gamma/(k+1)`.
pub fn derive_planted_slr<T: Real>(k: usize, theta: T) -> Result<PlantedSlr<T>> {
    if k == 0 {
        return param("k must be at least 1");
    }
    if !(theta >= T::zero() && theta <= T::one()) {
        return param(format!("theta must lie in [0, 1], got {theta}"));
    }
    let kp1 = T::from_count(k + 1);
    let denom = T::one() - theta * T::from_count(k) / kp1;
    if denom <= T::zero() {
        return param("theta * k/(k+1) must be below 1");
    }
    let gamma = theta / denom;
    Ok(PlantedSlr {
        gamma,
        x_star_scale: gamma / kp1.sqrt(),
        sigma2_resid: T::one() - gamma / kp1,
    })
}

impl ModelParams {
    pub fn planted_slr<T: Real>(&self) -> Result<PlantedSlr<T>> {
        derive_planted_slr(self.k, T::lit(self.theta()))
    }
}

/// Population regression of column `col` on the other columns under
/// `N(0, Id - theta xx^T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnRegression<T> {
    /// Coefficients over the remaining columns, in their original order.
    pub coef: Vec<T>,
    pub noise_var: T,
}

/// With `s = 1 - x_i^2`: `beta = -theta x_i / (1 - theta s) * x_{-i}` and
/// `Var(w) = 1 - theta x_i^2 / (1 - theta s)`. A column outside the support
/// is independent of the rest.
pub fn column_regression<T: Real>(
    spike: &SpikeVector<T>,
    theta: T,
    col: usize,
) -> Result<ColumnRegression<T>> {
    let x = spike.entries();
    if col >= x.len() {
        return dim(format!("column {col} out of range for dimension {}", x.len()));
    }
    let xi = x[col];
    let mut coef = vec![T::zero(); x.len() - 1];
    if xi == T::zero() {
        return Ok(ColumnRegression {
            coef,
            noise_var: T::one(),
        });
    }
    let s = T::one() - xi * xi;
    let denom = T::one() - theta * s;
    let scale = -theta * xi / denom;
    for &j in spike.support() {
        if j != col {
            let slot = if j < col { j } else { j - 1 };
            coef[slot] = scale * x[j];
        }
    }
    Ok(ColumnRegression {
        coef,
        noise_var: T::one() - theta * xi * xi / denom,
    })
}

/// Draws `A` with rows `N(0, covariance)` and `y = A x* + w`, `w ~ N(0, sigma2 Id)`.
pub fn sample_slr_instance<T: Real, R: Rng + ?Sized>(
    params: &ModelParams,
    covariance: &CovarianceSpec<T>,
    x_star: &[T],
    rng: &mut R,
) -> Result<SlrInstance<T>> {
    params.validate()?;
    if covariance.dim() != params.d || x_star.len() != params.d {
        return dim(format!(
            "covariance dimension {} and x* length {} must both equal d = {}",
            covariance.dim(),
            x_star.len(),
            params.d
        ));
    }
    let nnz = x_star.iter().filter(|v| **v != T::zero()).count();
    if nnz > params.k {
        return param(format!("x* has {nnz} nonzeros, more than k = {}", params.k));
    }
    let design = sample_model(covariance, params.n, rng)?.into_data();
    let x_star = Array1::from(x_star.to_vec());
    let sigma = T::lit(params.sigma2).sqrt();
    let mut response = design.dot(&x_star);
    for v in response.iter_mut() {
        *v += sigma * standard_normal::<T, _>(rng);
    }
    Ok(SlrInstance {
        design,
        response,
        truth: Some(SlrTruth {
            x_star,
            sigma2_noise: T::lit(params.sigma2),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::samples::{sample_single, HypothesisLabel};
    use crate::model::spike::sample_spike;
    use crate::rng::SeedStream;
    use crate::stats::CrossMoments;

    #[test]
    fn fact_constants_for_k3() {
        let p = derive_planted_slr(3, 0.8f64).unwrap();
        assert!((p.gamma - 2.0).abs() < 1e-12);
        assert!((p.x_star_scale - 1.0).abs() < 1e-12);
        assert!((p.sigma2_resid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fact_constants_for_k1() {
        let p = derive_planted_slr(1, 2.0f64 / 3.0).unwrap();
        assert!((p.gamma - 1.0).abs() < 1e-12);
        assert!((p.sigma2_resid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn default_theta_gives_half_noise() {
        for k in 1..20usize {
            let theta = (k as f64 + 1.0) / (k as f64 + 2.0);
            let p = derive_planted_slr(k, theta).unwrap();
            assert!((p.gamma - (k as f64 + 1.0) / 2.0).abs() < 1e-9);
            assert!((p.x_star_scale - (k as f64 + 1.0).sqrt() / 2.0).abs() < 1e-9);
            assert!((p.sigma2_resid - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn vanishing_spike_is_pure_noise() {
        let p = derive_planted_slr(5, 1e-12f64).unwrap();
        assert!(p.gamma < 1e-11);
        assert!((p.sigma2_resid - 1.0).abs() < 1e-11);
    }

    #[test]
    fn degenerate_theta_is_noiseless() {
        let p = derive_planted_slr(4, 1.0f64).unwrap();
        assert!((p.gamma - 5.0).abs() < 1e-12);
        assert!(p.sigma2_resid.abs() < 1e-12);
    }

    #[test]
    fn column_regression_on_pinned_column_matches_fact() {
        let mut rng = SeedStream::new(1).rng();
        let spike = sample_spike::<f64, _>(12, 3, true, &mut rng).unwrap();
        let reg = column_regression(&spike, 0.8, 0).unwrap();
        let fact = derive_planted_slr(3, 0.8f64).unwrap();
        for (c, x) in reg.coef.iter().zip(spike.tail()) {
            assert!((c - fact.x_star_scale * x).abs() < 1e-12);
        }
        assert!((reg.noise_var - fact.sigma2_resid).abs() < 1e-12);
    }

    #[test]
    fn column_regression_matches_schur_complement() {
        let x = SpikeVector::<f64>::from_pattern(5, 2, false, &[1, 3, 4], &[true, false, true]).unwrap();
        let theta = 0.6;
        let sigma = CovarianceSpec::negative_spike(x.clone(), theta).unwrap().dense();
        for col in 0..6 {
            let reg = column_regression(&x, theta, col).unwrap();
            // Sigma_{-i,-i} beta = Sigma_{-i,i}, noise = Sigma_ii - Sigma_{i,-i} beta
            let others: Vec<usize> = (0..6).filter(|&j| j != col).collect();
            for (a, &r) in others.iter().enumerate() {
                let lhs: f64 = others.iter().enumerate().map(|(b, &c)| sigma[[r, c]] * reg.coef[b]).sum();
                assert!((lhs - sigma[[r, col]]).abs() < 1e-12, "col {col} row {a}");
            }
            let explained: f64 = others.iter().enumerate().map(|(b, &c)| sigma[[col, c]] * reg.coef[b]).sum();
            assert!((sigma[[col, col]] - explained - reg.noise_var).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_signal_zero_noise_gives_zero_response() {
        let params = ModelParams::new(8, 2, 30, 0.5, 0.0).unwrap();
        let cov = CovarianceSpec::identity(8).unwrap();
        let inst = sample_slr_instance(&params, &cov, &[0.0; 8], &mut SeedStream::new(2).rng()).unwrap();
        assert!(inst.response.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pure_noise_norm_concentrates() {
        let params = ModelParams::new(5, 1, 10_000, 0.5, 1.0).unwrap();
        let cov = CovarianceSpec::identity(5).unwrap();
        let inst = sample_slr_instance(&params, &cov, &[0.0; 5], &mut SeedStream::new(3).rng()).unwrap();
        let r = inst.response.iter().map(|v| v * v).sum::<f64>() / 10_000.0;
        assert!((0.95..=1.05).contains(&r), "{r}");
    }

    #[test]
    fn response_variance_adds_signal_and_noise() {
        let params = ModelParams::new(5, 1, 10_000, 0.5, 1.0).unwrap();
        let cov = CovarianceSpec::identity(5).unwrap();
        let mut x = [0.0; 5];
        x[0] = 1.0;
        let inst = sample_slr_instance(&params, &cov, &x, &mut SeedStream::new(4).rng()).unwrap();
        let y = inst.response.to_vec();
        let var = crate::stats::variance(&y);
        assert!((1.9..=2.1).contains(&var), "{var}");
        let resid: Vec<f64> = (&inst.response - &inst.design.dot(&inst.truth.as_ref().unwrap().x_star)).to_vec();
        assert!(crate::stats::mean(&resid).abs() < 0.05);
        assert!((crate::stats::variance(&resid) - 1.0).abs() < 0.05);
    }

    #[test]
    fn rejects_dense_x_star() {
        let params = ModelParams::new(4, 1, 10, 0.5, 1.0).unwrap();
        let cov = CovarianceSpec::identity(4).unwrap();
        assert!(sample_slr_instance(&params, &cov, &[1.0, 1.0, 0.0, 0.0], &mut SeedStream::new(5).rng()).is_err());
        assert!(sample_slr_instance(&params, &cov, &[1.0, 0.0, 0.0], &mut SeedStream::new(5).rng()).is_err());
    }

    #[test]
    fn residual_is_uncorrelated_with_signal() {
        // Z_1 - Z_{\1} x* should have variance 1/2 and no correlation with Z_{\1} x*.
        let params = ModelParams::with_default_theta(60, 3, 20_000).unwrap();
        let z = sample_single::<f64, _>(HypothesisLabel::P, &params, true, &mut SeedStream::new(6).rng()).unwrap();
        let fact = params.planted_slr::<f64>().unwrap();
        let x_star = Array1::from(z.truth_spike().unwrap().tail().to_vec()) * fact.x_star_scale;
        let a = z.data().slice(ndarray::s![.., 1..]);
        let signal = a.dot(&x_star);
        let mut acc = CrossMoments::default();
        for (s, z1) in signal.iter().zip(z.data().column(0)) {
            acc.push(z1 - s, *s);
        }
        assert!((acc.x.variance() - 0.5).abs() < 0.02);
        assert!(acc.correlation().abs() < 0.03);
    }
}
