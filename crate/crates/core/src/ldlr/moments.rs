use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::logspace::ln_rational;
use crate::error::{param, Error, Result};
use crate::model::sample_spike;

/// Default cap on enumerated spike patterns.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMethod {
    ExactEnumeration,
    MonteCarlo,
    B4Bound,
}

/// Which overlap moment `E <x, x'>^{2 ell}` is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentConfig {
    pub d: usize,
    pub k: usize,
    pub ell: usize,
    /// Include the pinned first coordinate in the inner product.
    pub include_first: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentEstimate {
    pub value_log: f64,
    pub method: MomentMethod,
    /// Standard error of `value_log` (Monte Carlo only).
    pub stderr_log: Option<f64>,
    pub config: MomentConfig,
    /// The exact rational, for enumerated moments.
    pub exact: Option<BigRational>,
}

impl MomentEstimate {
    pub fn value(&self) -> f64 {
        self.value_log.exp()
    }

    /// Standard error on the linear scale.
    pub fn stderr(&self) -> Option<f64> {
        self.stderr_log.map(|s| s * self.value())
    }
}

fn check_dims(d: usize, k: usize) -> Result<()> {
    if k == 0 || k > d {
        return param(format!("need 1 <= k <= d, got k = {k}, d = {d}"));
    }
    Ok(())
}

fn binom(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Calls `f` on every `k`-subset of `0..d` in lexicographic order.
fn for_each_subset(d: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < d - k + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Law of the tail overlap `(k+1) <x_{\1}, x'_{\1}>` under the sparse prior.
///
/// The first spike is fixed to support `{0..k}` with positive signs, which
/// loses nothing by exchangeability; every support and sign pattern of the
/// second spike is enumerated. `counts[s + k]` counts patterns with overlap `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapDistribution {
    pub d: usize,
    pub k: usize,
    pub counts: Vec<BigUint>,
    pub total: BigUint,
}

/// Patterns visited by the enumeration, `C(d, k) 2^k`.
pub fn enumeration_cost(d: usize, k: usize) -> BigUint {
    binom(d as u64, k as u64) << k
}

pub fn overlap_distribution(d: usize, k: usize, budget: u64) -> Result<OverlapDistribution> {
    check_dims(d, k)?;
    let cost = enumeration_cost(d, k);
    if cost > BigUint::from(budget) {
        return Err(Error::Budget {
            required: cost.to_u128().unwrap_or(u128::MAX),
            budget: budget as u128,
            fallback: "use the Monte Carlo moment estimator",
        });
    }
    let mut counts = vec![0u64; 2 * k + 1];
    for_each_subset(d, k, |support| {
        let shared: Vec<usize> = (0..k).filter(|&i| support[i] < k).collect();
        for mask in 0u64..(1u64 << k) {
            let s: i64 = shared.iter().map(|&i| if mask >> i & 1 == 1 { 1 } else { -1 }).sum();
            counts[(s + k as i64) as usize] += 1;
        }
    });
    Ok(OverlapDistribution {
        d,
        k,
        counts: counts.into_iter().map(BigUint::from).collect(),
        total: cost,
    })
}

impl OverlapDistribution {
    /// `E <x, x'>^power` as an exact rational.
    pub fn moment(&self, power: u32, include_first: bool) -> BigRational {
        let k = self.k as i64;
        let shift = if include_first { 1 } else { 0 };
        let mut num = BigInt::zero();
        for (i, c) in self.counts.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let s = BigInt::from(i as i64 - k + shift);
            num += BigInt::from(c.clone()) * num_traits::pow(s, power as usize);
        }
        let den = BigInt::from(self.total.clone()) * num_traits::pow(BigInt::from(k + 1), power as usize);
        BigRational::new(num, den)
    }

    /// Both sides of `E <x, x'>^{2l} <= 2^{2l} E <x_{\1}, x'_{\1}>^{2l} + (4/(k+1)^2)^l`.
    pub fn split_bound(&self, ell: usize) -> (BigRational, BigRational) {
        let p = 2 * ell as u32;
        let lhs = self.moment(p, true);
        let four_l = BigRational::from_integer(num_traits::pow(BigInt::from(4), ell));
        let kp1 = BigInt::from(self.k + 1);
        let pinned = BigRational::new(num_traits::pow(BigInt::from(4), ell), num_traits::pow(&kp1 * &kp1, ell));
        (lhs, four_l * self.moment(p, false) + pinned)
    }

    pub fn estimate(&self, ell: usize, include_first: bool) -> MomentEstimate {
        let exact = self.moment(2 * ell as u32, include_first);
        MomentEstimate {
            value_log: ln_rational(&exact),
            method: MomentMethod::ExactEnumeration,
            stderr_log: None,
            config: MomentConfig { d: self.d, k: self.k, ell, include_first },
            exact: Some(exact),
        }
    }
}

/// Exact `E <x, x'>^{2 ell}` under the sparse prior, by enumeration.
pub fn overlap_moment_exact(
    d: usize,
    k: usize,
    ell: usize,
    include_first: bool,
    budget: u64,
) -> Result<MomentEstimate> {
    Ok(overlap_distribution(d, k, budget)?.estimate(ell, include_first))
}

/// Monte Carlo estimates of `E <x, x'>^{2 ell}` for several `ell` from one
/// set of prior draws.
pub fn overlap_moments_mc<R: Rng + ?Sized>(
    d: usize,
    k: usize,
    ells: &[usize],
    include_first: bool,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<MomentEstimate>> {
    check_dims(d, k)?;
    if trials < 1000 {
        return param(format!("Monte Carlo moments need at least 1000 trials, got {trials}"));
    }
    let mut sum = vec![0.0f64; ells.len()];
    let mut sum_sq = vec![0.0f64; ells.len()];
    for _ in 0..trials {
        let a = sample_spike::<f64, _>(d, k, true, rng)?;
        let b = sample_spike::<f64, _>(d, k, true, rng)?;
        let start = usize::from(!include_first);
        let ov: f64 = a.support().iter().filter(|&&j| j >= start).map(|&j| a.entries()[j] * b.entries()[j]).sum();
        let sq = ov * ov;
        for (i, &ell) in ells.iter().enumerate() {
            let v = sq.powi(ell as i32);
            sum[i] += v;
            sum_sq[i] += v * v;
        }
    }
    let t = trials as f64;
    Ok(ells
        .iter()
        .enumerate()
        .map(|(i, &ell)| {
            let mean = sum[i] / t;
            let var = (sum_sq[i] / t - mean * mean).max(0.0) * t / (t - 1.0);
            let stderr = (var / t).sqrt();
            MomentEstimate {
                value_log: mean.ln(),
                method: MomentMethod::MonteCarlo,
                stderr_log: Some(stderr / mean),
                config: MomentConfig { d, k, ell, include_first },
                exact: None,
            }
        })
        .collect())
}

pub fn overlap_moment_mc<R: Rng + ?Sized>(
    d: usize,
    k: usize,
    ell: usize,
    include_first: bool,
    trials: usize,
    rng: &mut R,
) -> Result<MomentEstimate> {
    Ok(overlap_moments_mc(d, k, &[ell], include_first, trials, rng)?.remove(0))
}

/// `ln[(C ell)^ell (1/d + ell/k^2)^ell]`.
pub fn moment_bound_b4(d: usize, k: usize, ell: usize, c_const: f64) -> f64 {
    let l = ell as f64;
    let kf = k as f64;
    l * (c_const * l).ln() + l * (1.0 / d as f64 + l / (kf * kf)).ln()
}

/// Moments of `B ~ Bin(k, k/d)` and the bound `(k^2/d + ell/2)^ell`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinomialMoment {
    pub exact: BigRational,
    pub exact_log: f64,
    pub bound_log: f64,
}

pub fn binomial_moment(k: usize, d: usize, ell: usize) -> Result<BinomialMoment> {
    check_dims(d, k)?;
    // E B^ell = sum_j C(k,j) k^j (d-k)^(k-j) j^ell / d^k
    let (kb, db) = (BigInt::from(k), BigInt::from(d));
    let mut num = BigInt::zero();
    for j in 0..=k {
        let w = BigInt::from(binom(k as u64, j as u64))
            * num_traits::pow(kb.clone(), j)
            * num_traits::pow(&db - &kb, k - j)
            * num_traits::pow(BigInt::from(j), ell);
        num += w;
    }
    let exact = BigRational::new(num, num_traits::pow(db, k));
    let kf = k as f64;
    let bound_log = ell as f64 * (kf * kf / d as f64 + ell as f64 / 2.0).ln();
    Ok(BinomialMoment { exact_log: ln_rational(&exact), exact, bound_log })
}

/// `E |S ∩ S'|^ell` for independent uniform `k`-subsets of `0..d`, by enumeration.
pub fn intersection_moment(d: usize, k: usize, ell: usize) -> Result<BigRational> {
    check_dims(d, k)?;
    let mut num = BigInt::zero();
    let mut count = BigInt::zero();
    for_each_subset(d, k, |support| {
        let shared = support.iter().filter(|&&j| j < k).count();
        num += num_traits::pow(BigInt::from(shared), ell);
        count += 1;
    });
    Ok(BigRational::new(num, count))
}

/// `E |S ∩ S'|^ell <= E B^ell <= (k^2/d + ell/2)^ell` with `B ~ Bin(k, k/d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinomialChain {
    pub intersection: BigRational,
    pub binomial: BinomialMoment,
    pub intersection_ok: bool,
    pub bound_ok: bool,
}

pub fn binomial_chain(d: usize, k: usize, ell: usize) -> Result<BinomialChain> {
    let intersection = intersection_moment(d, k, ell)?;
    let binomial = binomial_moment(k, d, ell)?;
    let intersection_ok = intersection <= binomial.exact;
    let bound_ok = binomial.exact_log <= binomial.bound_log + 1e-12;
    Ok(BinomialChain { intersection, binomial, intersection_ok, bound_ok })
}

/// One grid point of the constant fit.
#[derive(Clone, Debug, PartialEq)]
pub struct B4FitPoint {
    pub d: usize,
    pub k: usize,
    pub ell: usize,
    /// Smallest `C` for which this point satisfies the bound.
    pub c_needed: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct B4Fit {
    /// Largest requirement over the grid, rounded up to one decimal.
    pub c_const: f64,
    pub c_raw: f64,
    pub worst: B4FitPoint,
    pub points: Vec<B4FitPoint>,
}

/// Fits the constant of the moment bound over `(d, k)` pairs and `1..=max_ell`.
pub fn fit_b4_constant(grid: &[(usize, usize)], max_ell: usize, budget: u64) -> Result<B4Fit> {
    if grid.is_empty() || max_ell == 0 {
        return param("constant fit needs a non-empty grid");
    }
    let mut points = Vec::new();
    for &(d, k) in grid {
        let dist = overlap_distribution(d, k, budget)?;
        for ell in 1..=max_ell {
            let m = dist.estimate(ell, false).value_log;
            let l = ell as f64;
            let base = (1.0 / d as f64 + l / (k as f64 * k as f64)).ln();
            // m <= (C l)^l base^l  <=>  C >= exp(m/l - base) / l
            let c_needed = (m / l - base).exp() / l;
            points.push(B4FitPoint { d, k, ell, c_needed });
        }
    }
    let worst = points
        .iter()
        .cloned()
        .max_by(|a, b| a.c_needed.total_cmp(&b.c_needed))
        .expect("non-empty grid");
    let c_raw = worst.c_needed;
    let c_const = (c_raw * 10.0 - 1e-9).ceil() / 10.0;
    Ok(B4Fit { c_const: c_const.max(0.1), c_raw, worst, points })
}
