use serde::{Deserialize, Serialize};

use super::logspace::{log_sum_exp, softplus};
use super::moments::{moment_bound_b4, overlap_distribution, overlap_moments_mc};
use crate::error::{param, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdlrParams {
    pub d: usize,
    pub k: usize,
    pub n: usize,
    /// Polynomial degree `D`.
    #[serde(rename = "D", alias = "degree")]
    pub degree: usize,
    pub theta: f64,
    pub c_const: f64,
    pub delta_exp: f64,
}

impl LdlrParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.d {
            return param(format!("need 1 <= k <= d, got k = {}, d = {}", self.k, self.d));
        }
        if !(self.c_const > 0.0 && self.c_const.is_finite()) {
            return param(format!("c_const must be positive, got {}", self.c_const));
        }
        if !(self.delta_exp > 0.0 && self.delta_exp <= 0.1) {
            return param(format!("delta_exp must lie in (0, 0.1], got {}", self.delta_exp));
        }
        Ok(())
    }
}

/// Where the overlap moments `E <x_{\1}, x'_{\1}>^{2 ell}` come from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentSource {
    Exact { budget: u64 },
    Mc { trials: usize, seed: u64 },
    B4Bound,
}

/// Log moments `ln m_ell` for `ell = 1..=max_ell`, tail coordinates only.
fn tail_moment_logs(d: usize, k: usize, max_ell: usize, c_const: f64, source: MomentSource) -> Result<Vec<f64>> {
    if max_ell == 0 {
        return Ok(Vec::new());
    }
    let ells: Vec<usize> = (1..=max_ell).collect();
    Ok(match source {
        MomentSource::B4Bound => ells.iter().map(|&l| moment_bound_b4(d, k, l, c_const)).collect(),
        MomentSource::Exact { budget } => {
            let dist = overlap_distribution(d, k, budget)?;
            ells.iter().map(|&l| dist.estimate(l, false).value_log).collect()
        }
        MomentSource::Mc { trials, seed } => {
            let mut rng = crate::rng::SeedStream::new(seed).rng();
            overlap_moments_mc(d, k, &ells, false, trials, &mut rng)?
                .into_iter()
                .map(|m| m.value_log)
                .collect()
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LdlrSum {
    /// `(16 max(n, D) / ell)^ell m_ell`.
    Overlap,
    /// `(16 max(n, D) / ((k+1)^2 ell))^ell`.
    Pinned,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LdlrTerm {
    pub sum: LdlrSum,
    pub ell: usize,
    pub log_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LdlrBound {
    /// `ln(bound - 1)`; `-inf` when both sums are empty.
    pub excess_log: f64,
    /// `ln(bound)`.
    pub total_log: f64,
    pub dominant: Option<(LdlrSum, usize)>,
    pub terms: Vec<LdlrTerm>,
}

impl LdlrBound {
    pub fn total(&self) -> f64 {
        self.total_log.exp()
    }
}

/// `1 + sum_ell (16 max(n,D)/ell)^ell m_ell + sum_ell (16 max(n,D)/((k+1)^2 ell))^ell`
/// over `ell = 1..=floor(D/2)`, aggregated in log space.
pub fn ldlr_norm_bound(params: &LdlrParams, source: MomentSource) -> Result<LdlrBound> {
    params.validate()?;
    let max_ell = params.degree / 2;
    let moments = tail_moment_logs(params.d, params.k, max_ell, params.c_const, source)?;
    let big = (16.0 * params.n.max(params.degree) as f64).ln();
    let kp1_sq = 2.0 * (params.k as f64 + 1.0).ln();
    let mut terms = Vec::with_capacity(2 * max_ell);
    for (i, m) in moments.iter().enumerate() {
        let ell = i + 1;
        let l = ell as f64;
        terms.push(LdlrTerm { sum: LdlrSum::Overlap, ell, log_value: l * (big - l.ln()) + m });
        terms.push(LdlrTerm { sum: LdlrSum::Pinned, ell, log_value: l * (big - kp1_sq - l.ln()) });
    }
    let logs: Vec<f64> = terms.iter().map(|t| t.log_value).collect();
    let excess_log = log_sum_exp(&logs);
    let dominant = terms
        .iter()
        .max_by(|a, b| a.log_value.total_cmp(&b.log_value))
        .map(|t| (t.sum, t.ell));
    Ok(LdlrBound { excess_log, total_log: softplus(excess_log), dominant, terms })
}

/// High-degree statistical-query bound for one degree cut `ell`.
#[derive(Clone, Debug, PartialEq)]
pub struct SqHighDeg {
    pub ell: usize,
    /// `2 ell^2 ln ell + 2 ell^2 ln|1 - 4 theta^2| + ln E<x, x'>^{2 ell (ell+1)}`.
    pub log_value: f64,
    /// `-(ell^2 / 3) ln k`.
    pub target_log: f64,
    pub moment_log: f64,
    pub holds: bool,
    /// `|1 - 4 theta^2| > 1`: the prefactor grows with `ell` instead of shrinking.
    pub prefactor_exceeds_one: bool,
}

/// Log of `E <x, x'>^{2 l}` with the pinned coordinate included.
///
/// Exact and Monte Carlo sources evaluate it directly. The `B4Bound` source
/// has only tail moments, so it goes through
/// `E <x, x'>^{2l} <= 2^{2l} E <x_{\1}, x'_{\1}>^{2l} + (4/(k+1)^2)^l`.
pub fn full_moment_log(d: usize, k: usize, l: usize, c_const: f64, source: MomentSource) -> Result<f64> {
    Ok(match source {
        MomentSource::B4Bound => {
            let lf = l as f64;
            let split = 2.0 * lf * 2f64.ln() + moment_bound_b4(d, k, l, c_const);
            let pinned = lf * (4f64.ln() - 2.0 * (k as f64 + 1.0).ln());
            log_sum_exp(&[split, pinned])
        }
        MomentSource::Exact { budget } => overlap_distribution(d, k, budget)?.estimate(l, true).value_log,
        MomentSource::Mc { trials, seed } => {
            let mut rng = crate::rng::SeedStream::new(seed).rng();
            overlap_moments_mc(d, k, &[l], true, trials, &mut rng)?[0].value_log
        }
    })
}

pub fn sq_highdeg_bound(
    d: usize,
    k: usize,
    ell: usize,
    theta: f64,
    c_const: f64,
    source: MomentSource,
) -> Result<SqHighDeg> {
    if ell == 0 {
        return param("degree cut must be at least 1");
    }
    if k == 0 || k > d {
        return param(format!("need 1 <= k <= d, got k = {k}, d = {d}"));
    }
    let l = ell as f64;
    let factor = (1.0 - 4.0 * theta * theta).abs();
    let moment_log = full_moment_log(d, k, ell * (ell + 1), c_const, source)?;
    let prefactor = if factor == 0.0 {
        f64::NEG_INFINITY
    } else {
        2.0 * l * l * l.ln() + 2.0 * l * l * factor.ln()
    };
    let log_value = prefactor + moment_log;
    let target_log = -(l * l / 3.0) * (k as f64).ln();
    Ok(SqHighDeg {
        ell,
        log_value,
        target_log,
        moment_log,
        holds: log_value <= target_log,
        prefactor_exceeds_one: factor > 1.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SqCertificate {
    pub ell: usize,
    /// `ln q` with `q = 2^ell`.
    pub q_log: f64,
    pub gamma_hd_log: f64,
    pub eps: f64,
    /// `ln[n / (q^{2/ell} (ell eps^{2/ell} + gamma^{2/ell} n))]`; `+inf` when
    /// both `eps` and `gamma` vanish.
    pub sda_arg_log: f64,
    /// `ln[n / (100 k^delta)]`.
    pub target_log: f64,
    pub passes: bool,
}

/// `ceil(k^delta)`, guarding against `k^delta` landing a hair above an integer.
pub fn degree_cut(k: usize, delta_exp: f64) -> usize {
    ((k as f64).powf(delta_exp) - 1e-9).ceil().max(1.0) as usize
}

pub fn sda_certificate(
    k: usize,
    n: usize,
    delta_exp: f64,
    eps: f64,
    gamma_hd_log: f64,
) -> Result<SqCertificate> {
    if !(eps >= 0.0 && eps.is_finite()) || gamma_hd_log.is_nan() || gamma_hd_log == f64::INFINITY {
        return param(format!("need finite eps >= 0 and gamma, got eps = {eps}, ln gamma = {gamma_hd_log}"));
    }
    if k == 0 || n == 0 {
        return param("k and n must be positive");
    }
    let ell = degree_cut(k, delta_exp);
    let l = ell as f64;
    let q_log = l * 2f64.ln();
    let ln_n = (n as f64).ln();
    let eps_term = if eps == 0.0 { f64::NEG_INFINITY } else { l.ln() + (2.0 / l) * eps.ln() };
    let gamma_term = (2.0 / l) * gamma_hd_log + ln_n;
    let denom = log_sum_exp(&[eps_term, gamma_term]);
    // q^{2/ell} = 4 for q = 2^ell
    let sda_arg_log = ln_n - 2.0 / l * q_log - denom;
    let target_log = ln_n - 100f64.ln() - delta_exp * (k as f64).ln();
    Ok(SqCertificate {
        ell,
        q_log,
        gamma_hd_log,
        eps,
        sda_arg_log,
        target_log,
        passes: sda_arg_log >= target_log,
    })
}

/// `sqrt(bound - 1)` from a computed bound, the low-degree excess fed to the certificate.
pub fn low_degree_excess(bound: &LdlrBound) -> f64 {
    if bound.excess_log == f64::NEG_INFINITY {
        0.0
    } else {
        (0.5 * bound.excess_log).exp()
    }
}
