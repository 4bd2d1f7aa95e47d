use std::collections::BTreeMap;

use rayon::prelude::*;
use slrgap_core::ldlr::{
    binomial_chain, degree_cut, fit_b4_constant, ldlr_norm_bound, low_degree_excess,
    moment_bound_b4, overlap_distribution, overlap_moments_mc, sda_certificate, sq_highdeg_bound,
    LdlrParams, MomentSource,
};
use slrgap_core::rng::{fill_standard_normal, SeedStream};
use slrgap_core::stats::binomial_stderr;

use crate::config::{ExperimentConfig, LdlrGridConfig};
use crate::error::Result;
use crate::report::{AuditReport, Check, Table};
use crate::trials::with_workers;

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationRow {
    pub n: usize,
    pub t: f64,
    pub trials: usize,
    pub exceed: usize,
    pub empirical: f64,
    pub stderr: f64,
    /// `2 exp(-n t^2 / 8)`.
    pub bound: f64,
    pub holds: bool,
}

/// Empirical `Pr(| ||X||^2/n - 1 | >= t)` for `X ~ N(0, Id_n)` against
/// `2 exp(-n t^2 / 8)`, one cell per `(n, t)`. Cell `n_grid[i]` draws from
/// `stream.child(i)`, and all `t` for one `n` share the draws.
pub fn concentration_audit(
    n_grid: &[usize],
    t_grid: &[f64],
    trials: usize,
    stream: &SeedStream,
) -> Vec<ConcentrationRow> {
    let mut rows = Vec::with_capacity(n_grid.len() * t_grid.len());
    for (i, &n) in n_grid.iter().enumerate() {
        let mut rng = stream.child(i as u64).rng();
        let mut buf = vec![0.0f64; n];
        let mut exceed = vec![0usize; t_grid.len()];
        for _ in 0..trials {
            fill_standard_normal(&mut rng, &mut buf);
            let dev = (buf.iter().map(|v| v * v).sum::<f64>() / n as f64 - 1.0).abs();
            for (e, &t) in exceed.iter_mut().zip(t_grid) {
                if dev >= t {
                    *e += 1;
                }
            }
        }
        for (&t, &e) in t_grid.iter().zip(&exceed) {
            let empirical = e as f64 / trials as f64;
            let stderr = binomial_stderr(empirical, trials);
            let bound = 2.0 * (-(n as f64) * t * t / 8.0).exp();
            rows.push(ConcentrationRow {
                n,
                t,
                trials,
                exceed: e,
                empirical,
                stderr,
                bound,
                holds: empirical <= bound + 3.0 * stderr,
            });
        }
    }
    rows
}

pub fn concentration_report(cfg: &ExperimentConfig) -> Result<AuditReport> {
    let grid = cfg.concentration.clone().unwrap_or_default();
    let stream = SeedStream::new(cfg.master_seed).named("concentration");
    let rows = concentration_audit(&grid.n_grid, &grid.t_grid, cfg.trials, &stream);
    let mut table = Table::new(
        "concentration",
        &["n", "t", "trials", "exceed", "empirical", "stderr", "bound", "holds"],
    );
    let mut checks = Vec::new();
    for r in &rows {
        table.push(vec![
            r.n.into(),
            r.t.into(),
            r.trials.into(),
            r.exceed.into(),
            r.empirical.into(),
            r.stderr.into(),
            r.bound.into(),
            r.holds.into(),
        ]);
        checks.push(Check::new(
            format!("tail[n={},t={}]", r.n, r.t),
            r.holds,
            format!("empirical {:.6} ± {:.6}, bound {:.6}", r.empirical, r.stderr, r.bound),
        ));
    }
    Ok(AuditReport {
        audit: "concentration".into(),
        master_seed: cfg.master_seed,
        tables: vec![table],
        extras: BTreeMap::new(),
        checks,
    })
}

/// Every `(d, k)` with `1 <= k <= k_max` and `k <= d <= d_max`.
pub fn ldlr_grid(d_max: usize, k_max: usize) -> Vec<(usize, usize)> {
    (1..=k_max).flat_map(|k| (k..=d_max).map(move |d| (d, k))).collect()
}

struct GridCell {
    d: usize,
    k: usize,
    exact: Vec<f64>,
    exact_log: Vec<f64>,
    mc: Vec<(f64, f64)>,
    split: Vec<bool>,
}

pub fn ldlr_grid_report(cfg: &ExperimentConfig) -> Result<AuditReport> {
    let g: LdlrGridConfig = cfg.ldlr.clone().unwrap_or_default();
    let grid = ldlr_grid(g.d_max, g.k_max);
    let fit = fit_b4_constant(&grid, g.ell_max, g.budget)?;
    let ells: Vec<usize> = (1..=g.ell_max).collect();
    let root = SeedStream::new(cfg.master_seed).named("ldlr-mc");

    let cells: Vec<GridCell> = with_workers(cfg.workers, || {
        grid.par_iter()
            .map(|&(d, k)| -> Result<GridCell> {
                let dist = overlap_distribution(d, k, g.budget)?;
                let mut rng = root.child((d * 1000 + k) as u64).rng();
                let mc = overlap_moments_mc(d, k, &ells, false, g.mc_trials, &mut rng)?;
                let exact: Vec<_> = ells.iter().map(|&l| dist.estimate(l, false)).collect();
                Ok(GridCell {
                    d,
                    k,
                    exact: exact.iter().map(|m| m.value()).collect(),
                    exact_log: exact.iter().map(|m| m.value_log).collect(),
                    mc: mc.iter().map(|m| (m.value(), m.stderr().unwrap_or(0.0))).collect(),
                    split: ells.iter().map(|&l| {
                        let (lhs, rhs) = dist.split_bound(l);
                        lhs <= rhs
                    }).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut moments = Table::new(
        "moments",
        &["d", "k", "ell", "exact", "mc", "mc_stderr", "z", "mc_ok", "monotone_ok", "split_ok", "b4_bound", "b4_ok"],
    );
    let (mut mc_fail, mut mono_fail, mut split_fail, mut b4_fail) = (0, 0, 0, 0);
    let mut worst_z: f64 = 0.0;
    for c in &cells {
        for (i, &ell) in ells.iter().enumerate() {
            let (mc, se) = c.mc[i];
            let diff = (mc - c.exact[i]).abs();
            // zero-variance cells agree up to rounding
            let z = diff / se.max(1e-300);
            let mc_ok = diff <= g.mc_sigmas * se + 1e-12 * c.exact[i];
            let monotone_ok = i == 0 || c.exact[i] <= c.exact[i - 1];
            let b4 = moment_bound_b4(c.d, c.k, ell, fit.c_const);
            let b4_ok = c.exact_log[i] <= b4 + 1e-12;
            if se > 0.0 {
                worst_z = worst_z.max(z);
            }
            mc_fail += usize::from(!mc_ok);
            mono_fail += usize::from(!monotone_ok);
            split_fail += usize::from(!c.split[i]);
            b4_fail += usize::from(!b4_ok);
            moments.push(vec![
                c.d.into(),
                c.k.into(),
                ell.into(),
                c.exact[i].into(),
                mc.into(),
                se.into(),
                (if se > 0.0 { z } else { 0.0 }).into(),
                mc_ok.into(),
                monotone_ok.into(),
                c.split[i].into(),
                b4.exp().into(),
                b4_ok.into(),
            ]);
        }
    }

    let mut chain = Table::new(
        "binomial",
        &["d", "k", "ell", "intersection", "binomial", "bound", "intersection_ok", "bound_ok"],
    );
    let mut chain_fail = 0;
    for (d, k) in ldlr_grid(g.binomial_d_max, g.binomial_k_max) {
        for ell in 1..=g.binomial_ell_max {
            let c = binomial_chain(d, k, ell)?;
            chain_fail += usize::from(!(c.intersection_ok && c.bound_ok));
            chain.push(vec![
                d.into(),
                k.into(),
                ell.into(),
                slrgap_core::ldlr::ln_rational(&c.intersection).exp().into(),
                c.binomial.exact_log.exp().into(),
                c.binomial.bound_log.exp().into(),
                c.intersection_ok.into(),
                c.bound_ok.into(),
            ]);
        }
    }

    let points = moments.rows.len();
    let checks = vec![
        Check::new("mc_vs_exact", mc_fail == 0, format!("{mc_fail} of {points} points outside {} stderr (largest z {worst_z:.3})", g.mc_sigmas)),
        Check::new("moment_monotone", mono_fail == 0, format!("{mono_fail} of {points} points increase in ell")),
        Check::new("split_inequality", split_fail == 0, format!("{split_fail} of {points} points violate the split bound")),
        Check::new(
            "b4_domination",
            b4_fail == 0,
            format!(
                "C = {} (raw {:.6} at d={}, k={}, ell={}); {b4_fail} of {points} points above the bound",
                fit.c_const, fit.c_raw, fit.worst.d, fit.worst.k, fit.worst.ell
            ),
        ),
        Check::new("binomial_chain", chain_fail == 0, format!("{chain_fail} of {} points break the chain", chain.rows.len())),
    ];
    let mut extras = BTreeMap::new();
    extras.insert("c_const".into(), fit.c_const);
    extras.insert("c_raw".into(), fit.c_raw);
    extras.insert("max_z".into(), worst_z);
    Ok(AuditReport {
        audit: "ldlr-grid".into(),
        master_seed: cfg.master_seed,
        tables: vec![moments, chain],
        extras,
        checks,
    })
}

/// `floor(k^e)`, robust to `k^e` landing a hair below an integer.
pub fn floor_pow(k: usize, e: f64) -> usize {
    let v = (k as f64).powf(e);
    (v * (1.0 + 1e-12)).floor() as usize
}

pub fn sq_cert_report(cfg: &ExperimentConfig) -> Result<AuditReport> {
    let s = cfg.sq.clone().unwrap_or_default();
    let fitted;
    let c_const = match s.c_const {
        Some(c) => c,
        None => {
            let g = LdlrGridConfig::default();
            fitted = fit_b4_constant(&ldlr_grid(g.d_max, g.k_max), g.ell_max, g.budget)?;
            fitted.c_const
        }
    };
    let mut table = Table::new(
        "sq-cert",
        &["check", "k", "d", "n", "degree", "value_log", "target_log", "value", "target", "passes", "note"],
    );
    let mut checks = Vec::new();

    for &k in &s.ldlr_ks {
        let d = k.pow(3);
        let n = floor_pow(k, 1.5);
        let degree = floor_pow(k, s.delta_exp);
        let theta = (k as f64 + 1.0) / (k as f64 + 2.0);
        let p = LdlrParams { d, k, n, degree, theta, c_const, delta_exp: s.delta_exp };
        let b = ldlr_norm_bound(&p, MomentSource::B4Bound)?;
        let passes = b.total() <= s.ldlr_max;
        let note = match b.dominant {
            Some((sum, ell)) => format!("dominant {sum:?} term at ell={ell}"),
            None => "empty sums".into(),
        };
        table.push(vec![
            "ldlr".into(), k.into(), d.into(), n.into(), degree.into(),
            b.total_log.into(), s.ldlr_max.ln().into(), b.total().into(), s.ldlr_max.into(),
            passes.into(), note.clone().into(),
        ]);
        checks.push(Check::new(format!("ldlr[k={k}]"), passes, format!("bound {:.6} vs {}; {note}", b.total(), s.ldlr_max)));
    }

    for &k in &s.sq_ks {
        let d = k.pow(3);
        let ell = degree_cut(k, s.delta_exp);
        let theta = (k as f64 + 1.0) / (k as f64 + 2.0);
        let hd = sq_highdeg_bound(d, k, ell, theta, c_const, MomentSource::B4Bound)?;
        let note = if hd.prefactor_exceeds_one {
            format!("|1-4theta^2| = {:.6} > 1: prefactor grows with ell", (1.0 - 4.0 * theta * theta).abs())
        } else {
            String::new()
        };
        table.push(vec![
            "sq-highdeg".into(), k.into(), d.into(), 0usize.into(), ell.into(),
            hd.log_value.into(), hd.target_log.into(), hd.log_value.exp().into(), hd.target_log.exp().into(),
            hd.holds.into(), note.clone().into(),
        ]);
        checks.push(Check::new(
            format!("sq_highdeg[k={k}]"),
            hd.holds,
            format!("ln RHS {:.4} vs ln target {:.4}{}", hd.log_value, hd.target_log, if note.is_empty() { String::new() } else { format!("; flagged: {note}") }),
        ));

        let n = floor_pow(k, 1.6);
        let low = ldlr_norm_bound(
            &LdlrParams { d, k, n, degree: ell, theta, c_const, delta_exp: s.delta_exp },
            MomentSource::B4Bound,
        )?;
        let eps = low_degree_excess(&low);
        for (label, gamma_log) in [("sda-gamma-target", hd.target_log), ("sda-gamma-rhs", hd.log_value)] {
            let cert = sda_certificate(k, n, s.delta_exp, eps, gamma_log)?;
            let note = format!("eps = {eps:.6}, ln gamma = {gamma_log:.4}");
            table.push(vec![
                label.into(), k.into(), d.into(), n.into(), cert.ell.into(),
                cert.sda_arg_log.into(), cert.target_log.into(), cert.sda_arg_log.exp().into(), cert.target_log.exp().into(),
                cert.passes.into(), note.clone().into(),
            ]);
            checks.push(Check::new(format!("{label}[k={k}]"), cert.passes, format!("ln SDA arg {:.4} vs ln target {:.4}; {note}", cert.sda_arg_log, cert.target_log)));
        }
    }
    let mut extras = BTreeMap::new();
    extras.insert("c_const".into(), c_const);
    Ok(AuditReport {
        audit: "sq-cert".into(),
        master_seed: cfg.master_seed,
        tables: vec![table],
        extras,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = ldlr_grid(4, 2);
        assert_eq!(g, vec![(1, 1), (2, 1), (3, 1), (4, 1), (2, 2), (3, 2), (4, 2)]);
    }

    #[test]
    fn integer_powers() {
        assert_eq!(floor_pow(10_000, 1.5), 1_000_000);
        assert_eq!(floor_pow(1000, 0.1), 1);
        assert_eq!(floor_pow(100_000, 0.1), 3);
        assert_eq!(floor_pow(1000, 1.5), 31_622);
    }

    #[test]
    fn concentration_edge_cases() {
        let rows = concentration_audit(&[50], &[0.0, 0.4], 2000, &SeedStream::new(1));
        assert_eq!(rows[0].bound, 2.0);
        assert_eq!(rows[0].exceed, 2000);
        assert!((rows[1].bound - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(rows.iter().all(|r| r.holds));
    }
}
