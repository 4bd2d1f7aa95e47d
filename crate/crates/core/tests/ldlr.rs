use slrgap_core::ldlr::{
    binomial_moment, degree_cut, fit_b4_constant, ldlr_norm_bound, low_degree_excess, moment_bound_b4,
    overlap_moment_exact, overlap_moment_mc, sda_certificate, sq_highdeg_bound, LdlrParams, MomentSource,
    DEFAULT_ENUMERATION_BUDGET,
};
use slrgap_core::rng::SeedStream;

/// Every signed `k`-subset of `0..d` as a dense vector with entries `±1/sqrt(k+1)`.
fn all_patterns(d: usize, k: usize) -> Vec<Vec<f64>> {
    let amp = 1.0 / (k as f64 + 1.0).sqrt();
    let mut out = Vec::new();
    for mask in 0u32..(1 << d) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let support: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
        for signs in 0u32..(1 << k) {
            let mut v = vec![0.0; d];
            for (b, &i) in support.iter().enumerate() {
                v[i] = if signs >> b & 1 == 1 { -amp } else { amp };
            }
            out.push(v);
        }
    }
    out
}

/// Plain double loop over both prior draws, with no symmetry reduction.
fn brute_moment(d: usize, k: usize, ell: usize, include_first: bool) -> f64 {
    let pats = all_patterns(d, k);
    let first = if include_first { 1.0 / (k as f64 + 1.0) } else { 0.0 };
    let mut total = 0.0;
    for a in &pats {
        for b in &pats {
            let ip: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() + first;
            total += ip.powi(2 * ell as i32);
        }
    }
    total / (pats.len() * pats.len()) as f64
}

#[test]
fn exact_enumeration_matches_double_loop() {
    for (d, k) in [(2, 1), (4, 2), (6, 2), (5, 3)] {
        for ell in 1..=3 {
            for include_first in [false, true] {
                let exact = overlap_moment_exact(d, k, ell, include_first, DEFAULT_ENUMERATION_BUDGET).unwrap().value();
                let brute = brute_moment(d, k, ell, include_first);
                assert!((exact - brute).abs() <= 1e-12 * brute, "d={d} k={k} ell={ell}: {exact} vs {brute}");
            }
        }
    }
    assert!((overlap_moment_exact(2, 1, 1, false, 1000).unwrap().value() - 0.125).abs() < 1e-15);
    assert!((overlap_moment_exact(2, 1, 1, true, 1000).unwrap().value() - 0.375).abs() < 1e-15);
}

#[test]
fn monte_carlo_agrees_with_enumeration() {
    let exact = overlap_moment_exact(6, 2, 2, false, DEFAULT_ENUMERATION_BUDGET).unwrap().value();
    let mc = overlap_moment_mc(6, 2, 2, false, 1_000_000, &mut SeedStream::new(60).rng()).unwrap();
    let z = (mc.value() - exact).abs() / mc.stderr().unwrap();
    assert!(z < 4.0, "z = {z}");
}

#[test]
fn moment_bound_dominates_small_grid_with_c_eight() {
    for ell in 1..=3 {
        let exact = overlap_moment_exact(8, 2, ell, false, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert!(exact.value_log <= moment_bound_b4(8, 2, ell, 8.0));
    }
    assert!((moment_bound_b4(100, 10, 2, 1.0) - 0.0036f64.ln()).abs() < 1e-12);
}

#[test]
fn binomial_examples() {
    let m = binomial_moment(2, 4, 2).unwrap();
    assert!((m.exact_log - 1.5f64.ln()).abs() < 1e-12);
    assert!((m.bound_log - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn fitted_constant_is_a_half() {
    let grid: Vec<(usize, usize)> = (1..=3).flat_map(|k| (k..=10).map(move |d| (d, k))).collect();
    let fit = fit_b4_constant(&grid, 4, DEFAULT_ENUMERATION_BUDGET).unwrap();
    assert_eq!(fit.c_const, 0.5);
    assert!((fit.c_raw - 27.0 / 64.0).abs() < 1e-12);
}

#[test]
fn degree_two_bound_is_two_single_terms() {
    let p = LdlrParams { d: 6, k: 2, n: 40, degree: 2, theta: 0.75, c_const: 1.0, delta_exp: 0.1 };
    let b = ldlr_norm_bound(&p, MomentSource::Exact { budget: DEFAULT_ENUMERATION_BUDGET }).unwrap();
    let m1 = brute_moment(6, 2, 1, false);
    let expect = 1.0 + 16.0 * 40.0 * m1 + 16.0 * 40.0 / 9.0;
    assert!((b.total() - expect).abs() < 1e-10 * expect);
}

#[test]
fn large_k_chain_at_one_thousand() {
    let k = 1000usize;
    let d = k.pow(3);
    let theta = (k as f64 + 1.0) / (k as f64 + 2.0);
    let n = ((k as f64).powf(1.5)).floor() as usize;
    let degree = ((k as f64).powf(0.1)).floor() as usize;
    let b = ldlr_norm_bound(
        &LdlrParams { d, k, n, degree, theta, c_const: 0.5, delta_exp: 0.1 },
        MomentSource::B4Bound,
    )
    .unwrap();
    assert!(b.total() <= 1.1);

    let ell = degree_cut(k, 0.1);
    assert_eq!(ell, 2);
    let hd = sq_highdeg_bound(d, k, ell, theta, 0.5, MomentSource::B4Bound).unwrap();
    assert!(hd.holds);
    assert!((hd.target_log + (ell * ell) as f64 / 3.0 * (k as f64).ln()).abs() < 1e-9);
    assert!(hd.log_value <= hd.target_log);
    assert!(sq_highdeg_bound(d, k, 1, 0.5, 0.5, MomentSource::B4Bound).unwrap().log_value == f64::NEG_INFINITY);
}

#[test]
fn certificate_at_ten_thousand() {
    let k = 10_000usize;
    let n = ((k as f64).powf(1.6)).floor() as usize;
    let ell = degree_cut(k, 0.1);
    let gamma_log = -((ell * ell) as f64) / 3.0 * (k as f64).ln();
    let cert = sda_certificate(k, n, 0.1, 0.1, gamma_log).unwrap();
    assert!(cert.passes);
    assert!(cert.sda_arg_log >= cert.target_log);

    // measured excess from the low-degree bound feeds the same check
    let low = ldlr_norm_bound(
        &LdlrParams { d: k.pow(3), k, n, degree: ell, theta: (k as f64 + 1.0) / (k as f64 + 2.0), c_const: 0.5, delta_exp: 0.1 },
        MomentSource::B4Bound,
    )
    .unwrap();
    assert!(low_degree_excess(&low) > 0.0);
}
