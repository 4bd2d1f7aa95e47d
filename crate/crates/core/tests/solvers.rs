use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;
use slrgap_core::rng::{fill_standard_normal, SeedStream};
use slrgap_core::solvers::{
    oracle_exact, oracle_zero, prediction_error, solve_best_subset, solve_lasso, SolveRequest, SolverOptions,
};

fn gaussian(n: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut buf = vec![0.0; n * p];
    fill_standard_normal(&mut SeedStream::new(seed).rng(), &mut buf);
    Array2::from_shape_vec((n, p), buf).unwrap()
}

fn lasso_opts(lambda: f64) -> SolverOptions {
    SolverOptions { lambda: Some(lambda), tol_kkt: 1e-11, max_sweeps: 100_000, ..Default::default() }
}

fn objective(a: &Array2<f64>, y: &Array1<f64>, x: &Array1<f64>, lambda: f64) -> f64 {
    let r = y - &a.dot(x);
    0.5 * r.dot(&r) / a.nrows() as f64 + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

fn rss(a: &Array2<f64>, y: &Array1<f64>, x: &Array1<f64>) -> f64 {
    let r = y - &a.dot(x);
    r.dot(&r)
}

/// Least-squares residual on a support, solved independently through an SVD.
fn brute_rss(a: &Array2<f64>, y: &Array1<f64>, support: &[usize]) -> f64 {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, support.len(), |i, j| a[[i, support[j]]]);
    let v = DVector::from_iterator(n, y.iter().copied());
    let coef = m.clone().svd(true, true).solve(&v, 1e-12).unwrap();
    (v - m * coef).norm_squared()
}

#[test]
fn best_subset_matches_brute_force_over_six_supports() {
    let a = gaussian(12, 4, 11);
    let mut rng = SeedStream::new(12).rng();
    let y: Array1<f64> = (0..12).map(|_| rng.random::<f64>() - 0.5).collect();
    let req = SolveRequest::new(a.view(), y.view(), 2, 1.0).unwrap();
    let rep = solve_best_subset(&req, 2).unwrap();

    let mut best = f64::INFINITY;
    let mut count = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            best = best.min(brute_rss(&a, &y, &[i, j]));
            count += 1;
        }
    }
    assert_eq!(count, 6);
    let got = rss(&a, &y, &rep.x_hat);
    assert!((got - best).abs() < 1e-10 * best.max(1.0), "{got} vs {best}");
    assert!(rep.x_hat.iter().filter(|v| **v != 0.0).count() <= 2);
}

#[test]
fn best_subset_with_full_support_is_least_squares() {
    let a = gaussian(15, 5, 21);
    let y = gaussian(15, 1, 22).column(0).to_owned();
    let req = SolveRequest::new(a.view(), y.view(), 5, 1.0).unwrap();
    let rep = solve_best_subset(&req, 5).unwrap();
    let full = brute_rss(&a, &y, &[0, 1, 2, 3, 4]);
    assert!((rss(&a, &y, &rep.x_hat) - full).abs() < 1e-10);
}

#[test]
fn reference_oracles_give_their_prediction_errors() {
    let a = gaussian(40, 6, 31);
    let x_star = Array1::from(vec![0.0, 1.5, 0.0, -0.5, 0.0, 0.0]);
    let y = a.dot(&x_star);
    let req = SolveRequest::new(a.view(), y.view(), 2, 1.0).unwrap().with_truth(x_star.clone()).unwrap();
    let zero = oracle_zero(&req).unwrap();
    let exact = oracle_exact(&req).unwrap();
    let ax = a.dot(&x_star);
    let expect = ax.dot(&ax) / 40.0;
    assert!((prediction_error(a.view(), zero.x_hat.view(), x_star.view()).unwrap() - expect).abs() < 1e-12);
    assert_eq!(prediction_error(a.view(), exact.x_hat.view(), x_star.view()).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lasso_scales_with_response(seed in 0u64..10_000, c in 0.2f64..5.0, lambda in 0.01f64..0.3) {
        let a = gaussian(30, 8, seed);
        let y = gaussian(30, 1, seed + 1).column(0).to_owned();
        let base = SolveRequest::new(a.view(), y.view(), 3, 1.0).unwrap().with_options(lasso_opts(lambda));
        let x1 = solve_lasso(&base).unwrap().x_hat;
        let cy = &y * c;
        let scaled = SolveRequest::new(a.view(), cy.view(), 3, 1.0).unwrap().with_options(lasso_opts(c * lambda));
        let x2 = solve_lasso(&scaled).unwrap().x_hat;
        for (u, v) in x1.iter().zip(x2.iter()) {
            prop_assert!((c * u - v).abs() < 1e-6 * (1.0 + v.abs()), "{} vs {}", c * u, v);
        }
    }

    #[test]
    fn lasso_beats_zero_and_satisfies_kkt(seed in 0u64..10_000, lambda in 0.01f64..0.5) {
        let a = gaussian(25, 10, seed);
        let y = gaussian(25, 1, seed + 7).column(0).to_owned();
        let req = SolveRequest::new(a.view(), y.view(), 3, 1.0).unwrap().with_options(lasso_opts(lambda));
        let rep = solve_lasso(&req).unwrap();
        prop_assert!(rep.converged);
        let at_zero = objective(&a, &y, &Array1::zeros(10), lambda);
        let at_hat = objective(&a, &y, &rep.x_hat, lambda);
        prop_assert!(at_hat <= at_zero + 1e-12);
        prop_assert!((rep.objective_trace.last().unwrap() - at_hat).abs() < 1e-9);
        prop_assert!(rep.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        // subgradient conditions checked from scratch
        let g = a.t().dot(&(&y - &a.dot(&rep.x_hat))) / 25.0;
        for (gj, xj) in g.iter().zip(rep.x_hat.iter()) {
            if *xj == 0.0 {
                prop_assert!(gj.abs() <= lambda + 1e-8);
            } else {
                prop_assert!((gj - lambda * xj.signum()).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn best_subset_residual_never_exceeds_lasso(seed in 0u64..10_000, lambda in 0.0f64..0.4) {
        let a = gaussian(12, 5, seed);
        let y = gaussian(12, 1, seed + 3).column(0).to_owned();
        let req = SolveRequest::new(a.view(), y.view(), 5, 1.0).unwrap().with_options(lasso_opts(lambda));
        let subset = solve_best_subset(&req, 5).unwrap();
        let lasso = solve_lasso(&req).unwrap();
        prop_assert!(rss(&a, &y, &subset.x_hat) <= rss(&a, &y, &lasso.x_hat) + 1e-9);
    }
}
