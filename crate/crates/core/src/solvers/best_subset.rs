use ndarray::{Array1, ArrayView1, Axis};

use super::lstsq::{least_squares, orthogonalize, rank_tol};
use super::{SlrOracle, SolveReport, SolveRequest};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Exhaustive search over supports of size at most `k_hint`.
#[derive(Clone, Copy, Debug, Default)]
pub struct BestSubset;

impl<T: Real> SlrOracle<T> for BestSubset {
    fn name(&self) -> &'static str {
        "best-subset"
    }

    fn solve(&self, req: &SolveRequest<'_, T>) -> Result<SolveReport<T>> {
        solve_best_subset(req, req.k_hint)
    }
}

/// Number of supports of size `0..=k` out of `p`, saturating.
pub(crate) fn support_count(p: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for s in 0..=k.min(p) {
        total = total.saturating_add(c);
        c = c.saturating_mul((p - s) as u128) / (s as u128 + 1);
    }
    total
}

struct Search<'a, T> {
    cols: Vec<ArrayView1<'a, T>>,
    k: usize,
    tol: T,
    basis: Vec<Array1<T>>,
    path: Vec<usize>,
    best_rss: T,
    best: Vec<usize>,
    trace: Vec<T>,
    evaluated: usize,
    nf: T,
}

impl<T: Real> Search<'_, T> {
    /// Depth-first walk in lexicographic order: a prefix precedes its extensions.
    fn visit(&mut self, start: usize, resid: &Array1<T>) {
        if self.path.len() == self.k {
            return;
        }
        for j in start..self.cols.len() {
            let mut v = self.cols[j].to_owned();
            let norm0 = orthogonalize(&self.basis, &mut v);
            let rest = v.dot(&v).sqrt();
            let independent = norm0 > T::zero() && rest > self.tol * norm0;
            let next = if independent {
                v.mapv_inplace(|x| x / rest);
                let mut r = resid.clone();
                r.scaled_add(-v.dot(resid), &v);
                self.basis.push(v);
                r
            } else {
                resid.clone()
            };
            self.path.push(j);
            self.evaluated += 1;
            let rss = next.dot(&next);
            // strict improvement beyond rounding keeps the earliest support on ties
            if rss < self.best_rss - self.tol * self.best_rss.max(T::min_positive_value()) {
                self.best_rss = rss;
                self.best = self.path.clone();
                self.trace.push(rss / (T::lit(2.0) * self.nf));
            }
            self.visit(j + 1, &next);
            self.path.pop();
            if independent {
                self.basis.pop();
            }
        }
    }
}

/// Least-squares fit on the best support of size at most `k`.
///
/// Refuses when the number of candidate supports exceeds
/// `options.subset_budget`. `sweeps_used` reports supports evaluated.
pub fn solve_best_subset<T: Real>(req: &SolveRequest<'_, T>, k: usize) -> Result<SolveReport<T>> {
    req.check_finite()?;
    let (n, p) = req.design.dim();
    let required = support_count(p, k);
    let budget = req.options.subset_budget as u128;
    if required > budget {
        return Err(Error::Budget {
            required,
            budget,
            fallback: "use the lasso oracle or raise subset_budget",
        });
    }
    let y = req.response;
    let nf = T::from_count(n);
    let yy = y.dot(&y);
    let mut search = Search {
        cols: req.design.axis_iter(Axis(1)).collect(),
        k: k.min(p),
        tol: rank_tol::<T>(n),
        basis: Vec::with_capacity(k.min(n)),
        path: Vec::with_capacity(k),
        best_rss: yy,
        best: Vec::new(),
        trace: vec![yy / (T::lit(2.0) * nf)],
        evaluated: 1,
        nf,
    };
    search.visit(0, &y.to_owned());

    let mut x_hat = Array1::<T>::zeros(p);
    let mut kkt = T::zero();
    if !search.best.is_empty() {
        let sub = req.design.select(Axis(1), &search.best);
        let (coef, _) = least_squares(sub.view(), y);
        let resid = &y - &sub.dot(&coef);
        for (&j, &c) in search.best.iter().zip(coef.iter()) {
            x_hat[j] = c;
        }
        kkt = sub.t().dot(&resid).iter().fold(T::zero(), |m, v| m.max(v.abs() / nf));
    }
    Ok(SolveReport {
        x_hat,
        sweeps_used: search.evaluated,
        kkt_residual: kkt,
        objective_trace: search.trace,
        converged: true,
        lambda: None,
    })
}
