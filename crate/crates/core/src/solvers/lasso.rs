use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, ShapeBuilder, Zip};

use super::{SlrOracle, SolveReport, SolveRequest};
use crate::error::{param, Result};
use crate::scalar::Real;

/// LASSO by cyclic coordinate descent.
#[derive(Clone, Copy, Debug, Default)]
pub struct Lasso;

impl<T: Real> SlrOracle<T> for Lasso {
    fn name(&self) -> &'static str {
        "lasso"
    }

    fn solve(&self, req: &SolveRequest<'_, T>) -> Result<SolveReport<T>> {
        solve_lasso(req)
    }
}

pub fn soft_threshold<T: Real>(z: T, lambda: T) -> T {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        T::zero()
    }
}

/// `2 sqrt(sigma2) sqrt(2 ln(2p) / n) max_j ||A_j|| / sqrt(n)`.
pub fn default_lambda<T: Real>(design: ArrayView2<'_, T>, sigma2_known: T) -> T {
    let (n, p) = design.dim();
    let nf = T::from_count(n);
    let max_norm = design
        .axis_iter(Axis(1))
        .map(|c| c.dot(&c).sqrt())
        .fold(T::zero(), T::max);
    let two = T::lit(2.0);
    two * sigma2_known.sqrt() * (two * (two * T::from_count(p)).ln() / nf).sqrt() * max_norm
        / nf.sqrt()
}

/// Max violation of the LASSO stationarity conditions given `g = A^T r / n`.
fn kkt_violation<T: Real>(grad: ArrayView1<'_, T>, x: ArrayView1<'_, T>, lambda: T) -> T {
    let mut worst = T::zero();
    for (&g, &xj) in grad.iter().zip(x.iter()) {
        let v = if xj == T::zero() {
            (g.abs() - lambda).max(T::zero())
        } else {
            (g - lambda * xj.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Minimises `(1/2n) ||y - Ax||^2 + lambda ||x||_1`.
///
/// The residual is recomputed from scratch after every sweep, so the
/// reported KKT residual and objective never carry accumulated drift.
pub fn solve_lasso<T: Real>(req: &SolveRequest<'_, T>) -> Result<SolveReport<T>> {
    req.check_finite()?;
    let opts = &req.options;
    if !(opts.tol_kkt > 0.0) {
        return param(format!("tol_kkt must be positive, got {}", opts.tol_kkt));
    }
    let (n, p) = req.design.dim();
    let nf = T::from_count(n);

    // column-major working copy so each coordinate touches contiguous memory
    let mut a = Array2::<T>::zeros((n, p).f());
    a.assign(&req.design);
    let mut scale = vec![T::one(); p];
    if opts.normalize_columns {
        for (j, mut col) in a.axis_iter_mut(Axis(1)).enumerate() {
            let norm = col.dot(&col).sqrt();
            if norm > T::zero() {
                let s = nf.sqrt() / norm;
                col.mapv_inplace(|v| v * s);
                scale[j] = s;
            }
        }
    }

    let lambda = match opts.lambda {
        Some(l) if l >= 0.0 && l.is_finite() => T::lit(l),
        Some(l) => return param(format!("lambda must be finite and >= 0, got {l}")),
        None => default_lambda(a.view(), req.sigma2_known),
    };
    let tol = T::lit(opts.tol_kkt);
    let col_sq: Vec<T> = a.axis_iter(Axis(1)).map(|c| c.dot(&c) / nf).collect();

    let y = req.response;
    let mut x = Array1::<T>::zeros(p);
    let mut r = y.to_owned();
    let half = T::lit(0.5);
    let objective = |r: &Array1<T>, x: &Array1<T>| {
        half * r.dot(r) / nf + lambda * x.iter().map(|v| v.abs()).sum::<T>()
    };

    let mut grad = a.t().dot(&r) / nf;
    let mut kkt = kkt_violation(grad.view(), x.view(), lambda);
    let mut trace = vec![objective(&r, &x)];
    let mut sweeps = 0;

    while kkt > tol && sweeps < opts.max_sweeps {
        for (j, col) in a.axis_iter(Axis(1)).enumerate() {
            let cj = col_sq[j];
            if cj == T::zero() {
                continue;
            }
            let old = x[j];
            let z = col.dot(&r) / nf + cj * old;
            let new = soft_threshold(z, lambda) / cj;
            if new != old {
                let step = new - old;
                Zip::from(&mut r).and(&col).for_each(|ri, &aij| *ri -= step * aij);
                x[j] = new;
            }
        }
        sweeps += 1;

        r = &y - &a.dot(&x);
        grad = a.t().dot(&r) / nf;
        kkt = kkt_violation(grad.view(), x.view(), lambda);
        let obj = objective(&r, &x);
        // exact CD never increases the objective; clamp away rounding noise
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(obj.min(prev));
    }

    for (xj, s) in x.iter_mut().zip(&scale) {
        *xj *= *s;
    }
    Ok(SolveReport {
        x_hat: x,
        sweeps_used: sweeps,
        kkt_residual: kkt,
        objective_trace: trace,
        converged: kkt <= tol,
        lambda: Some(lambda),
    })
}
