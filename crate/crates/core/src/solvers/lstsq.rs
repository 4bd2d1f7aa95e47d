use ndarray::{Array1, ArrayView1, ArrayView2, Axis};

use crate::scalar::Real;

/// Relative size below which an orthogonalised column counts as dependent.
pub(crate) fn rank_tol<T: Real>(n: usize) -> T {
    T::epsilon() * T::from_count(n.max(1)) * T::lit(16.0)
}

/// Removes the components of `v` along the orthonormal `basis`, twice.
///
/// A second Gram-Schmidt pass recovers the orthogonality a single pass loses
/// when `v` is nearly in the span. Returns the norm of `v` before projection.
pub(crate) fn orthogonalize<T: Real>(basis: &[Array1<T>], v: &mut Array1<T>) -> T {
    let norm0 = v.dot(v).sqrt();
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            v.scaled_add(-c, q);
        }
    }
    norm0
}

/// Least squares via modified Gram-Schmidt with reorthogonalisation.
///
/// Columns that are numerically dependent on earlier ones get a zero
/// coefficient. Returns the coefficients and the residual sum of squares.
pub fn least_squares<T: Real>(a: ArrayView2<'_, T>, y: ArrayView1<'_, T>) -> (Array1<T>, T) {
    let (n, s) = a.dim();
    let tol = rank_tol::<T>(n);
    let mut basis: Vec<Array1<T>> = Vec::with_capacity(s.min(n));
    let mut kept: Vec<usize> = Vec::with_capacity(s.min(n));
    // r_cols[i] holds the R-factor column of kept[i]
    let mut r_cols: Vec<Vec<T>> = Vec::with_capacity(s.min(n));
    for (j, col) in a.axis_iter(Axis(1)).enumerate() {
        let mut v = col.to_owned();
        let norm0 = orthogonalize(&basis, &mut v);
        let rest = v.dot(&v).sqrt();
        if norm0 == T::zero() || rest <= tol * norm0 {
            continue;
        }
        let coeffs: Vec<T> = basis.iter().map(|q| q.dot(&col)).collect();
        v.mapv_inplace(|x| x / rest);
        let mut rc = coeffs;
        rc.push(rest);
        basis.push(v);
        kept.push(j);
        r_cols.push(rc);
    }
    let qty: Vec<T> = basis.iter().map(|q| q.dot(&y)).collect();
    let m = kept.len();
    let mut z = vec![T::zero(); m];
    for i in (0..m).rev() {
        let mut acc = qty[i];
        for j in i + 1..m {
            acc -= r_cols[j][i] * z[j];
        }
        z[i] = acc / r_cols[i][i];
    }
    let mut coef = Array1::<T>::zeros(s);
    for (i, &j) in kept.iter().enumerate() {
        coef[j] = z[i];
    }
    let resid = &y - &a.dot(&coef);
    let rss = resid.dot(&resid);
    (coef, rss)
}
