use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// `ln(sum_i exp(x_i))`; `-inf` entries drop out and an empty slice gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max == f64::INFINITY {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// `ln(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 36.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(exp(x) - 1)` for `x > 0`.
pub fn log_expm1(x: f64) -> f64 {
    if x > 36.0 {
        x + (-x).exp().ln_1p() - 2.0 * (-x).exp()
    } else {
        x.exp_m1().ln()
    }
}

/// Natural log of a non-negative rational; zero maps to `-inf`.
pub fn ln_rational(r: &BigRational) -> f64 {
    assert!(!r.is_negative(), "log of a negative rational");
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    if let Some(v) = r.to_f64() {
        if v.is_normal() {
            return v.ln();
        }
    }
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    // keep 64 significant bits of the quotient before taking the log
    let e = num.bits() as i64 - den.bits() as i64;
    let (n, d) = if e < 64 {
        (num << (64 - e) as u64, den.clone())
    } else {
        (num.clone(), den << (e - 64) as u64)
    };
    let q: BigUint = n / d;
    q.to_f64().expect("about 64 bits").ln() + (e - 64) as f64 * std::f64::consts::LN_2
}
