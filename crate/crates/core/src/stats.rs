//! Small descriptive statistics shared by audits and tests.

use crate::scalar::Real;

pub fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::nan();
    }
    xs.iter().copied().sum::<T>() / T::from_count(xs.len())
}

/// Population variance (divides by `len`).
pub fn variance<T: Real>(xs: &[T]) -> T {
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::from_count(xs.len())
}

pub fn correlation<T: Real>(xs: &[T], ys: &[T]) -> T {
    assert_eq!(xs.len(), ys.len(), "correlation needs equal lengths");
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Standard error of a Bernoulli proportion `p` estimated from `trials` draws.
pub fn binomial_stderr(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Running first/second moment accumulator for pooled audits.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.sum_sq / self.count as f64 - m * m
    }
}

/// Pooled cross-moment accumulator for correlation audits.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CrossMoments {
    pub x: Moments,
    pub y: Moments,
    pub sum_xy: f64,
}

impl CrossMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        self.x.push(x);
        self.y.push(y);
        self.sum_xy += x * y;
    }

    pub fn merge(&mut self, other: &CrossMoments) {
        self.x.merge(&other.x);
        self.y.merge(&other.y);
        self.sum_xy += other.sum_xy;
    }

    pub fn correlation(&self) -> f64 {
        let n = self.x.count as f64;
        let cov = self.sum_xy / n - self.x.mean() * self.y.mean();
        cov / (self.x.variance() * self.y.variance()).sqrt()
    }
}
