use rand::seq::index;
use rand::Rng;

use super::params::validate_sparsity;
use crate::error::{param, Result};
use crate::scalar::Real;

/// A unit-norm sparse spike in `R^{d+1}` with entries in `{0, ±1/sqrt(k+1)}`.
///
/// Pinned spikes have `entries[0] = -1/sqrt(k+1)` and exactly `k` further
/// nonzeros among coordinates `1..=d`. Unpinned spikes have `k + 1` nonzeros
/// anywhere in `0..=d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikeVector<T> {
    entries: Vec<T>,
    support: Vec<usize>,
    k: usize,
    pinned: bool,
}

impl<T: Real> SpikeVector<T> {
    /// Builds a spike from an explicit pattern. `support` lists coordinates of
    /// `R^{d+1}` (the pinned coordinate 0 is implicit when `pinned`), and
    /// `positive[i]` gives the sign at `support[i]`.
    pub fn from_pattern(
        d: usize,
        k: usize,
        pinned: bool,
        support: &[usize],
        positive: &[bool],
    ) -> Result<Self> {
        validate_sparsity(d, k)?;
        let expected = if pinned { k } else { k + 1 };
        if support.len() != expected || positive.len() != expected {
            return param(format!(
                "spike pattern needs {expected} support entries, got {}",
                support.len()
            ));
        }
        let mag = T::one() / T::from_count(k + 1).sqrt();
        let mut entries = vec![T::zero(); d + 1];
        let mut full_support = Vec::with_capacity(k + 1);
        if pinned {
            entries[0] = -mag;
            full_support.push(0);
        }
        for (&j, &pos) in support.iter().zip(positive) {
            if j > d || (pinned && j == 0) || entries[j] != T::zero() {
                return param(format!("invalid or repeated support index {j}"));
            }
            entries[j] = if pos { mag } else { -mag };
            full_support.push(j);
        }
        full_support.sort_unstable();
        Ok(Self {
            entries,
            support: full_support,
            k,
            pinned,
        })
    }

    /// Length `d + 1`.
    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    /// Sorted nonzero coordinates, including 0 when pinned.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn is_pinned(&self) -> bool {
        self.pinned
    }

    /// The spike with its first coordinate removed (`x_{\1}`), length `d`.
    pub fn tail(&self) -> &[T] {
        &self.entries[1..]
    }

    pub fn dot(&self, v: &[T]) -> T {
        debug_assert_eq!(v.len(), self.entries.len());
        self.support
            .iter()
            .map(|&j| self.entries[j] * v[j])
            .fold(T::zero(), |a, b| a + b)
    }

    pub fn cast<U: Real>(&self) -> SpikeVector<U> {
        SpikeVector {
            entries: self.entries.iter().map(|v| U::lit(v.as_f64())).collect(),
            support: self.support.clone(),
            k: self.k,
            pinned: self.pinned,
        }
    }
}

/// Draws a spike from the uniform sparse prior.
///
/// Pinned: uniform support of size `k` in `1..=d`, uniform signs, and
/// `x_1 = -1/sqrt(k+1)`. Unpinned: uniform `(k+1)`-sparse sign vector.
pub fn sample_spike<T: Real, R: Rng + ?Sized>(
    d: usize,
    k: usize,
    pin_first: bool,
    rng: &mut R,
) -> Result<SpikeVector<T>> {
    validate_sparsity(d, k)?;
    let (pool, offset, count) = if pin_first { (d, 1, k) } else { (d + 1, 0, k + 1) };
    let mut support: Vec<usize> = index::sample(rng, pool, count)
        .into_iter()
        .map(|j| j + offset)
        .collect();
    support.sort_unstable();
    let signs: Vec<bool> = (0..count).map(|_| rng.random::<bool>()).collect();
    SpikeVector::from_pattern(d, k, pin_first, &support, &signs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use std::collections::HashMap;

    #[test]
    fn k_zero_or_too_large_rejected() {
        let mut rng = SeedStream::new(1).rng();
        assert!(sample_spike::<f64, _>(5, 0, true, &mut rng).is_err());
        assert!(sample_spike::<f64, _>(3, 4, true, &mut rng).is_err());
    }

    #[test]
    fn d1_k1_pinned_has_two_outcomes() {
        let mut rng = SeedStream::new(2).rng();
        let h = 1.0 / 2f64.sqrt();
        let mut seen = HashMap::new();
        for _ in 0..200 {
            let x = sample_spike::<f64, _>(1, 1, true, &mut rng).unwrap();
            assert_eq!(x.entries()[0], -h);
            assert_eq!(x.entries()[1].abs(), h);
            *seen.entry(x.entries()[1] > 0.0).or_insert(0) += 1;
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn full_support_when_k_equals_d() {
        let mut rng = SeedStream::new(3).rng();
        let x = sample_spike::<f64, _>(3, 3, true, &mut rng).unwrap();
        assert_eq!(x.entries()[0], -0.5);
        assert!(x.entries().iter().all(|v| v.abs() == 0.5));
        assert_eq!(x.support(), &[0, 1, 2, 3]);
    }

    #[test]
    fn unit_norm_and_sparsity() {
        let mut rng = SeedStream::new(4).rng();
        for &(d, k, pinned) in &[(10, 3, true), (10, 3, false), (50, 7, true), (4, 4, false)] {
            let x = sample_spike::<f64, _>(d, k, pinned, &mut rng).unwrap();
            let norm2: f64 = x.entries().iter().map(|v| v * v).sum();
            assert!((norm2 - 1.0).abs() < 1e-12);
            let nnz = x.entries().iter().filter(|v| **v != 0.0).count();
            assert_eq!(nnz, k + 1);
            assert_eq!(x.support().len(), k + 1);
        }
    }

    #[test]
    fn pinned_patterns_are_uniform() {
        // d = 5, k = 2: C(5,2) * 2^2 = 40 equally likely support/sign patterns.
        let mut rng = SeedStream::new(5).rng();
        let draws = 100_000;
        let mut counts: HashMap<Vec<i8>, usize> = HashMap::new();
        for _ in 0..draws {
            let x = sample_spike::<f64, _>(5, 2, true, &mut rng).unwrap();
            let key: Vec<i8> = x.tail().iter().map(|v| v.signum() as i8 * (*v != 0.0) as i8).collect();
            *counts.entry(key).or_default() += 1;
        }
        assert_eq!(counts.len(), 40);
        let expected = draws as f64 / 40.0;
        let mut chi2 = 0.0;
        for &c in counts.values() {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.025).abs() <= 0.005, "frequency {freq}");
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // 39 degrees of freedom; the 0.999 quantile is about 72.05.
        assert!(chi2 < 72.05, "chi-square {chi2}");
    }

    #[test]
    fn from_pattern_rejects_bad_input() {
        assert!(SpikeVector::<f64>::from_pattern(4, 2, true, &[0, 1], &[true, true]).is_err());
        assert!(SpikeVector::<f64>::from_pattern(4, 2, true, &[1, 1], &[true, true]).is_err());
        assert!(SpikeVector::<f64>::from_pattern(4, 2, true, &[1], &[true]).is_err());
        assert!(SpikeVector::<f64>::from_pattern(4, 2, true, &[1, 5], &[true, true]).is_err());
        let x = SpikeVector::<f64>::from_pattern(4, 2, false, &[0, 2, 4], &[true, false, true]).unwrap();
        assert_eq!(x.support(), &[0, 2, 4]);
        assert!(!x.is_pinned());
    }
}
