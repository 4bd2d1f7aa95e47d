use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::covariance::{sample_model, CovarianceSpec};
use super::params::ModelParams;
use super::spike::{sample_spike, SpikeVector};
use crate::error::{dim, param, Error, Result};
use crate::scalar::Real;

/// Hypothesis tags for single (`P`/`Q`) and paired (`PxQ`/`QxP`) problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HypothesisLabel {
    P,
    Q,
    PxQ,
    QxP,
}

impl HypothesisLabel {
    pub fn is_paired(self) -> bool {
        matches!(self, Self::PxQ | Self::QxP)
    }

    /// `PxQ <-> QxP`; single labels are returned unchanged.
    pub fn swapped(self) -> Self {
        match self {
            Self::PxQ => Self::QxP,
            Self::QxP => Self::PxQ,
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::P => "P",
            Self::Q => "Q",
            Self::PxQ => "PxQ",
            Self::QxP => "QxP",
        }
    }
}

impl fmt::Display for HypothesisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HypothesisLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" => Ok(Self::P),
            "Q" => Ok(Self::Q),
            "PxQ" => Ok(Self::PxQ),
            "QxP" => Ok(Self::QxP),
            other => param(format!("unknown hypothesis label {other:?}")),
        }
    }
}

/// Ground truth of one sample block: the spike and its strength.
#[derive(Clone, Debug, PartialEq)]
pub struct Planted<T> {
    pub spike: SpikeVector<T>,
    pub theta: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Single,
    Paired,
}

/// `n` sample rows, either one block of `d + 1` columns or two side-by-side
/// blocks of `d + 1` columns each.
///
/// Synthetic matrices carry per-block truth (`None` for a null block). Data
/// loaded from outside carries no truth at all.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix<T> {
    data: Array2<T>,
    layout: Layout,
    truth: Option<Vec<Option<Planted<T>>>>,
}

impl<T: Real> SampleMatrix<T> {
    /// Wraps untrusted data. Paired layouts need an even column count.
    pub fn from_data(data: Array2<T>, layout: Layout) -> Result<Self> {
        check_shape(&data, layout)?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("sample matrix contains non-finite entries".into()));
        }
        Ok(Self {
            data,
            layout,
            truth: None,
        })
    }

    pub(crate) fn synthetic(
        data: Array2<T>,
        layout: Layout,
        truth: Vec<Option<Planted<T>>>,
    ) -> Result<Self> {
        check_shape(&data, layout)?;
        let blocks = match layout {
            Layout::Single => 1,
            Layout::Paired => 2,
        };
        if truth.len() != blocks {
            return dim("truth block count does not match layout");
        }
        Ok(Self {
            data,
            layout,
            truth: Some(truth),
        })
    }

    pub fn data(&self) -> &Array2<T> {
        &self.data
    }

    pub fn into_data(self) -> Array2<T> {
        self.data
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    /// Columns per block (`d + 1`).
    pub fn block_dim(&self) -> usize {
        match self.layout {
            Layout::Single => self.data.ncols(),
            Layout::Paired => self.data.ncols() / 2,
        }
    }

    pub fn d(&self) -> usize {
        self.block_dim() - 1
    }

    pub fn block(&self, b: usize) -> ArrayView2<'_, T> {
        let w = self.block_dim();
        self.data.slice(s![.., b * w..(b + 1) * w])
    }

    pub fn truth_blocks(&self) -> Option<&[Option<Planted<T>>]> {
        self.truth.as_deref()
    }

    pub fn has_truth(&self) -> bool {
        self.truth.is_some()
    }

    /// The label implied by the attached truth, when it is one of P, Q, PxQ, QxP.
    pub fn truth_label(&self) -> Option<HypothesisLabel> {
        match self.truth.as_deref()? {
            [Some(_)] => Some(HypothesisLabel::P),
            [None] => Some(HypothesisLabel::Q),
            [Some(_), None] => Some(HypothesisLabel::PxQ),
            [None, Some(_)] => Some(HypothesisLabel::QxP),
            _ => None,
        }
    }

    /// The first planted spike, if any.
    pub fn truth_spike(&self) -> Option<&SpikeVector<T>> {
        self.truth
            .as_deref()?
            .iter()
            .flatten()
            .map(|p| &p.spike)
            .next()
    }

    /// Row-wise concatenation `(z, z')` of two single-block matrices.
    pub fn pair(first: &Self, second: &Self) -> Result<Self> {
        if first.layout != Layout::Single || second.layout != Layout::Single {
            return dim("only single-block matrices can be paired");
        }
        if first.nrows() != second.nrows() || first.ncols() != second.ncols() {
            return dim(format!(
                "cannot pair {}x{} with {}x{}",
                first.nrows(),
                first.ncols(),
                second.nrows(),
                second.ncols()
            ));
        }
        let data = concatenate(Axis(1), &[first.data.view(), second.data.view()])
            .expect("shapes checked");
        let truth = match (&first.truth, &second.truth) {
            (Some(a), Some(b)) => Some(vec![a[0].clone(), b[0].clone()]),
            _ => None,
        };
        Ok(Self {
            data,
            layout: Layout::Paired,
            truth,
        })
    }

    /// Exchanges the two blocks of every row.
    pub fn swap_halves(&self) -> Result<Self> {
        if self.layout != Layout::Paired {
            return dim("swap_halves needs a paired matrix");
        }
        let data = concatenate(Axis(1), &[self.block(1), self.block(0)]).expect("equal blocks");
        let truth = self
            .truth
            .as_ref()
            .map(|t| vec![t[1].clone(), t[0].clone()]);
        Ok(Self {
            data,
            layout: Layout::Paired,
            truth,
        })
    }
}

fn check_shape<T>(data: &Array2<T>, layout: Layout) -> Result<()> {
    if data.nrows() == 0 {
        return dim("sample matrix has no rows");
    }
    let min_cols = match layout {
        Layout::Single => 2,
        Layout::Paired => 4,
    };
    if data.ncols() < min_cols || (layout == Layout::Paired && data.ncols() % 2 != 0) {
        return dim(format!("{} columns do not fit a {layout:?} layout", data.ncols()));
    }
    Ok(())
}

/// Draws `n` rows from `P` (pinned spike, strength `theta`) or `Q = N(0, Id)`
/// in `d + 1` dimensions.
pub fn sample_single<T: Real, R: Rng + ?Sized>(
    label: HypothesisLabel,
    params: &ModelParams,
    pin_first: bool,
    rng: &mut R,
) -> Result<SampleMatrix<T>> {
    params.validate()?;
    let spec = match label {
        HypothesisLabel::P => {
            let spike = sample_spike(params.d, params.k, pin_first, rng)?;
            CovarianceSpec::negative_spike(spike, T::lit(params.theta()))?
        }
        HypothesisLabel::Q => CovarianceSpec::identity(params.d + 1)?,
        other => return param(format!("sample_single needs P or Q, got {other}")),
    };
    sample_model(&spec, params.n, rng)
}

/// Draws a paired sample. The spike is drawn first, then the planted block,
/// then the null block, regardless of `label`; the label only decides which
/// side each block lands on. Hence the `PxQ` and `QxP` draws from the same
/// stream are exact half-swaps of each other.
pub fn sample_pair<T: Real, R: Rng + ?Sized>(
    label: HypothesisLabel,
    params: &ModelParams,
    rng: &mut R,
) -> Result<SampleMatrix<T>> {
    params.validate()?;
    let theta = params.theta();
    if !(theta > 0.0 && theta < 1.0) {
        return param(format!("paired model needs theta in (0, 1), got {theta}"));
    }
    let planted = sample_single(HypothesisLabel::P, params, true, rng)?;
    let null = sample_single(HypothesisLabel::Q, params, true, rng)?;
    match label {
        HypothesisLabel::PxQ => SampleMatrix::pair(&planted, &null),
        HypothesisLabel::QxP => SampleMatrix::pair(&null, &planted),
        other => param(format!("sample_pair needs PxQ or QxP, got {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use nalgebra::DMatrix;

    #[test]
    fn pair_shapes_and_null_half() {
        let params = ModelParams::with_default_theta(6, 2, 1).unwrap();
        let z = sample_pair::<f64, _>(HypothesisLabel::PxQ, &params, &mut SeedStream::new(1).rng()).unwrap();
        assert_eq!(z.nrows(), 1);
        assert_eq!(z.ncols(), 14);
        assert_eq!(z.truth_label(), Some(HypothesisLabel::PxQ));
        assert!(z.truth_blocks().unwrap()[1].is_none());
    }

    #[test]
    fn swapping_halves_gives_the_other_label() {
        let params = ModelParams::with_default_theta(10, 3, 25).unwrap();
        let pxq = sample_pair::<f64, _>(HypothesisLabel::PxQ, &params, &mut SeedStream::new(2).rng()).unwrap();
        let qxp = sample_pair::<f64, _>(HypothesisLabel::QxP, &params, &mut SeedStream::new(2).rng()).unwrap();
        let swapped = pxq.swap_halves().unwrap();
        assert_eq!(swapped, qxp);
        assert_eq!(swapped.truth_label(), Some(HypothesisLabel::QxP));
        assert_eq!(swapped.truth_spike(), pxq.truth_spike());
    }

    #[test]
    fn deterministic_given_seed() {
        let params = ModelParams::with_default_theta(20, 3, 40).unwrap();
        let a = sample_pair::<f64, _>(HypothesisLabel::QxP, &params, &mut SeedStream::trial(5, 9).rng()).unwrap();
        let b = sample_pair::<f64, _>(HypothesisLabel::QxP, &params, &mut SeedStream::trial(5, 9).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn planted_half_min_eigenvalue() {
        let params = ModelParams::with_default_theta(50, 3, 10_000).unwrap();
        let z = sample_pair::<f64, _>(HypothesisLabel::PxQ, &params, &mut SeedStream::new(3).rng()).unwrap();
        let first = z.block(0);
        let cov = first.t().dot(&first) / z.nrows() as f64;
        let m = DMatrix::from_row_slice(cov.nrows(), cov.ncols(), cov.as_slice().unwrap());
        let min = m.symmetric_eigen().eigenvalues.min();
        // Id - theta xx^T has smallest eigenvalue 1 - theta = 1/(k+2) = 0.2
        assert!((min - 0.2).abs() <= 0.05, "min eigenvalue {min}");
    }

    #[test]
    fn paired_requires_open_theta() {
        let params = ModelParams::new(5, 2, 3, 1.0, 1.0).unwrap();
        assert!(sample_pair::<f64, _>(HypothesisLabel::PxQ, &params, &mut SeedStream::new(4).rng()).is_err());
        assert!(sample_pair::<f64, _>(HypothesisLabel::P, &ModelParams::with_default_theta(5, 2, 3).unwrap(), &mut SeedStream::new(4).rng()).is_err());
    }

    #[test]
    fn from_data_validates() {
        assert!(SampleMatrix::from_data(Array2::<f64>::zeros((3, 5)), Layout::Paired).is_err());
        assert!(SampleMatrix::from_data(Array2::<f64>::zeros((3, 6)), Layout::Paired).is_ok());
        let mut bad = Array2::<f64>::zeros((2, 4));
        bad[[1, 1]] = f64::NAN;
        assert!(matches!(SampleMatrix::from_data(bad, Layout::Single), Err(Error::Data(_))));
    }

    #[test]
    fn labels_round_trip_text() {
        for l in [HypothesisLabel::P, HypothesisLabel::Q, HypothesisLabel::PxQ, HypothesisLabel::QxP] {
            assert_eq!(l.as_str().parse::<HypothesisLabel>().unwrap(), l);
        }
        assert!("PQ".parse::<HypothesisLabel>().is_err());
    }
}
