use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slrgap_core::model::{HypothesisLabel, ModelParams};
use slrgap_core::reductions::BoostConfig;
use slrgap_core::solvers::{OracleKind, SolverOptions};

use crate::error::{config, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PairDistinguish,
    #[serde(rename = "negspca-end2end")]
    NegspcaEnd2end,
    Warmup,
    LassoRate,
    Fact21Audit,
    Concentration,
    LdlrGrid,
    SqCert,
}

impl ExperimentKind {
    /// Kinds that produce one row per trial.
    pub fn is_trial_based(self) -> bool {
        !matches!(self, Self::Concentration | Self::LdlrGrid | Self::SqCert)
    }

    pub fn is_paired(self) -> bool {
        matches!(self, Self::PairDistinguish | Self::LassoRate)
    }
}

/// Which hypothesis each trial is drawn from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruthChoice {
    #[default]
    #[serde(rename = "alternate")]
    Alternate,
    P,
    Q,
    PxQ,
    QxP,
}

impl TruthChoice {
    pub fn label(self, paired: bool, trial: u64) -> HypothesisLabel {
        match (self, paired) {
            (Self::Alternate, true) if trial % 2 == 0 => HypothesisLabel::PxQ,
            (Self::Alternate, true) => HypothesisLabel::QxP,
            (Self::Alternate, false) if trial % 2 == 0 => HypothesisLabel::P,
            (Self::Alternate, false) => HypothesisLabel::Q,
            (Self::P, _) => HypothesisLabel::P,
            (Self::Q, _) => HypothesisLabel::Q,
            (Self::PxQ, _) => HypothesisLabel::PxQ,
            (Self::QxP, _) => HypothesisLabel::QxP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationConfig {
    pub n_grid: Vec<usize>,
    pub t_grid: Vec<f64>,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        Self { n_grid: vec![50, 200], t_grid: vec![0.2, 0.4] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdlrGridConfig {
    pub d_max: usize,
    pub k_max: usize,
    pub ell_max: usize,
    pub mc_trials: usize,
    /// Allowed `|mc - exact|` in standard errors.
    pub mc_sigmas: f64,
    pub binomial_d_max: usize,
    pub binomial_k_max: usize,
    pub binomial_ell_max: usize,
    pub budget: u64,
}

impl Default for LdlrGridConfig {
    fn default() -> Self {
        Self {
            d_max: 10,
            k_max: 3,
            ell_max: 4,
            mc_trials: 1_000_000,
            mc_sigmas: 4.0,
            binomial_d_max: 8,
            binomial_k_max: 3,
            binomial_ell_max: 3,
            budget: slrgap_core::ldlr::DEFAULT_ENUMERATION_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SqCertConfig {
    /// Sparsities for the low-degree norm check.
    pub ldlr_ks: Vec<usize>,
    /// Sparsities for the statistical-query checks.
    pub sq_ks: Vec<usize>,
    pub delta_exp: f64,
    /// Moment-bound constant; fitted on the default enumeration grid when absent.
    pub c_const: Option<f64>,
    /// Largest acceptable low-degree norm bound.
    pub ldlr_max: f64,
}

impl Default for SqCertConfig {
    fn default() -> Self {
        Self {
            ldlr_ks: vec![1_000, 10_000, 100_000],
            sq_ks: vec![1_000, 10_000],
            delta_exp: 0.1,
            c_const: None,
            ldlr_max: 1.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub params: Option<ModelParams>,
    #[serde(default = "default_oracle")]
    pub oracle: OracleKind,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub boost: Option<BoostConfig>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub truth: TruthChoice,
    /// Noise variance announced to the oracle; 1.5 for paired, 1 otherwise.
    #[serde(default)]
    pub sigma2_known: Option<f64>,
    /// Warm-up decision threshold.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Warm-up: regress every column instead of the first.
    #[serde(default)]
    pub all_columns: bool,
    /// Single-sample experiments: pin the first spike coordinate.
    #[serde(default = "default_true")]
    pub pin_first: bool,
    /// Prediction-error target counted in the aggregate.
    #[serde(default)]
    pub rho: Option<f64>,
    /// Minimum success rate; adds a check when present.
    #[serde(default)]
    pub min_success_rate: Option<f64>,
    /// Random projections per trial in the residual audit.
    #[serde(default = "default_projections")]
    pub projections: usize,
    /// Half-width of the accepted band around the residual variance.
    #[serde(default = "default_var_tol")]
    pub var_tol: f64,
    #[serde(default = "default_corr_max")]
    pub corr_max: f64,
    #[serde(default)]
    pub concentration: Option<ConcentrationConfig>,
    #[serde(default)]
    pub ldlr: Option<LdlrGridConfig>,
    #[serde(default)]
    pub sq: Option<SqCertConfig>,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_oracle() -> OracleKind {
    OracleKind::Lasso
}
fn default_trials() -> usize {
    1
}
fn default_threshold() -> f64 {
    0.3
}
fn default_true() -> bool {
    true
}
fn default_projections() -> usize {
    10
}
fn default_var_tol() -> f64 {
    0.02
}
fn default_corr_max() -> f64 {
    0.02
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        serde_json::from_value(serde_json::json!({ "experiment": experiment }))
            .expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<&ModelParams> {
        match &self.params {
            Some(p) => Ok(p),
            None => config(format!("{:?} needs a params block", self.experiment)),
        }
    }

    pub fn sigma2_known(&self) -> f64 {
        let paired = self.experiment.is_paired() || self.experiment == ExperimentKind::NegspcaEnd2end;
        self.sigma2_known.unwrap_or(if paired { 1.5 } else { 1.0 })
    }

    /// Checks everything an experiment needs before any sampling happens.
    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        if self.trials == 0 {
            return config("trials must be at least 1");
        }
        if self.workers == Some(0) {
            return config("workers must be at least 1");
        }
        if let Some(l) = self.solver.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return config(format!("solver.lambda must be finite and >= 0, got {l}"));
            }
        }
        if !(self.solver.tol_kkt > 0.0) {
            return config("solver.tol_kkt must be positive");
        }
        if let Some(s) = self.sigma2_known {
            if !(s >= 0.0 && s.is_finite()) {
                return config(format!("sigma2_known must be finite and >= 0, got {s}"));
            }
        }
        if let Some(r) = self.min_success_rate {
            if !(0.0..=1.0).contains(&r) {
                return config(format!("min_success_rate must lie in [0, 1], got {r}"));
            }
        }
        if self.experiment.is_trial_based() {
            let p = self.params()?;
            p.validate().map_err(|e| Error::Config(format!("params: {e}")))?;
            let paired_truth = matches!(self.truth, TruthChoice::PxQ | TruthChoice::QxP);
            let single_truth = matches!(self.truth, TruthChoice::P | TruthChoice::Q);
            if self.experiment.is_paired() {
                if single_truth {
                    return config(format!("{:?} needs truth PxQ, QxP or alternate", self.experiment));
                }
                let theta = p.theta();
                if !(theta > 0.0 && theta < 1.0) {
                    return config(format!("paired experiments need theta in (0, 1), got {theta}"));
                }
            } else if paired_truth {
                return config(format!("{:?} needs truth P, Q or alternate", self.experiment));
            }
        }
        match self.experiment {
            NegspcaEnd2end => {
                let b = self.boost.ok_or_else(|| Error::Config("negspca needs a boost block".into()))?;
                b.iterations().map_err(|e| Error::Config(format!("boost: {e}")))?;
                let theta = self.params()?.theta();
                if !(theta > 0.0 && theta < 1.0) {
                    return config(format!("negspca needs theta in (0, 1), got {theta}"));
                }
            }
            Fact21Audit => {
                if self.projections == 0 {
                    return config("projections must be at least 1");
                }
                let p = self.params()?;
                if p.theta() * p.k as f64 / (p.k as f64 + 1.0) >= 1.0 {
                    return config("fact21-audit needs theta k/(k+1) < 1");
                }
            }
            Warmup => {
                if !self.threshold.is_finite() {
                    return config("threshold must be finite");
                }
            }
            Concentration => {
                let c = self.concentration.clone().unwrap_or_default();
                if self.trials < 10_000 {
                    return config(format!("concentration needs at least 10000 trials, got {}", self.trials));
                }
                if c.n_grid.is_empty() || c.t_grid.is_empty() || c.n_grid.contains(&0) {
                    return config("concentration grids must be non-empty with n >= 1");
                }
                if c.t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                    return config("concentration t values must be finite and >= 0");
                }
            }
            LdlrGrid => {
                let g = self.ldlr.clone().unwrap_or_default();
                if g.k_max == 0 || g.d_max < g.k_max || g.ell_max == 0 {
                    return config("ldlr grid needs 1 <= k_max <= d_max and ell_max >= 1");
                }
                if g.mc_trials < 1000 {
                    return config("ldlr mc_trials must be at least 1000");
                }
            }
            SqCert => {
                let s = self.sq.clone().unwrap_or_default();
                if !(s.delta_exp > 0.0 && s.delta_exp <= 0.1) {
                    return config(format!("sq.delta_exp must lie in (0, 0.1], got {}", s.delta_exp));
                }
                if s.ldlr_ks.iter().chain(&s.sq_ks).any(|&k| k < 2) {
                    return config("sq sparsities must be at least 2");
                }
                if let Some(c) = s.c_const {
                    if !(c > 0.0) {
                        return config("sq.c_const must be positive");
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}
