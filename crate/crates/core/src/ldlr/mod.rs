//! Low-degree likelihood ratio and statistical-query bound arithmetic.
//!
//! Overlap moments of the sparse prior come from exact enumeration (as
//! rationals), Monte Carlo, or the closed-form moment bound. Every bound is
//! evaluated in natural-log space.

mod bounds;
mod logspace;
mod moments;

pub use bounds::{
    degree_cut, full_moment_log, ldlr_norm_bound, low_degree_excess, sda_certificate, sq_highdeg_bound, LdlrBound, LdlrParams, LdlrSum, LdlrTerm,
    MomentSource, SqCertificate, SqHighDeg,
};
pub use logspace::{ln_rational, log_expm1, log_sum_exp, softplus};
pub use moments::{
    binomial_chain, binomial_moment, enumeration_cost, fit_b4_constant, intersection_moment, moment_bound_b4,
    overlap_distribution, overlap_moment_exact, overlap_moment_mc, overlap_moments_mc, B4Fit,
    B4FitPoint, BinomialChain, BinomialMoment, MomentConfig, MomentEstimate, MomentMethod, OverlapDistribution,
    DEFAULT_ENUMERATION_BUDGET,
};
