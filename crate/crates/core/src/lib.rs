//! Inverse-probability-of-censoring-weighted (IPCW) kernel estimation for
//! right-censored regression.
//!
//! The observed sample is a set of triples `(Z, delta, X)` where
//! `Z = min(Y, C)` and `delta = 1{Y <= C}`. Uncensored responses are
//! reweighted by `1 / (1 - G(Z))`, with `G` the censoring distribution
//! (known, or estimated by Kaplan-Meier), and then smoothed with
//! Nadaraya-Watson weights. On top of the point estimators the crate
//! provides plug-in variance estimates, simultaneous confidence bands and
//! a seeded Monte Carlo harness.

// `!(a > b)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bands;
pub mod error;
pub mod estimators;
pub mod io;
pub mod kernels;
pub mod quadrature;
pub mod simulation;
pub mod survival;

pub use bands::{
    band_halfwidth, confidence_band, log_theta_k, variance_estimate, BandConfig, BandwidthRule,
    BandwidthTable, CurvePoint, EstimateCurve, Region,
};
pub use error::{Error, Result};
pub use estimators::{
    conditional_cdf, conditional_density, conditional_hazard, ipcw_regression, nw_weights,
    CdfEstimate, Estimator, GSpec, KnownG, Transform, TransformKind,
};
pub use kernels::{BaseKernel, KernelFamily, KernelSpec};
pub use survival::{km_censoring, Dataset, StepFunction};

/// Crate version, embedded in emitted artifacts for provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
