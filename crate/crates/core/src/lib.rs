//! Numerical toolkit for regression identities of upper record values.
//!
//! The identities tie the conditional mean of `h^(k+r-1)(X(n))`, given the
//! non-adjacent records `X(n-k) = u` and `X(n+r) = v`, to mixed partial
//! derivatives of the divided difference `M(u, v) = (h(v) - h(u)) / (v - u)`.
//! They hold for the shifted exponential law and fail for other laws, which
//! makes the residual between both sides a diagnostic of exponentiality.
//!
//! * [`checks`]: kernel and reduction checks against reference values.
//! * [`kernel`]: divided differences, their mixed partials and a
//!   finite-difference oracle.
//! * [`distribution`]: distribution families through `F`, `f`, quantile and
//!   hazard transform `R = -ln(1 - F)`.
//! * [`records`]: record simulation and the conditional law of `X(n)`.
//! * [`regression`]: both sides of the identities and their residual.
//! * [`suite`]: named verification scenarios and the exponentiality diagnostic.
//! * [`report`]: CSV and JSON serialization of residual reports.
//! * [`quadrature`], [`rng`], [`stats`]: numerical and statistical plumbing.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod distribution;
pub mod error;
pub mod kernel;
pub mod quadrature;
pub mod records;
pub mod regression;
pub mod report;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod suite;

pub use distribution::{DistributionModel, TransformFamily};
pub use error::{Error, Result};
pub use kernel::{
    divided_diff, mixed_deriv, mixed_deriv_fd, mixed_deriv_fd_auto, mixed_deriv_fd_steps,
    suggested_fd_steps, DerivableFunction, MixedDiffRequest, MixedDiffTable,
};
pub use records::{
    conditional_density, sample_conditional, sample_records_gamma, sample_records_stream,
    ConditionalLaw, ConditioningContext, RecordSequence,
};
pub use regression::{
    closed_form_rhs, cond_expect_mc, cond_expect_quadrature, residual, EstimationMethod,
    IdentityVariant, McEstimate, RegressionIdentity, ResidualRow,
};
pub use rng::{stream_rng, DEFAULT_SEED};
pub use suite::{
    diagnose_exponentiality, run_scenarios, scenario_by_name, Expectation, GridSpec,
    ResidualReport, Scenario, Thresholds, Verdict,
};
