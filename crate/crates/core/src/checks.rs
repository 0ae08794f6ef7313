//! Numerical checks that compare one computation against a reference, as
//! opposed to the residual scenarios of [`crate::suite`].

use crate::error::Result;
use crate::kernel::{mixed_deriv, mixed_deriv_fd_auto, DerivableFunction, MixedDiffRequest};
use crate::regression::IdentityVariant;
use crate::suite::{self, Scenario};

/// Grid of the kernel checks; every pair `u < v` is used.
pub const KERNEL_GRID: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
/// Largest `i + j` of the kernel checks.
pub const KERNEL_MAX_ORDER: usize = 6;

pub const KERNEL_FD_TOLERANCE: f64 = 1e-6;
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-10;
pub const MEAN_REDUCTION_TOLERANCE: f64 = 1e-12;
pub const PARETO_INVARIANCE_TOLERANCE: f64 = 1e-10;

pub const CHECK_NAMES: [&str; 4] = [
    "kernel-fd",
    "kernel-closed-form",
    "mean-reductions",
    "pareto-invariance",
];

/// One compared value.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub subject: String,
    pub point: String,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub tolerance: f64,
    pub rows: Vec<CheckRow>,
    pub max_error: f64,
    pub passed: bool,
}

impl CheckReport {
    fn new(name: &str, tolerance: f64, rows: Vec<CheckRow>) -> Self {
        let max_error =
            rows.iter().map(|r| r.error).fold(
                0.0,
                |acc: f64, e| {
                    if e.is_nan() {
                        f64::NAN
                    } else {
                        acc.max(e)
                    }
                },
            );
        Self {
            name: name.into(),
            tolerance,
            passed: !rows.is_empty() && max_error <= tolerance,
            rows,
            max_error,
        }
    }

    pub fn worst(&self) -> Option<&CheckRow> {
        self.rows.iter().max_by(|a, b| a.error.total_cmp(&b.error))
    }
}

fn relative(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(f64::MIN_POSITIVE)
}

/// Relative to `max(1, |reference|)`, so that exact zeros compare absolutely.
fn scaled(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1.0)
}

pub fn grid_pairs() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (a, &u) in KERNEL_GRID.iter().enumerate() {
        for &v in &KERNEL_GRID[a + 1..] {
            out.push((u, v));
        }
    }
    out
}

/// Every closed-form function of the kernel plus two user functions whose
/// derivatives are numerical.
pub fn function_catalog() -> Result<Vec<DerivableFunction>> {
    Ok(vec![
        DerivableFunction::power_normalized(2)?,
        DerivableFunction::power_normalized(5)?,
        DerivableFunction::power_normalized(8)?,
        DerivableFunction::neg_reciprocal(1)?,
        DerivableFunction::neg_reciprocal(3)?,
        DerivableFunction::double_sqrt(),
        DerivableFunction::plain_reciprocal(),
        DerivableFunction::user(
            "exp",
            (f64::NEG_INFINITY, f64::INFINITY),
            f64::exp,
            KERNEL_MAX_ORDER,
        ),
        DerivableFunction::user("ln", (0.0, f64::INFINITY), f64::ln, KERNEL_MAX_ORDER),
    ])
}

/// Recurrence against the finite-difference stencil on the divided
/// difference, over the catalog and grid for `i + j <= 6`.
pub fn kernel_fd() -> Result<CheckReport> {
    let mut rows = Vec::new();
    for f in function_catalog()? {
        for (u, v) in grid_pairs() {
            for total in 0..=KERNEL_MAX_ORDER.min(f.max_order()) {
                for i in 0..=total {
                    let req = MixedDiffRequest::new(i, total - i, u, v);
                    let value = mixed_deriv(&f, req)?;
                    let reference = mixed_deriv_fd_auto(&f, req)?;
                    rows.push(CheckRow {
                        subject: f.label().to_string(),
                        point: format!("i={i},j={},u={u},v={v}", total - i),
                        value,
                        reference,
                        error: scaled(value, reference),
                    });
                }
            }
        }
    }
    Ok(CheckReport::new("kernel-fd", KERNEL_FD_TOLERANCE, rows))
}

/// `d^j/dv^j M(u, v)` for `h = -1/x` against `(-1)^j j! / (u v^(j+1))`.
pub fn kernel_closed_form() -> Result<CheckReport> {
    let f = DerivableFunction::plain_reciprocal();
    let mut rows = Vec::new();
    for (u, v) in grid_pairs() {
        for j in 0..=KERNEL_MAX_ORDER {
            let value = mixed_deriv(&f, MixedDiffRequest::new(0, j, u, v))?;
            let j_fact: f64 = (1..=j).map(|t| t as f64).product();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let reference = sign * j_fact / (u * v.powi(j as i32 + 1));
            rows.push(CheckRow {
                subject: f.label().to_string(),
                point: format!("j={j},u={u},v={v}"),
                value,
                reference,
                error: relative(value, reference),
            });
        }
    }
    Ok(CheckReport::new(
        "kernel-closed-form",
        CLOSED_FORM_TOLERANCE,
        rows,
    ))
}

/// The kernel right-hand side of each mean scenario against its mean formula.
pub fn mean_reductions() -> Result<CheckReport> {
    let mut rows = Vec::new();
    for name in ["arithmetic-mean", "geometric-mean", "harmonic-mean"] {
        for s in suite::scenario_by_name(name)? {
            for ctx in &s.grid {
                let value = s.kernel_rhs(ctx, IdentityVariant::Standard)?;
                let reference = s
                    .mean_rhs(ctx.u, ctx.v)
                    .expect("mean scenarios carry their formula");
                rows.push(CheckRow {
                    subject: s.name.clone(),
                    point: format!("k={},s={},t={}", ctx.k, ctx.u, ctx.v),
                    value,
                    reference,
                    error: relative(value, reference),
                });
            }
        }
    }
    Ok(CheckReport::new(
        "mean-reductions",
        MEAN_REDUCTION_TOLERANCE,
        rows,
    ))
}

fn single_residual(s: &Scenario, seed: u64) -> Result<f64> {
    let report = s.run(seed);
    match (report.rows.as_slice(), report.failures.first()) {
        ([row], None) => Ok(row.residual),
        (_, Some(f)) => Err(crate::Error::ParamError(f.message.clone())),
        _ => Err(crate::Error::ParamError(format!(
            "{} should have exactly one row",
            s.name
        ))),
    }
}

/// Pareto example residuals at the fixed point for each scale, against the
/// residual at the first scale.
pub fn pareto_invariance(seed: u64) -> Result<CheckReport> {
    let parts = suite::scenario_by_name("pareto-a-invariance")?;
    let residuals = parts
        .iter()
        .map(|s| single_residual(s, seed))
        .collect::<Result<Vec<f64>>>()?;
    let reference = residuals[0];
    let (s, t) = suite::PARETO_INVARIANCE_POINT;
    let rows = parts
        .iter()
        .zip(&residuals)
        .map(|(part, &value)| CheckRow {
            subject: part.name.clone(),
            point: format!("s={s},t={t}"),
            value,
            reference,
            error: (value - reference).abs(),
        })
        .collect();
    Ok(CheckReport::new(
        "pareto-invariance",
        PARETO_INVARIANCE_TOLERANCE,
        rows,
    ))
}

pub fn check_by_name(name: &str, seed: u64) -> Result<CheckReport> {
    match name {
        "kernel-fd" => kernel_fd(),
        "kernel-closed-form" => kernel_closed_form(),
        "mean-reductions" => mean_reductions(),
        "pareto-invariance" => pareto_invariance(seed),
        other => Err(crate::Error::ParamError(format!(
            "unknown check {other:?}; expected one of {}",
            CHECK_NAMES.join(", ")
        ))),
    }
}
