//! Named verification scenarios and the exponentiality diagnostic.
//!
//! A [`Scenario`] pairs a distribution with a family of regression identities
//! and a grid of conditioning contexts. Running it evaluates both sides at
//! every context and condenses the residuals into a [`Verdict`].
//!
//! Transform scenarios evaluate `h^(k+r-1)(T(Y(n)))` under the law of `Y` and
//! compare it with the divided-difference side at `(T(s), T(t))`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::distribution::{DistributionModel, TransformFamily};
use crate::error::{Error, Result};
use crate::kernel::DerivableFunction;
use crate::records::ConditioningContext;
use crate::regression::{
    closed_form_rhs, cond_expect_mc, cond_expect_quadrature, EstimationMethod, IdentityVariant,
    RegressionIdentity, ResidualRow,
};
use crate::rng::stream_rng;

/// Residuals at or below this magnitude count as holding.
pub const HOLD_TOLERANCE: f64 = 1e-6;
/// A residual above this magnitude falsifies the identity.
pub const FAIL_FLOOR: f64 = 1e-3;
/// Monte Carlo rows hold when the residual is within this many standard errors.
pub const MC_SIGMA: f64 = 4.0;

/// Quantile pairs used to place `(u, v)` inside any support.
pub const DEFAULT_QUANTILE_PAIRS: [(f64, f64); 3] = [(0.2, 0.5), (0.3, 0.8), (0.6, 0.9)];
/// Gaps `(k, r)` of the default grid.
pub const DEFAULT_GAPS: [(usize, usize); 5] = [(1, 1), (2, 1), (3, 1), (2, 2), (2, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub hold: f64,
    pub fail: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            hold: HOLD_TOLERANCE,
            fail: FAIL_FLOOR,
        }
    }
}

impl Thresholds {
    pub fn new(hold: f64, fail: f64) -> Result<Self> {
        if !(hold > 0.0 && fail >= hold && fail.is_finite()) {
            return Err(Error::ParamError(format!(
                "thresholds need 0 < hold <= fail, got hold={hold}, fail={fail}"
            )));
        }
        Ok(Self { hold, fail })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Holds,
    Fails,
}

impl Expectation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Holds => "holds",
            Self::Fails => "fails",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Holds => "holds",
            Self::Fails => "fails",
            Self::Inconclusive => "inconclusive",
        }
    }

    pub fn matches(self, expected: Expectation) -> bool {
        matches!(
            (self, expected),
            (Self::Holds, Expectation::Holds) | (Self::Fails, Expectation::Fails)
        )
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanForm {
    Arithmetic,
    Geometric,
    Harmonic,
}

/// The function `h` of the identities evaluated at each context.
#[derive(Debug, Clone)]
pub enum HTemplate {
    /// `h = x^(k+r) / (k+r)!`, rebuilt for the gaps of every context.
    Power,
    /// The same `h` at every context.
    Fixed(DerivableFunction),
}

impl HTemplate {
    fn build(&self, k: usize, r: usize) -> Result<DerivableFunction> {
        match self {
            Self::Power => DerivableFunction::power_normalized(k + r),
            Self::Fixed(h) => Ok(h.clone()),
        }
    }
}

type Formula = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A context that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowFailure {
    pub ctx: ConditioningContext,
    pub variant: IdentityVariant,
    pub message: String,
}

/// A runnable verification scenario.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub distribution: DistributionModel,
    pub h: HTemplate,
    pub variants: Vec<IdentityVariant>,
    pub transform: Option<TransformFamily>,
    pub mean_form: Option<MeanForm>,
    pub gaps: Vec<(usize, usize)>,
    pub grid: Vec<ConditioningContext>,
    pub expected: Expectation,
    pub thresholds: Thresholds,
    /// Draws per row; `None` evaluates the left-hand side by quadrature.
    pub monte_carlo: Option<usize>,
    direct_rhs: Option<Formula>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("distribution", &self.distribution.label())
            .field("h", &self.h)
            .field("variants", &self.variants)
            .field("transform", &self.transform)
            .field("mean_form", &self.mean_form)
            .field("grid", &self.grid)
            .field("expected", &self.expected)
            .field("thresholds", &self.thresholds)
            .field("monte_carlo", &self.monte_carlo)
            .finish()
    }
}

/// Contexts `(u, v) = (F^-1(q1), F^-1(q2))` crossed with the gaps, `n = k + 1`.
pub fn quantile_grid(
    d: &DistributionModel,
    pairs: &[(f64, f64)],
    gaps: &[(usize, usize)],
) -> Result<Vec<ConditioningContext>> {
    let points: Vec<(f64, f64)> = pairs
        .iter()
        .map(|&(q1, q2)| {
            if !(0.0 < q1 && q1 < q2 && q2 < 1.0) {
                return Err(Error::ParamError(format!(
                    "quantile pair ({q1}, {q2}) needs 0 < q1 < q2 < 1"
                )));
            }
            Ok((d.quantile(q1), d.quantile(q2)))
        })
        .collect::<Result<_>>()?;
    point_grid(d, &points, gaps)
}

/// Contexts at explicit `(u, v)` points crossed with the gaps, `n = k + 1`.
pub fn point_grid(
    d: &DistributionModel,
    points: &[(f64, f64)],
    gaps: &[(usize, usize)],
) -> Result<Vec<ConditioningContext>> {
    let mut grid = Vec::with_capacity(points.len() * gaps.len());
    for &(k, r) in gaps {
        for &(u, v) in points {
            let ctx = ConditioningContext::minimal(k, r, u, v)?;
            ctx.validate_for(d)?;
            grid.push(ctx);
        }
    }
    Ok(grid)
}

impl Scenario {
    /// A scenario on the default quantile grid with `h = x^(k+r)/(k+r)!`.
    pub fn power(
        name: impl Into<String>,
        distribution: DistributionModel,
        gaps: Vec<(usize, usize)>,
        variants: Vec<IdentityVariant>,
        expected: Expectation,
    ) -> Result<Self> {
        let grid = quantile_grid(&distribution, &DEFAULT_QUANTILE_PAIRS, &gaps)?;
        Self::assemble(
            name.into(),
            distribution,
            HTemplate::Power,
            variants,
            None,
            gaps,
            grid,
            expected,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        name: String,
        distribution: DistributionModel,
        h: HTemplate,
        variants: Vec<IdentityVariant>,
        transform: Option<TransformFamily>,
        gaps: Vec<(usize, usize)>,
        grid: Vec<ConditioningContext>,
        expected: Expectation,
    ) -> Result<Self> {
        let scenario = Self {
            name,
            distribution,
            h,
            variants,
            transform,
            mean_form: None,
            gaps,
            grid,
            expected,
            thresholds: Thresholds::default(),
            monte_carlo: None,
            direct_rhs: None,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::ParamError(format!(
                "scenario {} has an empty grid",
                self.name
            )));
        }
        if self.variants.is_empty() {
            return Err(Error::ParamError(format!(
                "scenario {} has no identity",
                self.name
            )));
        }
        for ctx in &self.grid {
            ctx.validate_for(&self.distribution)?;
            if let Some(tf) = &self.transform {
                tf.transform().check_domain(ctx.u)?;
                tf.transform().check_domain(ctx.v)?;
            }
        }
        Ok(())
    }

    fn with_direct_rhs(mut self, form: Option<MeanForm>, rhs: Formula) -> Self {
        self.mean_form = form;
        self.direct_rhs = Some(rhs);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_thresholds(mut self, thresholds: Thresholds) -> Self {
        self.thresholds = thresholds;
        self
    }

    /// Evaluates the left-hand side from `draws` exact conditional draws.
    pub fn with_monte_carlo(mut self, draws: usize) -> Result<Self> {
        if draws < 2 {
            return Err(Error::ParamError(format!(
                "need at least 2 draws, got {draws}"
            )));
        }
        self.monte_carlo = Some(draws);
        Ok(self)
    }

    /// Replaces the grid by explicit `(s, t)` points crossed with the gaps.
    pub fn with_points(mut self, points: &[(f64, f64)]) -> Result<Self> {
        self.grid = point_grid(&self.distribution, points, &self.gaps)?;
        self.validate()?;
        Ok(self)
    }

    /// Replaces the gaps and rebuilds the grid at the current `(u, v)` points.
    pub fn with_gaps(mut self, gaps: Vec<(usize, usize)>) -> Result<Self> {
        let mut points: Vec<(f64, f64)> = Vec::new();
        for ctx in &self.grid {
            if !points.contains(&(ctx.u, ctx.v)) {
                points.push((ctx.u, ctx.v));
            }
        }
        self.gaps = gaps;
        self.with_points(&points)
    }

    /// The same identities under another law, on that law's quantile grid,
    /// expected to fail.
    pub fn mismatched(&self, name: impl Into<String>, d: DistributionModel) -> Result<Self> {
        let grid = quantile_grid(&d, &DEFAULT_QUANTILE_PAIRS, &self.gaps)?;
        let mut out = self.clone();
        out.name = name.into();
        out.distribution = d;
        out.grid = grid;
        out.expected = Expectation::Fails;
        out.validate()?;
        Ok(out)
    }

    pub fn identity(
        &self,
        ctx: &ConditioningContext,
        variant: IdentityVariant,
    ) -> Result<RegressionIdentity> {
        RegressionIdentity::new(self.h.build(ctx.k, ctx.r)?, ctx.k, ctx.r, variant)
    }

    fn map(&self, y: f64) -> f64 {
        match &self.transform {
            Some(tf) => tf.apply(y),
            None => y,
        }
    }

    /// The right-hand side through the divided-difference kernel.
    pub fn kernel_rhs(&self, ctx: &ConditioningContext, variant: IdentityVariant) -> Result<f64> {
        let ident = self.identity(ctx, variant)?;
        closed_form_rhs(&ident, self.map(ctx.u), self.map(ctx.v))
    }

    /// The right-hand side from the scenario's explicit formula, when it has one.
    pub fn direct_rhs(&self, s: f64, t: f64) -> Option<f64> {
        self.direct_rhs.as_ref().map(|f| f(s, t))
    }

    /// Alias of [`Scenario::direct_rhs`] for the mean-form scenarios.
    pub fn mean_rhs(&self, s: f64, t: f64) -> Option<f64> {
        self.mean_form.and(self.direct_rhs(s, t))
    }

    /// The left-hand side by quadrature under the scenario's law.
    pub fn lhs_quadrature(
        &self,
        ctx: &ConditioningContext,
        variant: IdentityVariant,
    ) -> Result<f64> {
        let ident = self.identity(ctx, variant)?;
        let inner = ident.effective_context(ctx)?;
        let order = ident.lhs_order();
        let h = ident.h();
        h.check_domain(self.map(ctx.u))?;
        h.check_domain(self.map(ctx.v))?;
        cond_expect_quadrature(&self.distribution, &inner, |y| {
            h.deriv_raw(order, self.map(y))
        })
    }

    /// The left-hand side computed in `T`-space: the records `T(Y(n))` are
    /// those of the shifted exponential law with rate `c` and origin `tau`.
    pub fn lhs_via_transform_space(
        &self,
        ctx: &ConditioningContext,
        variant: IdentityVariant,
    ) -> Result<f64> {
        let tf = self
            .transform
            .as_ref()
            .ok_or_else(|| Error::ParamError(format!("scenario {} has no transform", self.name)))?;
        let ident = self.identity(ctx, variant)?;
        let inner = ident.effective_context(ctx)?;
        let exp = DistributionModel::shifted_exponential(tf.rate(), tf.tau())?;
        let mapped =
            ConditioningContext::new(inner.n, inner.k, inner.r, tf.apply(ctx.u), tf.apply(ctx.v))?;
        let order = ident.lhs_order();
        let h = ident.h();
        cond_expect_quadrature(&exp, &mapped, |x| h.deriv_raw(order, x))
    }

    fn evaluate(
        &self,
        index: usize,
        ctx: &ConditioningContext,
        variant: IdentityVariant,
        seed: u64,
    ) -> Result<ResidualRow> {
        let rhs = self.kernel_rhs(ctx, variant)?;
        match self.monte_carlo {
            None => {
                let lhs = self.lhs_quadrature(ctx, variant)?;
                Ok(ResidualRow::new(
                    *ctx,
                    variant,
                    lhs,
                    rhs,
                    EstimationMethod::Quadrature,
                    None,
                ))
            }
            Some(draws) => {
                let ident = self.identity(ctx, variant)?;
                let inner = ident.effective_context(ctx)?;
                let order = ident.lhs_order();
                let h = ident.h();
                let mut rng = stream_rng(seed, &self.name, index as u64);
                let est = cond_expect_mc(
                    &self.distribution,
                    &inner,
                    |y| h.deriv_raw(order, self.map(y)),
                    &mut rng,
                    draws,
                )?;
                Ok(ResidualRow::new(
                    *ctx,
                    variant,
                    est.mean,
                    rhs,
                    EstimationMethod::MonteCarlo,
                    Some(est.std_error),
                ))
            }
        }
    }

    /// Evaluates every context and identity. Contexts that fail numerically
    /// are recorded in the report instead of aborting the run.
    pub fn run(&self, seed: u64) -> ResidualReport {
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        let mut index = 0;
        for ctx in &self.grid {
            for &variant in &self.variants {
                match self.evaluate(index, ctx, variant, seed) {
                    Ok(row) => rows.push(row),
                    Err(e) => failures.push(RowFailure {
                        ctx: *ctx,
                        variant,
                        message: e.to_string(),
                    }),
                }
                index += 1;
            }
        }
        ResidualReport::new(
            self.name.clone(),
            rows,
            failures,
            Some(self.expected),
            self.thresholds,
        )
    }
}

/// Runs scenarios concurrently; reports come back sorted by scenario name.
pub fn run_scenarios(scenarios: &[Scenario], seed: u64) -> Vec<ResidualReport> {
    let mut reports: Vec<ResidualReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| scope.spawn(move || s.run(seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });
    reports.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    reports
}

/// Residuals of one scenario and the verdict they support.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub scenario: String,
    pub rows: Vec<ResidualRow>,
    pub failures: Vec<RowFailure>,
    pub max_abs_residual: f64,
    pub verdict: Verdict,
    pub expected: Option<Expectation>,
    pub thresholds: Thresholds,
}

/// The part of a residual that counts against the identity. Monte Carlo
/// rows forgive `MC_SIGMA` standard errors.
fn excess(row: &ResidualRow) -> f64 {
    let abs = row.residual.abs();
    match row.mc_std_error {
        Some(se) => (abs - MC_SIGMA * se).max(0.0),
        None => abs,
    }
}

impl ResidualReport {
    pub fn new(
        scenario: String,
        rows: Vec<ResidualRow>,
        failures: Vec<RowFailure>,
        expected: Option<Expectation>,
        thresholds: Thresholds,
    ) -> Self {
        let max_abs_residual = rows
            .iter()
            .map(|r| r.residual.abs())
            .fold(
                0.0,
                |acc: f64, x| if x.is_nan() { f64::NAN } else { acc.max(x) },
            );
        let worst_excess = rows.iter().map(excess).fold(0.0, f64::max);
        let verdict = if rows
            .iter()
            .any(|r| excess(r) > thresholds.fail || r.residual.is_nan())
        {
            Verdict::Fails
        } else if failures.is_empty() && !rows.is_empty() && worst_excess <= thresholds.hold {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        };
        Self {
            scenario,
            rows,
            failures,
            max_abs_residual,
            verdict,
            expected,
            thresholds,
        }
    }

    /// True when there is no expectation or the verdict meets it.
    pub fn meets_expectation(&self) -> bool {
        self.expected.is_none_or(|e| self.verdict.matches(e))
    }
}

/// Grid of the exponentiality diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub quantile_pairs: Vec<(f64, f64)>,
    pub gaps: Vec<(usize, usize)>,
    pub thresholds: Thresholds,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            quantile_pairs: DEFAULT_QUANTILE_PAIRS.to_vec(),
            gaps: DEFAULT_GAPS.to_vec(),
            thresholds: Thresholds::default(),
        }
    }
}

pub const MIN_DIAGNOSTIC_CONTEXTS: usize = 9;

/// Evaluates the identity with `h = x^(k+r)/(k+r)!` over the grid. Residuals
/// near zero everywhere are evidence that `d` is a shifted exponential.
pub fn diagnose_exponentiality(d: &DistributionModel, spec: &GridSpec) -> Result<ResidualReport> {
    let grid = quantile_grid(d, &spec.quantile_pairs, &spec.gaps)?;
    if grid.len() < MIN_DIAGNOSTIC_CONTEXTS {
        return Err(Error::ParamError(format!(
            "diagnostic grid has {} contexts, need at least {MIN_DIAGNOSTIC_CONTEXTS}",
            grid.len()
        )));
    }
    let scenario = Scenario::assemble(
        format!("diagnose:{}", d.label()),
        d.clone(),
        HTemplate::Power,
        vec![IdentityVariant::Standard],
        None,
        spec.gaps.clone(),
        grid,
        Expectation::Holds,
    )?
    .with_thresholds(spec.thresholds);
    let mut report = scenario.run(0);
    report.expected = None;
    Ok(report)
}

fn positive_rate(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::ParamError(format!(
            "rate c={c} must be positive and finite"
        )))
    }
}

/// `T = g^p` with `T' = p g^(p-1) g'`, for `p < 0` and positive `g`.
fn negative_power_of(g: &DerivableFunction, p: f64, label: String) -> Result<DerivableFunction> {
    g.check_order(1)?;
    let g0 = g.clone();
    Ok(DerivableFunction::new(label, g.domain(), 1, move |m, y| {
        let gy = g0.deriv_raw(0, y);
        if m == 0 {
            gy.powf(p)
        } else {
            p * gy.powf(p - 1.0) * g0.deriv_raw(1, y)
        }
    }))
}

fn transform_family(
    t: DerivableFunction,
    c: f64,
    g: &DerivableFunction,
) -> Result<TransformFamily> {
    positive_rate(c)?;
    let as_domain_error = |e: Error| match e {
        Error::NonMonotoneTransform { at } if !(g.deriv_raw(0, at) > 0.0) => {
            let (lo, hi) = g.domain();
            Error::DomainError { x: at, lo, hi }
        }
        other => other,
    };
    // tau = T(l_G+)
    let (lo, _) = t.domain();
    let tau = t.deriv_raw(0, lo);
    if !tau.is_finite() {
        TransformFamily::new(t.clone(), f64::MIN, c).map_err(as_domain_error)?;
        return Err(Error::ParamError(format!(
            "transform {} has no finite value at the left end {lo}",
            t.label()
        )));
    }
    TransformFamily::new(t, tau, c).map_err(as_domain_error)
}

fn transform_scenario(
    name: &str,
    tf: TransformFamily,
    h: DerivableFunction,
    k: usize,
) -> Result<Scenario> {
    let d = DistributionModel::from_transform(tf.clone());
    let gaps = vec![(k, 1)];
    let grid = quantile_grid(&d, &DEFAULT_QUANTILE_PAIRS, &gaps)?;
    Scenario::assemble(
        name.to_string(),
        d,
        HTemplate::Fixed(h),
        vec![IdentityVariant::Standard],
        Some(tf),
        gaps,
        grid,
        Expectation::Holds,
    )
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::ParamError("k must be at least 1".into()));
    }
    Ok(())
}

/// `E[g(Y(n)) | Y(n-k) = s, Y(n+1) = t] = (k g(t) + g(s)) / (k+1)` under
/// `G(y) = 1 - exp(-c [g(y) - g(l_G)])`, for increasing `g`.
pub fn scenario_arithmetic_mean(g: DerivableFunction, k: usize, c: f64) -> Result<Scenario> {
    check_k(k)?;
    let tf = transform_family(g.clone(), c, &g)?;
    let gk = k as f64;
    let g0 = g.clone();
    Ok(transform_scenario(
        "arithmetic-mean",
        tf,
        DerivableFunction::power_normalized(k + 1)?,
        k,
    )?
    .with_direct_rhs(
        Some(MeanForm::Arithmetic),
        Arc::new(move |s, t| (gk * g0.deriv_raw(0, t) + g0.deriv_raw(0, s)) / (gk + 1.0)),
    ))
}

/// `E[g(Y(n)) | Y(n-k) = s, Y(n+1) = t] = g(t)^(k/(k+1)) g(s)^(1/(k+1))`
/// under `T = g^(-1/(k+1))`, for decreasing positive `g`.
pub fn scenario_geometric_mean(g: DerivableFunction, k: usize, c: f64) -> Result<Scenario> {
    check_k(k)?;
    let p = -1.0 / (k as f64 + 1.0);
    let t = negative_power_of(&g, p, format!("{}^(-1/{})", g.label(), k + 1))?;
    let tf = transform_family(t, c, &g)?;
    let gk = k as f64;
    let g0 = g.clone();
    Ok(transform_scenario(
        "geometric-mean",
        tf,
        DerivableFunction::neg_reciprocal(k)?,
        k,
    )?
    .with_direct_rhs(
        Some(MeanForm::Geometric),
        Arc::new(move |s, t| {
            g0.deriv_raw(0, t).powf(gk / (gk + 1.0)) * g0.deriv_raw(0, s).powf(1.0 / (gk + 1.0))
        }),
    ))
}

/// `E[g(Y(n)) | Y(n-1) = s, Y(n+1) = t] = 2 g(s) g(t) / (g(s) + g(t))`
/// under `T = g^-2`, for decreasing positive `g`.
pub fn scenario_harmonic_mean(g: DerivableFunction, c: f64) -> Result<Scenario> {
    let t = negative_power_of(&g, -2.0, format!("{}^(-2)", g.label()))?;
    let tf = transform_family(t, c, &g)?;
    let g0 = g.clone();
    Ok(
        transform_scenario("harmonic-mean", tf, DerivableFunction::double_sqrt(), 1)?
            .with_direct_rhs(
                Some(MeanForm::Harmonic),
                Arc::new(move |s, t| {
                    let (a, b) = (g0.deriv_raw(0, s), g0.deriv_raw(0, t));
                    2.0 * a * b / (a + b)
                }),
            ),
    )
}

fn power_transform(alpha: f64) -> DerivableFunction {
    DerivableFunction::new(
        format!("y^{alpha}"),
        (0.0, f64::INFINITY),
        1,
        move |m, y| {
            if m == 0 {
                y.powf(alpha)
            } else {
                alpha * y.powf(alpha - 1.0)
            }
        },
    )
}

fn log_transform(a: f64) -> DerivableFunction {
    DerivableFunction::new("ln(y)", (a, f64::INFINITY), 1, |m, y| {
        if m == 0 {
            y.ln()
        } else {
            1.0 / y
        }
    })
}

/// `E[Y(n)^(-alpha(k+1)) | Y(n-k) = s, Y(n+1) = t] = t^(-alpha k) s^(-alpha)`
/// under `weibull(c, alpha)`.
pub fn scenario_weibull_example(alpha: f64, c: f64, k: usize) -> Result<Scenario> {
    check_k(k)?;
    let d = DistributionModel::weibull(c, alpha)?;
    let tf = TransformFamily::new(power_transform(alpha), 0.0, c)?
        .with_inverse(move |x| x.powf(1.0 / alpha));
    let gaps = vec![(k, 1)];
    let grid = quantile_grid(&d, &DEFAULT_QUANTILE_PAIRS, &gaps)?;
    let gk = k as f64;
    Ok(Scenario::assemble(
        "weibull-example".into(),
        d,
        HTemplate::Fixed(DerivableFunction::neg_reciprocal(k)?),
        vec![IdentityVariant::Standard],
        Some(tf),
        gaps,
        grid,
        Expectation::Holds,
    )?
    .with_direct_rhs(
        None,
        Arc::new(move |s, t| t.powf(-alpha * gk) * s.powf(-alpha)),
    ))
}

/// `E[(ln Y(n))^(-(k+1)) | Y(n-k) = s, Y(n+1) = t] = (ln t)^(-k) (ln s)^(-1)`
/// under `pareto(a, c)`, whatever the scale `a`.
pub fn scenario_pareto_example(a: f64, c: f64, k: usize) -> Result<Scenario> {
    check_k(k)?;
    let d = DistributionModel::pareto(a, c)?;
    let tf = TransformFamily::new(log_transform(a), a.ln(), c)?.with_inverse(f64::exp);
    let gaps = vec![(k, 1)];
    let grid = quantile_grid(&d, &DEFAULT_QUANTILE_PAIRS, &gaps)?;
    check_log_positive(&grid)?;
    let gk = k as f64;
    Ok(Scenario::assemble(
        "pareto-example".into(),
        d,
        HTemplate::Fixed(DerivableFunction::neg_reciprocal(k)?),
        vec![IdentityVariant::Standard],
        Some(tf),
        gaps,
        grid,
        Expectation::Holds,
    )?
    .with_direct_rhs(None, Arc::new(move |s, t| t.ln().powf(-gk) / s.ln())))
}

fn check_log_positive(grid: &[ConditioningContext]) -> Result<()> {
    match grid.iter().find(|ctx| ctx.u <= 1.0) {
        Some(ctx) => Err(Error::DomainError {
            x: ctx.u,
            lo: 1.0,
            hi: f64::INFINITY,
        }),
        None => Ok(()),
    }
}

impl Scenario {
    /// As [`Scenario::with_points`], also requiring `s > 1` for the Pareto
    /// example so that `ln s > 0`.
    pub fn with_log_points(self, points: &[(f64, f64)]) -> Result<Self> {
        if let Some(&(s, _)) = points.iter().find(|p| p.0 <= 1.0) {
            return Err(Error::DomainError {
                x: s,
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
        self.with_points(points)
    }
}

/// Grid of the core identity check: `(u, v) = l0 + {(2,3), (2,5), (3,6)}`.
pub const CORE_OFFSETS: [(f64, f64); 3] = [(2.0, 3.0), (2.0, 5.0), (3.0, 6.0)];
pub const CORE_RATES: [f64; 3] = [0.5, 1.0, 2.0];
pub const CORE_ORIGINS: [f64; 2] = [0.0, 1.0];

fn core_gaps() -> Vec<(usize, usize)> {
    (1..=4).flat_map(|k| (1..=4).map(move |r| (k, r))).collect()
}

/// One part of the core check per `(c, l0)`; 48 contexts each.
pub fn exponential_core() -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for &c in &CORE_RATES {
        for &l0 in &CORE_ORIGINS {
            let d = DistributionModel::shifted_exponential(c, l0)?;
            let points: Vec<(f64, f64)> = CORE_OFFSETS
                .iter()
                .map(|&(a, b)| (l0 + a, l0 + b))
                .collect();
            let grid = point_grid(&d, &points, &core_gaps())?;
            out.push(Scenario::assemble(
                format!("exponential-core[c={c},l0={l0}]"),
                d,
                HTemplate::Power,
                vec![IdentityVariant::Standard],
                None,
                core_gaps(),
                grid,
                Expectation::Holds,
            )?);
        }
    }
    Ok(out)
}

fn theorem1b_pair() -> Result<Scenario> {
    Scenario::power(
        "theorem1b-pair",
        DistributionModel::shifted_exponential(2.0, 1.0)?,
        vec![(2, 1), (3, 1), (2, 2), (2, 3)],
        vec![IdentityVariant::Standard, IdentityVariant::ShiftedPrime],
        Expectation::Holds,
    )
}

fn cube() -> DerivableFunction {
    DerivableFunction::new("y^3", (0.0, f64::INFINITY), 3, |m, y| match m {
        0 => y * y * y,
        1 => 3.0 * y * y,
        2 => 6.0 * y,
        _ => 6.0,
    })
}

fn inverse_square() -> DerivableFunction {
    DerivableFunction::new("y^-2", (0.0, f64::INFINITY), 1, |m, y| {
        if m == 0 {
            y.powi(-2)
        } else {
            -2.0 * y.powi(-3)
        }
    })
}

fn inverse() -> DerivableFunction {
    DerivableFunction::new("y^-1", (0.0, f64::INFINITY), 1, |m, y| {
        if m == 0 {
            1.0 / y
        } else {
            -1.0 / (y * y)
        }
    })
}

/// Scale values checked for the invariance of the Pareto example.
pub const PARETO_SCALES: [f64; 3] = [1.0, 2.0, 5.0];
/// The fixed `(s, t)` of the invariance check.
pub const PARETO_INVARIANCE_POINT: (f64, f64) = (6.0, 10.0);

fn pareto_invariance() -> Result<Vec<Scenario>> {
    PARETO_SCALES
        .iter()
        .map(|&a| {
            Ok(scenario_pareto_example(a, 1.0, 1)?
                .with_log_points(&[PARETO_INVARIANCE_POINT])?
                .renamed(format!("pareto-a-invariance[a={a}]")))
        })
        .collect()
}

fn falsify(name: &str, d: DistributionModel) -> Result<Scenario> {
    Scenario::power(
        name,
        d,
        DEFAULT_GAPS.to_vec(),
        vec![IdentityVariant::Standard],
        Expectation::Fails,
    )
}

/// Draws per row of the Monte Carlo scenario.
pub const MC_SCENARIO_DRAWS: usize = 100_000;

fn exponential_monte_carlo() -> Result<Scenario> {
    let d = DistributionModel::shifted_exponential(1.0, 0.0)?;
    Scenario::power(
        "exponential-monte-carlo",
        d,
        vec![(2, 3)],
        vec![IdentityVariant::Standard],
        Expectation::Holds,
    )?
    .with_points(&[(1.0, 5.0), (0.5, 2.0)])?
    .with_monte_carlo(MC_SCENARIO_DRAWS)
}

/// Names accepted by [`scenario_by_name`], in canonical order.
pub const SCENARIO_NAMES: [&str; 16] = [
    "arithmetic-mean",
    "arithmetic-mean-mismatch",
    "exponential-core",
    "exponential-monte-carlo",
    "geometric-mean",
    "harmonic-mean",
    "harmonic-mean-mismatch",
    "pareto-a-invariance",
    "pareto-example",
    "pareto-example-mismatch",
    "pareto-falsify",
    "theorem1b-pair",
    "uniform-falsify",
    "weibull-example",
    "weibull-example-mismatch",
    "weibull-falsify",
];

/// The scenarios registered under `name`. Some names expand into several
/// parameterized parts.
pub fn scenario_by_name(name: &str) -> Result<Vec<Scenario>> {
    let one = |s: Result<Scenario>| s.map(|s| vec![s]);
    match name {
        "exponential-core" => exponential_core(),
        "exponential-monte-carlo" => one(exponential_monte_carlo()),
        "theorem1b-pair" => one(theorem1b_pair()),
        "arithmetic-mean" => one(scenario_arithmetic_mean(cube(), 2, 1.0)),
        "arithmetic-mean-mismatch" => one(scenario_arithmetic_mean(cube(), 2, 1.0)?
            .mismatched(name, DistributionModel::weibull(1.0, 1.0)?)),
        "geometric-mean" => one(scenario_geometric_mean(inverse_square(), 1, 1.0)),
        "harmonic-mean" => one(scenario_harmonic_mean(inverse(), 1.0)),
        "harmonic-mean-mismatch" => one(scenario_harmonic_mean(inverse(), 1.0)?
            .mismatched(name, DistributionModel::weibull(1.0, 1.0)?)),
        "weibull-example" => one(scenario_weibull_example(2.0, 1.0, 2)),
        "weibull-example-mismatch" => one(scenario_weibull_example(2.0, 1.0, 2)?
            .mismatched(name, DistributionModel::pareto(1.0, 2.0)?)),
        "pareto-example" => one(scenario_pareto_example(1.0, 1.0, 1)),
        "pareto-example-mismatch" => one(scenario_pareto_example(1.0, 1.0, 1)?
            .mismatched(name, DistributionModel::uniform(1.0, 20.0)?)),
        "pareto-a-invariance" => pareto_invariance(),
        "uniform-falsify" => one(falsify(name, DistributionModel::uniform(0.0, 1.0)?)),
        "pareto-falsify" => one(falsify(name, DistributionModel::pareto(1.0, 2.0)?)),
        "weibull-falsify" => one(falsify(name, DistributionModel::weibull(1.0, 2.0)?)),
        other => Err(Error::ParamError(format!(
            "unknown scenario {other:?}; known: {}",
            SCENARIO_NAMES.join(", ")
        ))),
    }
}

/// Every registered scenario.
pub fn all_scenarios() -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for name in SCENARIO_NAMES {
        out.extend(scenario_by_name(name)?);
    }
    Ok(out)
}
