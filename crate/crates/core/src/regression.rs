//! Both sides of the record regression identity
//!
//! ```text
//! E[h^(k+r-1)(X(n)) | X(n-k) = u, X(n+r) = v] = (k+r-1)! / ((k-1)! (r-1)!) * {r-1}M{k-1}(u, v)
//! ```
//!
//! and of its shifted companion, which conditions on `X(n-k+1) = u2` and uses
//! the divided difference of `h'`.

use rand::Rng;
use serde::Serialize;

use crate::distribution::DistributionModel;
use crate::error::{Error, Result};
use crate::kernel::{mixed_deriv, DerivableFunction, MixedDiffRequest};
use crate::quadrature;
use crate::records::{bridge_coefficient, ConditionalLaw, ConditioningContext};

/// Residuals relative to `|rhs|` are reported only above this magnitude.
pub const RELATIVE_RESIDUAL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityVariant {
    /// Conditioning on `X(n-k) = u`, divided difference of `h`.
    Standard,
    /// Conditioning on `X(n-k+1) = u2`, divided difference of `h'`.
    ShiftedPrime,
}

impl IdentityVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::ShiftedPrime => "shifted_prime",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegressionIdentity {
    h: DerivableFunction,
    k: usize,
    r: usize,
    variant: IdentityVariant,
}

impl RegressionIdentity {
    pub fn new(h: DerivableFunction, k: usize, r: usize, variant: IdentityVariant) -> Result<Self> {
        if k < 1 || r < 1 {
            return Err(Error::ParamError(format!(
                "need k, r >= 1, got k={k}, r={r}"
            )));
        }
        if variant == IdentityVariant::ShiftedPrime && k < 2 {
            return Err(Error::ParamError(format!(
                "shifted identity needs k >= 2, got {k}"
            )));
        }
        h.check_order(k + r - 1)?;
        bridge_coefficient(k, r)?;
        Ok(Self { h, k, r, variant })
    }

    pub fn standard(h: DerivableFunction, k: usize, r: usize) -> Result<Self> {
        Self::new(h, k, r, IdentityVariant::Standard)
    }

    pub fn shifted_prime(h: DerivableFunction, k: usize, r: usize) -> Result<Self> {
        Self::new(h, k, r, IdentityVariant::ShiftedPrime)
    }

    pub fn h(&self) -> &DerivableFunction {
        &self.h
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn variant(&self) -> IdentityVariant {
        self.variant
    }

    /// Order of the derivative of `h` whose conditional mean is taken.
    pub fn lhs_order(&self) -> usize {
        self.k + self.r - 1
    }

    /// The exact factor in front of the mixed partial on the right-hand side.
    pub fn coefficient(&self) -> u128 {
        let (k, r) = self.inner_gaps();
        bridge_coefficient(k, r).expect("validated in the constructor")
    }

    /// Gaps `(k, r)` of the conditioning actually used: `k - 1` for the shifted form.
    pub fn inner_gaps(&self) -> (usize, usize) {
        match self.variant {
            IdentityVariant::Standard => (self.k, self.r),
            IdentityVariant::ShiftedPrime => (self.k - 1, self.r),
        }
    }

    /// The context whose conditional law appears on the left-hand side. For
    /// the shifted form, `ctx.u` is read as `u2 = X(n-k+1)`.
    pub fn effective_context(&self, ctx: &ConditioningContext) -> Result<ConditioningContext> {
        if ctx.k != self.k || ctx.r != self.r {
            return Err(Error::ContextError(format!(
                "context gaps (k={}, r={}) do not match the identity (k={}, r={})",
                ctx.k, ctx.r, self.k, self.r
            )));
        }
        let (k, r) = self.inner_gaps();
        ConditioningContext::new(ctx.n, k, r, ctx.u, ctx.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMethod {
    Quadrature,
    MonteCarlo,
}

impl EstimationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Quadrature => "quadrature",
            Self::MonteCarlo => "monte_carlo",
        }
    }
}

/// One evaluated identity: `residual = lhs - rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub ctx: ConditioningContext,
    pub variant: IdentityVariant,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub method: EstimationMethod,
    pub mc_std_error: Option<f64>,
}

impl ResidualRow {
    pub fn new(
        ctx: ConditioningContext,
        variant: IdentityVariant,
        lhs: f64,
        rhs: f64,
        method: EstimationMethod,
        mc_std_error: Option<f64>,
    ) -> Self {
        Self {
            ctx,
            variant,
            lhs,
            rhs,
            residual: lhs - rhs,
            method,
            mc_std_error,
        }
    }

    pub fn relative_residual(&self) -> Option<f64> {
        (self.rhs.abs() > RELATIVE_RESIDUAL_FLOOR).then(|| self.residual / self.rhs.abs())
    }
}

/// `E[g(X(n)) | X(n-k) = u, X(n+r) = v]` by adaptive Gauss-Legendre quadrature.
pub fn cond_expect_quadrature<G>(
    d: &DistributionModel,
    ctx: &ConditioningContext,
    g: G,
) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    let law = ConditionalLaw::new(d, ctx)?;
    quadrature::integrate(|t| g(t) * law.density(t), ctx.u, ctx.v)
}

/// Coefficient times `{r-1}M{k-1}(u, v)`; the shifted form uses `h'` and `k - 1`.
pub fn closed_form_rhs(ident: &RegressionIdentity, u: f64, v: f64) -> Result<f64> {
    let (k, r) = ident.inner_gaps();
    let request = MixedDiffRequest::new(r - 1, k - 1, u, v);
    let partial = match ident.variant {
        IdentityVariant::Standard => mixed_deriv(&ident.h, request)?,
        IdentityVariant::ShiftedPrime => mixed_deriv(&ident.h.derivative()?, request)?,
    };
    Ok(ident.coefficient() as f64 * partial)
}

/// Evaluates both sides at `ctx` under `d` by quadrature.
pub fn residual(
    d: &DistributionModel,
    ctx: &ConditioningContext,
    ident: &RegressionIdentity,
) -> Result<ResidualRow> {
    let inner = ident.effective_context(ctx)?;
    let h = ident.h();
    let order = ident.lhs_order();
    h.check_domain(ctx.u)?;
    h.check_domain(ctx.v)?;
    let lhs = cond_expect_quadrature(d, &inner, |t| h.deriv_raw(order, t))?;
    let rhs = closed_form_rhs(ident, ctx.u, ctx.v)?;
    Ok(ResidualRow::new(
        *ctx,
        ident.variant,
        lhs,
        rhs,
        EstimationMethod::Quadrature,
        None,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: usize,
}

/// Sample mean and standard error of `g(X(n))` over exact conditional draws.
pub fn cond_expect_mc<G, R>(
    d: &DistributionModel,
    ctx: &ConditioningContext,
    g: G,
    rng: &mut R,
    n_draws: usize,
) -> Result<McEstimate>
where
    G: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    if n_draws < 2 {
        return Err(Error::ParamError(format!(
            "need at least 2 draws, got {n_draws}"
        )));
    }
    let law = ConditionalLaw::new(d, ctx)?;
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n_draws {
        let x = g(law.sample(rng)?);
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let variance = m2 / (n_draws - 1) as f64;
    Ok(McEstimate {
        mean,
        std_error: (variance / n_draws as f64).sqrt(),
        draws: n_draws,
    })
}
