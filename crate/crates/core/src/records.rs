//! Upper record values: simulation and the conditional law of `X(n)` given
//! `X(n-k) = u` and `X(n+r) = v`.
//!
//! In hazard space the records of any continuous law are the arrival times of
//! a unit-rate Poisson process, so `w = (R(X(n)) - R(u)) / (R(v) - R(u))` is
//! `Beta(k, r)` under the conditioning. Sampling and the closed-form CDF both
//! go through that variable.

use rand::distr::Open01;
use rand::Rng;
use serde::Serialize;

use crate::distribution::DistributionModel;
use crate::error::{Error, Result};
use crate::kernel::factorial;

/// Largest number of i.i.d. draws the stream oracle will scan.
pub const STREAM_HORIZON_CAP: u64 = 10_000_000;

/// Smallest hazard increment `R(v) - R(u)` accepted for conditioning.
pub const MIN_HAZARD_GAP: f64 = 1e-14;

const MAX_BRIDGE_RETRIES: usize = 64;

/// Realized upper records `X(1) < X(2) < ... < X(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSequence(Vec<f64>);

impl RecordSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(w) = values.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::ParamError(format!(
                "record values must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `X(n)` with 1-based indexing.
    pub fn record(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// The conditioning event `X(n-k) = u`, `X(n+r) = v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditioningContext {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub u: f64,
    pub v: f64,
}

impl ConditioningContext {
    pub fn new(n: usize, k: usize, r: usize, u: f64, v: f64) -> Result<Self> {
        let ctx = Self { n, k, r, u, v };
        ctx.validate()?;
        Ok(ctx)
    }

    /// The smallest admissible `n` for the gaps, `n = k + 1`.
    pub fn minimal(k: usize, r: usize, u: f64, v: f64) -> Result<Self> {
        Self::new(k + 1, k, r, u, v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.k + 1 > self.n {
            return Err(Error::ContextError(format!(
                "need 1 <= k <= n-1, got n={}, k={}",
                self.n, self.k
            )));
        }
        if self.r < 1 {
            return Err(Error::ContextError(format!("need r >= 1, got {}", self.r)));
        }
        if !(self.u.is_finite() && self.v.is_finite() && self.u < self.v) {
            return Err(Error::ContextError(format!(
                "need finite u < v, got u={}, v={}",
                self.u, self.v
            )));
        }
        Ok(())
    }

    pub fn validate_for(&self, d: &DistributionModel) -> Result<()> {
        self.validate()?;
        let (lo, hi) = d.support();
        if !(d.in_support(self.u) && d.in_support(self.v)) {
            return Err(Error::ContextError(format!(
                "u={}, v={} must lie inside the support ({lo}, {hi})",
                self.u, self.v
            )));
        }
        Ok(())
    }
}

/// `(k+r-1)! / ((k-1)! (r-1)!)` in exact integer arithmetic.
pub fn bridge_coefficient(k: usize, r: usize) -> Result<u128> {
    if k == 0 || r == 0 {
        return Err(Error::ContextError(format!(
            "gaps must be positive, got k={k}, r={r}"
        )));
    }
    Ok(factorial(k + r - 1)? / (factorial(k - 1)? * factorial(r - 1)?))
}

fn standard_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -u.ln()
}

/// The law of `X(n)` under a [`ConditioningContext`], with hazard values
/// at the conditioning points cached.
#[derive(Debug, Clone)]
pub struct ConditionalLaw<'a> {
    dist: &'a DistributionModel,
    k: usize,
    r: usize,
    u: f64,
    v: f64,
    hazard_u: f64,
    hazard_v: f64,
    gap: f64,
    coefficient: f64,
}

impl<'a> ConditionalLaw<'a> {
    pub fn new(dist: &'a DistributionModel, ctx: &ConditioningContext) -> Result<Self> {
        ctx.validate_for(dist)?;
        let hazard_u = dist.hazard(ctx.u);
        let hazard_v = dist.hazard(ctx.v);
        let gap = hazard_v - hazard_u;
        if !(gap >= MIN_HAZARD_GAP) {
            return Err(Error::DegenerateHazard { gap });
        }
        Ok(Self {
            dist,
            k: ctx.k,
            r: ctx.r,
            u: ctx.u,
            v: ctx.v,
            hazard_u,
            hazard_v,
            gap,
            coefficient: bridge_coefficient(ctx.k, ctx.r)? as f64,
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.u, self.v)
    }

    /// Position of `t` between the conditioning points in hazard space, and its complement.
    fn hazard_fraction(&self, t: f64) -> (f64, f64) {
        let rt = self.dist.hazard(t);
        (
            (rt - self.hazard_u) / self.gap,
            (self.hazard_v - rt) / self.gap,
        )
    }

    pub fn density(&self, t: f64) -> f64 {
        if !(t > self.u && t < self.v) {
            return 0.0;
        }
        let (w, w_c) = self.hazard_fraction(t);
        let w = w.clamp(0.0, 1.0);
        let w_c = w_c.clamp(0.0, 1.0);
        self.coefficient
            * w.powi(self.k as i32 - 1)
            * w_c.powi(self.r as i32 - 1)
            * self.dist.hazard_prime(t)
            / self.gap
    }

    /// Closed-form CDF: the regularized incomplete beta `I_w(k, r)` written as
    /// a binomial tail, valid for integer shapes.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= self.u {
            return 0.0;
        }
        if t >= self.v {
            return 1.0;
        }
        let (w, w_c) = self.hazard_fraction(t);
        let (w, w_c) = (w.clamp(0.0, 1.0), w_c.clamp(0.0, 1.0));
        let m = self.k + self.r - 1;
        let mut binom = 1.0;
        let mut total = 0.0;
        for j in 0..=m {
            if j > 0 {
                binom = binom * (m + 1 - j) as f64 / j as f64;
            }
            if j >= self.k {
                total += binom * w.powi(j as i32) * w_c.powi((m - j) as i32);
            }
        }
        total.clamp(0.0, 1.0)
    }

    /// Exact draw through the Beta bridge `B = G1 / (G1 + G2)` with `G1`, `G2`
    /// sums of `k` and `r` standard exponentials.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        for _ in 0..MAX_BRIDGE_RETRIES {
            let g1: f64 = (0..self.k).map(|_| standard_exponential(rng)).sum();
            let g2: f64 = (0..self.r).map(|_| standard_exponential(rng)).sum();
            let beta = g1 / (g1 + g2);
            let t = self.dist.hazard_inverse(self.hazard_u + self.gap * beta);
            if t > self.u && t < self.v {
                return Ok(t);
            }
        }
        Err(Error::DegenerateHazard { gap: self.gap })
    }
}

/// Density of `X(n)` at `t` given `X(n-k) = u`, `X(n+r) = v`.
pub fn conditional_density(
    d: &DistributionModel,
    ctx: &ConditioningContext,
    t: f64,
) -> Result<f64> {
    Ok(ConditionalLaw::new(d, ctx)?.density(t))
}

/// One exact draw of `X(n)` given `X(n-k) = u`, `X(n+r) = v`; always inside `(u, v)`.
pub fn sample_conditional<R: Rng + ?Sized>(
    d: &DistributionModel,
    ctx: &ConditioningContext,
    rng: &mut R,
) -> Result<f64> {
    ConditionalLaw::new(d, ctx)?.sample(rng)
}

/// The records among the first `horizon` i.i.d. draws from `d`.
pub fn sample_records_stream<R: Rng + ?Sized>(
    d: &DistributionModel,
    rng: &mut R,
    horizon: u64,
) -> Result<RecordSequence> {
    check_horizon(horizon)?;
    let mut records = Vec::new();
    let mut current = f64::NEG_INFINITY;
    for _ in 0..horizon {
        let x = d.quantile(rng.sample(Open01));
        if x > current {
            records.push(x);
            current = x;
        }
    }
    Ok(RecordSequence(records))
}

/// Scans i.i.d. draws until `wanted` records have appeared, giving up after
/// `horizon` draws.
pub fn stream_until_records<R: Rng + ?Sized>(
    d: &DistributionModel,
    rng: &mut R,
    wanted: usize,
    horizon: u64,
) -> Result<RecordSequence> {
    check_horizon(horizon)?;
    let mut records = Vec::with_capacity(wanted);
    let mut current = f64::NEG_INFINITY;
    let mut drawn = 0;
    while records.len() < wanted {
        if drawn == horizon {
            return Err(Error::HorizonExhausted {
                horizon,
                found: records.len(),
                wanted,
            });
        }
        drawn += 1;
        let x = d.quantile(rng.sample(Open01));
        if x > current {
            records.push(x);
            current = x;
        }
    }
    Ok(RecordSequence(records))
}

fn check_horizon(horizon: u64) -> Result<()> {
    if horizon == 0 {
        return Err(Error::ParamError(
            "stream horizon must be at least 1".into(),
        ));
    }
    if horizon > STREAM_HORIZON_CAP {
        return Err(Error::ParamError(format!(
            "stream horizon {horizon} exceeds the cap {STREAM_HORIZON_CAP}"
        )));
    }
    Ok(())
}

/// `X(1..n)` as `R^-1(Gamma_i)`, `Gamma_i` the running sum of `i` standard
/// exponentials. Exact for every continuous law.
pub fn sample_records_gamma<R: Rng + ?Sized>(
    d: &DistributionModel,
    rng: &mut R,
    n: usize,
) -> Result<RecordSequence> {
    if n == 0 {
        return Err(Error::ParamError("need at least one record".into()));
    }
    let mut gamma = 0.0;
    let values = (0..n)
        .map(|_| {
            gamma += standard_exponential(rng);
            d.hazard_inverse(gamma)
        })
        .collect();
    Ok(RecordSequence(values))
}
