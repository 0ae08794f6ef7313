//! Absolutely continuous distributions described by their distribution
//! function `F`, density `f`, quantile and hazard transform
//! `R(x) = -ln(1 - F(x))`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::distr::Open01;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::DerivableFunction;

const BISECTION_MAX_ITER: usize = 200;
const BISECTION_TOL: f64 = 1e-12;

type Inverse = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A strictly increasing transform `T` on `(l_G, r_G)` with `tau = T(l_G+)`
/// and rate `c`, inducing `G(y) = 1 - exp(-c [T(y) - tau])`.
#[derive(Clone)]
pub struct TransformFamily {
    transform: DerivableFunction,
    tau: f64,
    rate: f64,
    inverse: Option<Inverse>,
}

impl fmt::Debug for TransformFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformFamily")
            .field("transform", &self.transform)
            .field("tau", &self.tau)
            .field("rate", &self.rate)
            .field("inverse", &self.inverse.is_some())
            .finish()
    }
}

impl TransformFamily {
    /// Validates the transform on a grid spanning its domain. `transform`
    /// must provide its first derivative.
    pub fn new(transform: DerivableFunction, tau: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::ParamError(format!(
                "transform rate c={rate} must be positive"
            )));
        }
        if !tau.is_finite() {
            return Err(Error::ParamError(format!("tau={tau} must be finite")));
        }
        transform.check_order(1)?;
        let (lo, hi) = transform.domain();
        if !(lo < hi) {
            return Err(Error::ParamError(format!(
                "empty transform domain ({lo}, {hi})"
            )));
        }
        let mut prev: Option<f64> = None;
        for x in validation_grid(lo, hi) {
            let t = transform.deriv_raw(0, x);
            if !t.is_finite() || prev.is_some_and(|p| t <= p) {
                return Err(Error::NonMonotoneTransform { at: x });
            }
            if prev.is_none() && t < tau - 1e-12 * tau.abs().max(1.0) {
                return Err(Error::NonMonotoneTransform { at: x });
            }
            prev = Some(t);
        }
        Ok(Self {
            transform,
            tau,
            rate,
            inverse: None,
        })
    }

    /// Supplies `T^-1`, used instead of bisection for quantiles.
    pub fn with_inverse<F>(mut self, inverse: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    pub fn transform(&self) -> &DerivableFunction {
        &self.transform
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `T(y)` without domain checks.
    pub fn apply(&self, y: f64) -> f64 {
        self.transform.deriv_raw(0, y)
    }
}

/// Interior points used to validate monotonicity, in increasing order.
fn validation_grid(lo: f64, hi: f64) -> Vec<f64> {
    const N: usize = 64;
    let logs = (0..N).map(|i| -8.0 + 14.0 * i as f64 / (N - 1) as f64);
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (1..=N)
            .map(|i| lo + (hi - lo) * i as f64 / (N + 1) as f64)
            .collect(),
        (true, false) => {
            let scale = lo.abs().max(1.0);
            logs.map(|t| lo + scale * t.exp()).collect()
        }
        (false, true) => {
            let scale = hi.abs().max(1.0);
            let mut pts: Vec<f64> = logs.map(|t| hi - scale * t.exp()).collect();
            pts.reverse();
            pts
        }
        (false, false) => {
            let pos: Vec<f64> = logs.map(f64::exp).collect();
            pos.iter()
                .rev()
                .map(|x| -x)
                .chain(std::iter::once(0.0))
                .chain(pos.iter().copied())
                .collect()
        }
    }
}

#[derive(Clone, Debug)]
enum Family {
    ShiftedExponential { rate: f64, origin: f64 },
    Weibull { rate: f64, shape: f64 },
    Pareto { scale: f64, rate: f64 },
    Uniform { lo: f64, hi: f64 },
    InverseWeibull { rate: f64 },
    Transform(Arc<TransformFamily>),
}

/// A continuous law on the open interval `(l_F, r_F)`.
#[derive(Clone, Debug)]
pub struct DistributionModel {
    family: Family,
    lo: f64,
    hi: f64,
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::ParamError(format!(
            "{name}={value} must be positive and finite"
        )))
    }
}

impl DistributionModel {
    /// `F(x) = 1 - exp(-c (x - l0))` on `(l0, inf)`.
    pub fn shifted_exponential(c: f64, l0: f64) -> Result<Self> {
        let rate = positive("c", c)?;
        if !l0.is_finite() {
            return Err(Error::ParamError(format!("l0={l0} must be finite")));
        }
        Ok(Self {
            family: Family::ShiftedExponential { rate, origin: l0 },
            lo: l0,
            hi: f64::INFINITY,
        })
    }

    /// `G(y) = 1 - exp(-c y^alpha)` on `(0, inf)`.
    pub fn weibull(c: f64, alpha: f64) -> Result<Self> {
        Ok(Self {
            family: Family::Weibull {
                rate: positive("c", c)?,
                shape: positive("alpha", alpha)?,
            },
            lo: 0.0,
            hi: f64::INFINITY,
        })
    }

    /// `G(y) = 1 - (a/y)^c` on `(a, inf)`.
    pub fn pareto(a: f64, c: f64) -> Result<Self> {
        let scale = positive("a", a)?;
        Ok(Self {
            family: Family::Pareto {
                scale,
                rate: positive("c", c)?,
            },
            lo: scale,
            hi: f64::INFINITY,
        })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::ParamError(format!(
                "uniform bounds need a < b, got ({a}, {b})"
            )));
        }
        Ok(Self {
            family: Family::Uniform { lo: a, hi: b },
            lo: a,
            hi: b,
        })
    }

    /// The inverse Weibull law `G(y) = exp(-c y^(-1/2))` on `(0, inf)`.
    ///
    /// The expression `exp(-c y^(1/2))` is decreasing in `y` and so is not a
    /// distribution function; this family uses the exponent `-1/2`.
    pub fn inverse_weibull_corrected(c: f64) -> Result<Self> {
        Ok(Self {
            family: Family::InverseWeibull {
                rate: positive("c", c)?,
            },
            lo: 0.0,
            hi: f64::INFINITY,
        })
    }

    /// `G(y) = 1 - exp(-c [T(y) - tau])` on the domain of `T`.
    pub fn from_transform(tf: TransformFamily) -> Self {
        let (lo, hi) = tf.transform.domain();
        Self {
            family: Family::Transform(Arc::new(tf)),
            lo,
            hi,
        }
    }

    /// Open support `(l_F, r_F)`.
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn in_support(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn transform_family(&self) -> Option<&TransformFamily> {
        match &self.family {
            Family::Transform(tf) => Some(tf),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match &self.family {
            Family::ShiftedExponential { rate, origin } => format!("exp:c={rate},l0={origin}"),
            Family::Weibull { rate, shape } => format!("weibull:c={rate},alpha={shape}"),
            Family::Pareto { scale, rate } => format!("pareto:a={scale},c={rate}"),
            Family::Uniform { lo, hi } => format!("uniform:a={lo},b={hi}"),
            Family::InverseWeibull { rate } => format!("inverse_weibull_corrected:c={rate}"),
            Family::Transform(tf) => format!(
                "transform:T={},tau={},c={}",
                tf.transform.label(),
                tf.tau,
                tf.rate
            ),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        match &self.family {
            Family::Uniform { lo, hi } => (x - lo) / (hi - lo),
            Family::InverseWeibull { rate } => (-rate / x.sqrt()).exp(),
            _ => -(-self.hazard(x)).exp_m1(),
        }
    }

    /// Survival function `1 - F(x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 1.0;
        }
        if x >= self.hi {
            return 0.0;
        }
        match &self.family {
            Family::Uniform { lo, hi } => (hi - x) / (hi - lo),
            Family::InverseWeibull { rate } => -(-rate / x.sqrt()).exp_m1(),
            _ => (-self.hazard(x)).exp(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return 0.0;
        }
        match &self.family {
            Family::ShiftedExponential { rate, origin } => rate * (-rate * (x - origin)).exp(),
            Family::Weibull { rate, shape } => {
                rate * shape * x.powf(shape - 1.0) * (-rate * x.powf(*shape)).exp()
            }
            Family::Pareto { scale, rate } => rate / x * (scale / x).powf(*rate),
            Family::Uniform { lo, hi } => 1.0 / (hi - lo),
            Family::InverseWeibull { rate } => 0.5 * rate * x.powf(-1.5) * (-rate / x.sqrt()).exp(),
            Family::Transform(tf) => {
                tf.rate * tf.transform.deriv_raw(1, x) * (-tf.rate * (tf.apply(x) - tf.tau)).exp()
            }
        }
    }

    /// `R(x) = -ln(1 - F(x))`.
    pub fn hazard(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return f64::INFINITY;
        }
        match &self.family {
            Family::ShiftedExponential { rate, origin } => rate * (x - origin),
            Family::Weibull { rate, shape } => rate * x.powf(*shape),
            Family::Pareto { scale, rate } => rate * (x / scale).ln(),
            Family::Uniform { lo, hi } => ((hi - lo) / (hi - x)).ln(),
            Family::InverseWeibull { rate } => -(-(-rate / x.sqrt()).exp_m1()).ln(),
            Family::Transform(tf) => tf.rate * (tf.apply(x) - tf.tau),
        }
    }

    /// `R'(x) = f(x) / (1 - F(x))`.
    pub fn hazard_prime(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return 0.0;
        }
        match &self.family {
            Family::ShiftedExponential { rate, .. } => *rate,
            Family::Weibull { rate, shape } => rate * shape * x.powf(shape - 1.0),
            Family::Pareto { rate, .. } => rate / x,
            Family::Uniform { hi, .. } => 1.0 / (hi - x),
            Family::InverseWeibull { rate } => {
                let z = rate / x.sqrt();
                0.5 * rate * x.powf(-1.5) / z.exp_m1()
            }
            Family::Transform(tf) => tf.rate * tf.transform.deriv_raw(1, x),
        }
    }

    /// The point `x` with `R(x) = gamma`, for `gamma >= 0`.
    pub fn hazard_inverse(&self, gamma: f64) -> f64 {
        if gamma <= 0.0 {
            return self.lo;
        }
        if gamma == f64::INFINITY {
            return self.hi;
        }
        match &self.family {
            Family::ShiftedExponential { rate, origin } => origin + gamma / rate,
            Family::Weibull { rate, shape } => (gamma / rate).powf(1.0 / shape),
            Family::Pareto { scale, rate } => scale * (gamma / rate).exp(),
            Family::Uniform { lo, hi } => hi - (hi - lo) * (-gamma).exp(),
            Family::InverseWeibull { rate } => {
                let log_cdf = (-(-gamma).exp_m1()).ln();
                (rate / log_cdf).powi(2)
            }
            Family::Transform(tf) => {
                let target = tf.tau + gamma / tf.rate;
                match &tf.inverse {
                    Some(inv) => inv(target),
                    None => self.bisect_transform(tf, target),
                }
            }
        }
    }

    fn bisect_transform(&self, tf: &TransformFamily, target: f64) -> f64 {
        let (lo, hi) = (self.lo, self.hi);
        let mut a = if lo.is_finite() { lo } else { -1.0 };
        if !lo.is_finite() {
            let mut width = 1.0;
            while tf.apply(a) > target && a.is_finite() {
                width *= 2.0;
                a = -width;
            }
        }
        let mut b = if hi.is_finite() {
            hi
        } else {
            let scale = a.abs().max(1.0);
            let mut width = scale;
            let mut b = a + width;
            while tf.apply(b) < target && b.is_finite() {
                width *= 2.0;
                b = a + width;
            }
            b
        };
        for _ in 0..BISECTION_MAX_ITER {
            let mid = 0.5 * (a + b);
            if b - a <= BISECTION_TOL * a.abs().max(1.0) || mid <= a || mid >= b {
                break;
            }
            if tf.apply(mid) < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }

    /// `F^-1(p)`; returns the support endpoints for `p <= 0` or `p >= 1`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.lo;
        }
        if p >= 1.0 {
            return self.hi;
        }
        match &self.family {
            Family::ShiftedExponential { rate, origin } => origin - (-p).ln_1p() / rate,
            Family::Weibull { rate, shape } => (-(-p).ln_1p() / rate).powf(1.0 / shape),
            Family::Pareto { scale, rate } => scale * (1.0 - p).powf(-1.0 / rate),
            Family::Uniform { lo, hi } => lo + p * (hi - lo),
            Family::InverseWeibull { rate } => (rate / p.ln()).powi(2),
            Family::Transform(_) => self.hazard_inverse(-(-p).ln_1p()),
        }
    }

    /// `count` i.i.d. draws by inverse-transform sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count)
            .map(|_| {
                let p: f64 = rng.sample(Open01);
                self.quantile(p)
            })
            .collect()
    }
}

fn parse_params(body: &str) -> Result<Vec<(String, f64)>> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',')
        .map(|pair| {
            let (key, value) = pair.split_once('=').ok_or_else(|| Error::Parse {
                what: "distribution parameter".into(),
                message: format!("expected key=value, got {pair:?}"),
            })?;
            let value: f64 = value.trim().parse().map_err(|_| Error::Parse {
                what: "distribution parameter".into(),
                message: format!("{value:?} is not a number"),
            })?;
            Ok((key.trim().to_string(), value))
        })
        .collect()
}

impl FromStr for DistributionModel {
    type Err = Error;

    /// Parses `exp:c=1,l0=0`, `weibull:c=1,alpha=2`, `pareto:a=1,c=2`,
    /// `uniform:a=0,b=1` or `invweibull:c=1`. Omitted parameters take the
    /// values shown.
    fn from_str(spec: &str) -> Result<Self> {
        let (tag, body) = spec.split_once(':').unwrap_or((spec, ""));
        let tag = tag.trim();
        let params = parse_params(body)?;
        let allowed: &[(&str, f64)] = match tag {
            "exp" => &[("c", 1.0), ("l0", 0.0)],
            "weibull" => &[("c", 1.0), ("alpha", 2.0)],
            "pareto" => &[("a", 1.0), ("c", 2.0)],
            "uniform" => &[("a", 0.0), ("b", 1.0)],
            "invweibull" => &[("c", 1.0)],
            other => {
                return Err(Error::Parse {
                    what: "distribution".into(),
                    message: format!("unknown family {other:?}"),
                })
            }
        };
        let mut values: Vec<f64> = allowed.iter().map(|(_, d)| *d).collect();
        for (key, value) in params {
            let slot = allowed
                .iter()
                .position(|(name, _)| *name == key)
                .ok_or_else(|| Error::Parse {
                    what: "distribution".into(),
                    message: format!("family {tag} has no parameter {key:?}"),
                })?;
            values[slot] = value;
        }
        match tag {
            "exp" => Self::shifted_exponential(values[0], values[1]),
            "weibull" => Self::weibull(values[0], values[1]),
            "pareto" => Self::pareto(values[0], values[1]),
            "uniform" => Self::uniform(values[0], values[1]),
            _ => Self::inverse_weibull_corrected(values[0]),
        }
    }
}
