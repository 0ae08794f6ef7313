//! Divided differences `M(u, v) = (h(v) - h(u)) / (v - u)` and their mixed
//! partial derivatives `iMj(u, v) = d^(i+j) M / du^i dv^j`.
//!
//! The mixed partials are evaluated with the exact recurrences obtained by
//! differentiating `(v - u) M(u, v) = h(v) - h(u)`:
//!
//! ```text
//! M_j  = (h^(j)(v) - j M_{j-1}) / (v - u)
//! jM   = (j {j-1}M - h^(j)(u)) / (v - u)
//! iMj  = (i {i-1}M_j - j iM_{j-1}) / (v - u)      (i, j >= 1)
//! ```
//!
//! [`mixed_deriv_fd`] is an independent oracle that never touches the
//! recurrences: it differentiates [`divided_diff`] numerically with a
//! tensor-product central stencil and Richardson extrapolation.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest argument for which factorials and falling factorials are exact.
pub const MAX_EXACT_ORDER: usize = 20;

type Tower = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// `n!` in exact integer arithmetic.
pub fn factorial(n: usize) -> Result<u128> {
    falling_factorial(n, n)
}

/// The falling factorial `(x)_n = x (x - 1) ... (x - n + 1)`, with `(x)_0 = 1`.
pub fn falling_factorial(x: usize, n: usize) -> Result<u128> {
    let worst = x.max(n);
    if worst > MAX_EXACT_ORDER {
        return Err(Error::OrderTooHigh {
            order: worst,
            max: MAX_EXACT_ORDER,
        });
    }
    if n > x {
        return Ok(0);
    }
    Ok(((x - n + 1)..=x).map(|v| v as u128).product())
}

/// Falling factorial of a real argument. Used for fractional powers.
pub fn falling_factorial_real(x: f64, n: usize) -> f64 {
    (0..n).map(|i| x - i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn sign(power: usize) -> f64 {
    if power.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// A real function together with its tower of derivatives on an open interval.
#[derive(Clone)]
pub struct DerivableFunction {
    label: String,
    tower: Tower,
    max_order: usize,
    lo: f64,
    hi: f64,
}

impl fmt::Debug for DerivableFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DerivableFunction")
            .field("label", &self.label)
            .field("max_order", &self.max_order)
            .field("domain", &(self.lo, self.hi))
            .finish()
    }
}

impl DerivableFunction {
    /// Wraps an analytic derivative tower `tower(m, x) = h^(m)(x)`.
    pub fn new<F>(label: impl Into<String>, domain: (f64, f64), max_order: usize, tower: F) -> Self
    where
        F: Fn(usize, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            tower: Arc::new(tower),
            max_order,
            lo: domain.0,
            hi: domain.1,
        }
    }

    /// `h(x) = x^p / p!`, so that `h^(p-1)(x) = x`.
    pub fn power_normalized(p: usize) -> Result<Self> {
        let mut inv_fact = vec![0.0; p + 1];
        for (m, slot) in inv_fact.iter_mut().enumerate() {
            *slot = 1.0 / factorial(p - m)? as f64;
        }
        Ok(Self::new(
            format!("power_normalized({p})"),
            (f64::NEG_INFINITY, f64::INFINITY),
            MAX_EXACT_ORDER,
            move |m, x| {
                if m > p {
                    0.0
                } else {
                    x.powi((p - m) as i32) * inv_fact[m]
                }
            },
        ))
    }

    /// `h(x) = (-1)^k / (k! x)` on `(0, inf)`, so that `h^(k)(x) = x^-(k+1)`.
    pub fn neg_reciprocal(k: usize) -> Result<Self> {
        let k_fact = factorial(k)? as f64;
        let mut m_fact = Vec::with_capacity(MAX_EXACT_ORDER + 1);
        for m in 0..=MAX_EXACT_ORDER {
            m_fact.push(factorial(m)? as f64);
        }
        Ok(Self::new(
            format!("neg_reciprocal({k})"),
            (0.0, f64::INFINITY),
            MAX_EXACT_ORDER,
            move |m, x| sign(k + m) * m_fact[m] / k_fact * x.powi(-(m as i32 + 1)),
        ))
    }

    /// `h(x) = 2 sqrt(x)` on `(0, inf)`, so that `h'(x) = x^-1/2`.
    pub fn double_sqrt() -> Self {
        Self::new(
            "double_sqrt",
            (0.0, f64::INFINITY),
            MAX_EXACT_ORDER,
            |m, x| 2.0 * falling_factorial_real(0.5, m) * x.powf(0.5 - m as f64),
        )
    }

    /// `h(x) = -1/x` on `(0, inf)`.
    pub fn plain_reciprocal() -> Self {
        let m_fact: Vec<f64> = (0..=MAX_EXACT_ORDER)
            .map(|m| (1..=m).map(|v| v as f64).product())
            .collect();
        Self::new(
            "plain_reciprocal",
            (0.0, f64::INFINITY),
            MAX_EXACT_ORDER,
            move |m, x| sign(m + 1) * m_fact[m] * x.powi(-(m as i32 + 1)),
        )
    }

    /// An arbitrary evaluator whose derivatives up to `fd_orders` come from
    /// extrapolated central finite differences.
    pub fn user<F>(label: impl Into<String>, domain: (f64, f64), f: F, fd_orders: usize) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (lo, hi) = domain;
        Self::new(label, domain, fd_orders, move |m, x| {
            central_difference(&f, m, x, lo, hi)
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn check_domain(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::DomainError {
                x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    pub fn check_order(&self, order: usize) -> Result<()> {
        if order > self.max_order {
            Err(Error::OrderTooHigh {
                order,
                max: self.max_order,
            })
        } else {
            Ok(())
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.deriv(0, x)
    }

    pub fn deriv(&self, order: usize, x: f64) -> Result<f64> {
        self.check_order(order)?;
        self.check_domain(x)?;
        Ok((self.tower)(order, x))
    }

    /// Unchecked evaluation for inner loops whose arguments were validated upstream.
    pub(crate) fn deriv_raw(&self, order: usize, x: f64) -> f64 {
        (self.tower)(order, x)
    }

    /// The derivative `h'` as a function in its own right, one order shorter.
    pub fn derivative(&self) -> Result<Self> {
        self.check_order(1)?;
        let tower = Arc::clone(&self.tower);
        Ok(Self {
            label: format!("d/dx {}", self.label),
            tower: Arc::new(move |m, x| tower(m + 1, x)),
            max_order: self.max_order - 1,
            lo: self.lo,
            hi: self.hi,
        })
    }
}

/// Central difference of order `m` at `x`, extrapolated by Ridders' method
/// from a wide starting step down through steps shrinking by 1.2.
fn central_difference<F: Fn(f64) -> f64>(f: &F, m: usize, x: f64, lo: f64, hi: f64) -> f64 {
    if m == 0 {
        return f(x);
    }
    let half = m as f64 / 2.0;
    let room = (x - lo).min(hi - x);
    let step0 = (0.5 * x.abs().max(1.0)).min(0.5 * room / half);
    let stencil = |step: f64| -> f64 {
        let sum: f64 = (0..=m)
            .map(|l| sign(l) * binomial(m, l) * f(x + (half - l as f64) * step))
            .sum();
        sum / step.powi(m as i32)
    };
    const LEVELS: usize = 10;
    const SHRINK2: f64 = 1.44;
    let mut table = [[0.0f64; LEVELS]; LEVELS];
    let mut step = step0;
    table[0][0] = stencil(step);
    let mut best = table[0][0];
    let mut err = f64::INFINITY;
    for col in 1..LEVELS {
        step /= 1.2;
        table[0][col] = stencil(step);
        let mut fac = SHRINK2;
        for row in 1..=col {
            table[row][col] = (table[row - 1][col] * fac - table[row - 1][col - 1]) / (fac - 1.0);
            fac *= SHRINK2;
            let e = (table[row][col] - table[row - 1][col])
                .abs()
                .max((table[row][col] - table[row - 1][col - 1]).abs());
            if e <= err {
                err = e;
                best = table[row][col];
            }
        }
        if (table[col][col] - table[col - 1][col - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    best
}

/// Smallest admissible separation `|v - u|` for evaluating `M(u, v)`.
pub fn diagonal_threshold(u: f64, v: f64) -> f64 {
    1e-6 * 1f64.max(u.abs()).max(v.abs())
}

fn check_separated(u: f64, v: f64) -> Result<()> {
    let threshold = diagonal_threshold(u, v);
    if (v - u).abs() < threshold || u.is_nan() || v.is_nan() {
        return Err(Error::DiagonalTooClose { u, v, threshold });
    }
    Ok(())
}

/// The divided difference `M(u, v) = (h(v) - h(u)) / (v - u)`.
pub fn divided_diff(f: &DerivableFunction, u: f64, v: f64) -> Result<f64> {
    f.check_domain(u)?;
    f.check_domain(v)?;
    check_separated(u, v)?;
    Ok(raw_divided_diff(f, u, v))
}

fn raw_divided_diff(f: &DerivableFunction, u: f64, v: f64) -> f64 {
    (f.deriv_raw(0, v) - f.deriv_raw(0, u)) / (v - u)
}

/// Orders `(i, j)` of `d^(i+j) M / du^i dv^j` at the point `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedDiffRequest {
    pub i: usize,
    pub j: usize,
    pub u: f64,
    pub v: f64,
}

impl MixedDiffRequest {
    pub const fn new(i: usize, j: usize, u: f64, v: f64) -> Self {
        Self { i, j, u, v }
    }
}

/// All mixed partials `aMb(u, v)` for `a <= i`, `b <= j`, filled bottom-up.
#[derive(Debug, Clone)]
pub struct MixedDiffTable {
    cols: usize,
    values: Vec<f64>,
}

impl MixedDiffTable {
    pub fn compute(f: &DerivableFunction, u: f64, v: f64, i: usize, j: usize) -> Result<Self> {
        f.check_order(i + j)?;
        f.check_domain(u)?;
        f.check_domain(v)?;
        check_separated(u, v)?;

        let cols = j + 1;
        let mut values = vec![0.0; (i + 1) * cols];
        let gap = v - u;
        values[0] = raw_divided_diff(f, u, v);
        for b in 1..=j {
            values[b] = (f.deriv_raw(b, v) - b as f64 * values[b - 1]) / gap;
        }
        for a in 1..=i {
            let row = a * cols;
            let prev = (a - 1) * cols;
            values[row] = (a as f64 * values[prev] - f.deriv_raw(a, u)) / gap;
            for b in 1..=j {
                values[row + b] =
                    (a as f64 * values[prev + b] - b as f64 * values[row + b - 1]) / gap;
            }
        }
        Ok(Self { cols, values })
    }

    /// `aMb(u, v)`, or `None` outside the computed rectangle.
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        if b >= self.cols {
            return None;
        }
        self.values.get(a * self.cols + b).copied()
    }
}

/// `iMj(u, v)` through the recurrences.
pub fn mixed_deriv(f: &DerivableFunction, req: MixedDiffRequest) -> Result<f64> {
    let table = MixedDiffTable::compute(f, req.u, req.v, req.i, req.j)?;
    Ok(table
        .get(req.i, req.j)
        .expect("corner lies inside the table"))
}

const RIDDERS_SHRINK: f64 = 1.15;
const RIDDERS_LEVELS: usize = 14;
const RIDDERS_SAFE: f64 = 2.0;

/// Finite-difference estimate of `iMj(u, v)` taken directly on
/// [`divided_diff`], extrapolated from `step` downwards.
///
/// The stencil extends `i/2 * step` around `u` and `j/2 * step` around `v`.
pub fn mixed_deriv_fd(f: &DerivableFunction, req: MixedDiffRequest, step: f64) -> Result<f64> {
    mixed_deriv_fd_steps(f, req, step, step)
}

/// As [`mixed_deriv_fd`] with separate starting steps along `u` and `v`.
/// Both shrink by the same factor during extrapolation.
pub fn mixed_deriv_fd_steps(
    f: &DerivableFunction,
    req: MixedDiffRequest,
    step_u: f64,
    step_v: f64,
) -> Result<f64> {
    let MixedDiffRequest { i, j, u, v } = req;
    if i + j == 0 {
        return divided_diff(f, u, v);
    }
    for step in [step_u, step_v] {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::ParamError(format!(
                "finite-difference step {step} must be positive"
            )));
        }
    }
    let reach_u = i as f64 / 2.0 * step_u;
    let reach_v = j as f64 / 2.0 * step_v;
    for x in [u - reach_u, u + reach_u, v - reach_v, v + reach_v] {
        f.check_domain(x)?;
    }
    let (near_u, near_v) = if u < v {
        (u + reach_u, v - reach_v)
    } else {
        (u - reach_u, v + reach_v)
    };
    if (near_v - near_u) * (v - u).signum() <= diagonal_threshold(near_u, near_v) {
        return Err(Error::StencilCrossesDiagonal {
            u,
            v,
            step: step_u.max(step_v),
        });
    }

    let wu: Vec<f64> = (0..=i).map(|a| sign(a) * binomial(i, a)).collect();
    let wv: Vec<f64> = (0..=j).map(|b| sign(b) * binomial(j, b)).collect();
    let stencil = |t: f64| -> f64 {
        let (su, sv) = (step_u * t, step_v * t);
        let mut acc = 0.0;
        for (a, ca) in wu.iter().enumerate() {
            let x = u + (i as f64 / 2.0 - a as f64) * su;
            for (b, cb) in wv.iter().enumerate() {
                let y = v + (j as f64 / 2.0 - b as f64) * sv;
                acc += ca * cb * raw_divided_diff(f, x, y);
            }
        }
        acc / (su.powi(i as i32) * sv.powi(j as i32))
    };

    let mut table = [[0.0f64; RIDDERS_LEVELS]; RIDDERS_LEVELS];
    let mut t = 1.0;
    table[0][0] = stencil(t);
    let mut best = table[0][0];
    let mut err = f64::INFINITY;
    let shrink2 = RIDDERS_SHRINK * RIDDERS_SHRINK;
    for col in 1..RIDDERS_LEVELS {
        t /= RIDDERS_SHRINK;
        table[0][col] = stencil(t);
        let mut fac = shrink2;
        for row in 1..=col {
            table[row][col] = (table[row - 1][col] * fac - table[row - 1][col - 1]) / (fac - 1.0);
            fac *= shrink2;
            let e = (table[row][col] - table[row - 1][col])
                .abs()
                .max((table[row][col] - table[row - 1][col - 1]).abs());
            if e <= err {
                err = e;
                best = table[row][col];
            }
        }
        if (table[col][col] - table[col - 1][col - 1]).abs() >= RIDDERS_SAFE * err {
            break;
        }
    }
    Ok(best)
}

/// Starting steps `(step_u, step_v)` for [`mixed_deriv_fd_steps`]. Each axis
/// reaches at most half way to a domain boundary, and the nearest stencil
/// points keep a fifth of the gap between them. Large starting steps keep the
/// roundoff of high-order stencils low.
pub fn suggested_fd_steps(f: &DerivableFunction, req: MixedDiffRequest) -> (f64, f64) {
    let MixedDiffRequest { i, j, u, v } = req;
    let (lo, hi) = f.domain();
    let gap = (v - u).abs();
    let axis = |x: f64, reach: f64| -> f64 {
        if reach == 0.0 {
            return gap;
        }
        (0.5 * (x - lo).min(hi - x) / reach).min(gap)
    };
    let reach_u = i as f64 / 2.0;
    let reach_v = j as f64 / 2.0;
    let mut su = axis(u, reach_u);
    let mut sv = axis(v, reach_v);
    let span = reach_u * su + reach_v * sv;
    if span > 0.8 * gap {
        let scale = 0.8 * gap / span;
        su *= scale;
        sv *= scale;
    }
    (su, sv)
}

/// [`mixed_deriv_fd_steps`] at [`suggested_fd_steps`].
pub fn mixed_deriv_fd_auto(f: &DerivableFunction, req: MixedDiffRequest) -> Result<f64> {
    let (su, sv) = suggested_fd_steps(f, req);
    mixed_deriv_fd_steps(f, req, su, sv)
}
