//! Adaptive 15-point Gauss-Legendre quadrature with recursive bisection.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const NODES: usize = 15;
pub const MAX_DEPTH: usize = 30;
const REL_TOL: f64 = 1e-12;
const ABS_TOL: f64 = 1e-13;

struct Rule {
    nodes: [f64; NODES],
    weights: [f64; NODES],
}

/// Nodes and weights on [-1, 1] by Newton iteration on P_15.
fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NODES;
        let mut nodes = [0.0; NODES];
        let mut weights = [0.0; NODES];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Rule { nodes, weights }
    })
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let r = rule();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    half * r
        .nodes
        .iter()
        .zip(r.weights.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

/// `int_a^b f(t) dt`. The interval starts as four panels; a panel is accepted
/// once its estimate and the sum over its two halves differ by less than
/// `1e-12` relative or `1e-13` absolute.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::ParamError(format!(
            "integration bounds [{a}, {b}] must be finite"
        )));
    }
    let quarter = 0.25 * (b - a);
    let mut stack: Vec<(f64, f64, usize)> = (0..4)
        .rev()
        .map(|i| {
            let lo = a + quarter * i as f64;
            let hi = if i == 3 {
                b
            } else {
                a + quarter * (i + 1) as f64
            };
            (lo, hi, 0)
        })
        .collect();
    let mut total = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let whole = panel(&f, lo, hi);
        let mid = 0.5 * (lo + hi);
        let halves = panel(&f, lo, mid) + panel(&f, mid, hi);
        if !halves.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                a: lo,
                b: hi,
                depth,
            });
        }
        let diff = (whole - halves).abs();
        if diff < REL_TOL * halves.abs() || diff < ABS_TOL {
            total += halves;
        } else if depth >= MAX_DEPTH {
            return Err(Error::QuadratureNonConvergence {
                a: lo,
                b: hi,
                depth,
            });
        } else {
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}
