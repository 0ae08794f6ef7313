//! Both sides of the identities: they agree under the shifted exponential
//! law, disagree elsewhere, and every registered scenario meets its
//! expectation.

use proptest::prelude::*;
use recordreg::regression::{
    closed_form_rhs, cond_expect_mc, residual, IdentityVariant, RegressionIdentity,
};
use recordreg::suite::{
    all_scenarios, scenario_arithmetic_mean, scenario_by_name, Expectation, Verdict,
};
use recordreg::{stream_rng, ConditioningContext, DerivableFunction, DistributionModel};

const POINTS: [(f64, f64); 3] = [(2.0, 3.0), (2.0, 5.0), (3.0, 6.0)];

fn exponential_laws() -> Vec<(f64, f64, DistributionModel)> {
    let mut out = Vec::new();
    for c in [0.5, 1.0, 2.0] {
        for l0 in [0.0, 1.0] {
            out.push((
                c,
                l0,
                DistributionModel::shifted_exponential(c, l0).unwrap(),
            ));
        }
    }
    out
}

#[test]
fn exponential_identity_for_every_h() {
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for (c, l0, d) in exponential_laws() {
        for k in 1..=4 {
            for r in 1..=4 {
                let hs = [
                    DerivableFunction::power_normalized(k + r).unwrap(),
                    DerivableFunction::plain_reciprocal(),
                    DerivableFunction::double_sqrt(),
                ];
                for h in hs {
                    for (a, b) in POINTS {
                        let ctx = ConditioningContext::minimal(k, r, l0 + a, l0 + b).unwrap();
                        let ident = RegressionIdentity::standard(h.clone(), k, r).unwrap();
                        let row = residual(&d, &ctx, &ident).unwrap();
                        let scale = row.rhs.abs().max(1.0);
                        assert!(
                            row.residual.abs() <= 1e-8 * scale,
                            "c={c} l0={l0} {} k={k} r={r}: {row:?}",
                            h.label()
                        );
                        worst = worst.max(row.residual.abs() / scale);
                        rows += 1;
                    }
                }
            }
        }
    }
    assert_eq!(rows, 6 * 16 * 3 * 3);
    println!("worst scaled residual {worst:e} over {rows} rows");
}

#[test]
fn shifted_identity_under_exponential() {
    for (_, l0, d) in exponential_laws() {
        for k in 2..=4 {
            for r in 1..=3 {
                let h = DerivableFunction::plain_reciprocal();
                let ident = RegressionIdentity::shifted_prime(h, k, r).unwrap();
                let ctx = ConditioningContext::minimal(k, r, l0 + 1.5, l0 + 4.0).unwrap();
                let row = residual(&d, &ctx, &ident).unwrap();
                assert!(
                    row.residual.abs() <= 1e-8 * row.rhs.abs().max(1.0),
                    "{row:?}"
                );
            }
        }
    }
}

#[test]
fn identity_fails_away_from_the_exponential() {
    let laws = [
        (
            DistributionModel::uniform(0.0, 1.0).unwrap(),
            [(0.2, 0.5), (0.3, 0.8)],
        ),
        (
            DistributionModel::pareto(1.0, 2.0).unwrap(),
            [(1.5, 3.0), (2.0, 6.0)],
        ),
    ];
    for (d, points) in laws {
        let mut worst: f64 = 0.0;
        for (k, r) in [(1, 1), (2, 1), (2, 3)] {
            for (u, v) in points {
                let ctx = ConditioningContext::minimal(k, r, u, v).unwrap();
                let h = DerivableFunction::power_normalized(k + r).unwrap();
                let ident = RegressionIdentity::standard(h, k, r).unwrap();
                worst = worst.max(residual(&d, &ctx, &ident).unwrap().residual.abs());
            }
        }
        assert!(worst > 1e-3, "{}: {worst}", d.label());
    }
}

#[test]
fn quadrature_and_monte_carlo_agree() {
    let d = DistributionModel::shifted_exponential(1.0, 0.0).unwrap();
    for (i, (k, r, u, v)) in [(1, 1, 0.5, 2.0), (2, 3, 1.0, 5.0), (3, 2, 2.0, 6.0)]
        .into_iter()
        .enumerate()
    {
        let ctx = ConditioningContext::minimal(k, r, u, v).unwrap();
        let h = DerivableFunction::plain_reciprocal();
        let ident = RegressionIdentity::standard(h.clone(), k, r).unwrap();
        let quad = residual(&d, &ctx, &ident).unwrap().lhs;
        let order = ident.lhs_order();
        let mut rng = stream_rng(5, "mc-agreement", i as u64);
        let mc =
            cond_expect_mc(&d, &ctx, |t| h.deriv(order, t).unwrap(), &mut rng, 50_000).unwrap();
        assert!(
            (mc.mean - quad).abs() <= 4.0 * mc.std_error,
            "k={k} r={r}: {} vs {quad} (se {})",
            mc.mean,
            mc.std_error
        );
    }
}

#[test]
fn arithmetic_mean_reduction_at_k1() {
    let g = DerivableFunction::new("y^2", (0.0, f64::INFINITY), 1, |m, y| {
        if m == 0 {
            y * y
        } else {
            2.0 * y
        }
    });
    let s = scenario_arithmetic_mean(g, 1, 1.5).unwrap();
    for ctx in &s.grid {
        let got = s.kernel_rhs(ctx, IdentityVariant::Standard).unwrap();
        let exact = 0.5 * (ctx.u * ctx.u + ctx.v * ctx.v);
        assert!(((got - exact) / exact).abs() <= 1e-12);
    }
    let report = s.run(1);
    assert_eq!(report.verdict, Verdict::Holds);
}

#[test]
fn registered_scenarios_meet_expectations() {
    for s in all_scenarios().unwrap() {
        let report = s.run(3);
        assert!(
            report.failures.is_empty(),
            "{}: {:?}",
            s.name,
            report.failures
        );
        match s.expected {
            Expectation::Holds => assert!(
                s.monte_carlo.is_some() || report.max_abs_residual <= 1e-6,
                "{}: {:e}",
                s.name,
                report.max_abs_residual
            ),
            Expectation::Fails => assert!(
                report.rows.iter().any(|r| r.residual.abs() > 1e-3),
                "{}",
                s.name
            ),
        }
        assert!(report.meets_expectation(), "{}: {}", s.name, report.verdict);
    }
}

#[test]
fn transform_space_agrees_with_direct_law() {
    let names = [
        "arithmetic-mean",
        "geometric-mean",
        "harmonic-mean",
        "weibull-example",
        "pareto-example",
    ];
    for name in names {
        for s in scenario_by_name(name).unwrap() {
            for ctx in &s.grid {
                for &variant in &s.variants {
                    let direct = s.lhs_quadrature(ctx, variant).unwrap();
                    let mapped = s.lhs_via_transform_space(ctx, variant).unwrap();
                    assert!(
                        (direct - mapped).abs() <= 1e-8 * direct.abs().max(1.0),
                        "{name} {ctx:?}: {direct} vs {mapped}"
                    );
                }
            }
        }
    }
}

fn power_rhs(k: usize, r: usize, u: f64, v: f64) -> f64 {
    let h = DerivableFunction::power_normalized(k + r).unwrap();
    closed_form_rhs(&RegressionIdentity::standard(h, k, r).unwrap(), u, v).unwrap()
}

fn weighted_mean(k: usize, r: usize, u: f64, v: f64) -> f64 {
    let (kf, rf) = (k as f64, r as f64);
    (rf * u + kf * v) / (kf + rf)
}

/// Relative accuracy of the power right-hand side decays with `k + r` as
/// the recurrence divides by `v - u` once per order.
#[test]
fn power_rhs_on_the_grids() {
    let mut points: Vec<(f64, f64)> = Vec::new();
    for l0 in [0.0, 1.0] {
        points.extend(POINTS.iter().map(|&(a, b)| (l0 + a, l0 + b)));
    }
    let g = [0.5, 1.0, 2.0, 5.0];
    for a in 0..g.len() {
        points.extend(g[a + 1..].iter().map(|&b| (g[a], b)));
    }
    for k in 1..=5 {
        for r in 1..=5 {
            let tol = if k + r <= 7 { 1e-12 } else { 1e-9 };
            for &(u, v) in &points {
                let got = power_rhs(k, r, u, v);
                let exact = weighted_mean(k, r, u, v);
                assert!(
                    ((got - exact) / exact).abs() <= tol,
                    "k={k} r={r} ({u},{v}): {got} vs {exact}"
                );
            }
        }
    }
}

proptest! {
    #[test]
    fn power_rhs_is_a_weighted_mean(k in 1usize..=5, r in 1usize..=5, u in 0.1f64..5.0, ratio in 1.0f64..4.0) {
        prop_assume!(k + r <= 7);
        let v = u + ratio * u.max(1.0);
        let got = power_rhs(k, r, u, v);
        let exact = weighted_mean(k, r, u, v);
        prop_assert!(((got - exact) / exact).abs() <= 1e-12, "{got} vs {exact}");
    }

    #[test]
    fn exponential_residual_is_parameter_free(c in 0.2f64..3.0, l0 in -2.0f64..2.0, k in 1usize..4, r in 1usize..4) {
        let d = DistributionModel::shifted_exponential(c, l0).unwrap();
        let ctx = ConditioningContext::minimal(k, r, l0 + 0.7, l0 + 2.9).unwrap();
        let h = DerivableFunction::power_normalized(k + r).unwrap();
        let ident = RegressionIdentity::standard(h, k, r).unwrap();
        prop_assert!(residual(&d, &ctx, &ident).unwrap().residual.abs() <= 1e-8);
    }
}
