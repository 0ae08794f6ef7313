//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances and runtime budgets are pinned below.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use recordreg::checks;
use recordreg::regression::{cond_expect_quadrature, IdentityVariant};
use recordreg::simulate;
use recordreg::stats::ks_two_sample;
use recordreg::suite::{
    self, diagnose_exponentiality, scenario_by_name, scenario_pareto_example, Expectation,
    GridSpec, Scenario, Verdict,
};
use recordreg::{
    mixed_deriv, ConditioningContext, DerivableFunction, DistributionModel, MixedDiffRequest,
};

const KERNEL_FD_TOL: f64 = 1e-6;
const KERNEL_FD_BUDGET: Duration = Duration::from_secs(5);
const CLOSED_FORM_TOL: f64 = 1e-10;
const CLOSED_FORM_BUDGET: Duration = Duration::from_secs(1);
const CORE_TOL: f64 = 1e-8;
const CORE_ROWS: usize = 288;
const CORE_BUDGET: Duration = Duration::from_secs(30);
const THEOREM_TOL: f64 = 1e-8;
const MC_DRAWS: usize = 1_000_000;
const MC_SIGMAS: f64 = 4.0;
const MC_BUDGET: Duration = Duration::from_secs(60);
const FALSIFY_FLOOR: f64 = 1e-3;
const REDUCTION_TOL: f64 = 1e-12;
const SCENARIO_TOL: f64 = 1e-8;
const INVARIANCE_TOL: f64 = 1e-10;
const RECORD_HORIZON: u64 = 1000;
const RECORD_REPLICATES: usize = 10_000;
const RECORD_SIGMAS: f64 = 3.0;
const X2_DRAWS: usize = 100_000;
const X2_HORIZON: u64 = 1_000_000;
/// Asymptotic 1% coefficient `sqrt(-ln(0.005) / 2)` of the KS distribution.
const KS_1PCT: f64 = 1.6276;
const SEED: u64 = 42;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fmt_err(e: impl std::fmt::Display) -> String {
    format!("error: {e}")
}

fn grid_pairs() -> Vec<(f64, f64)> {
    let g = [0.5, 1.0, 2.0, 5.0];
    let mut out = Vec::new();
    for a in 0..g.len() {
        for b in a + 1..g.len() {
            out.push((g[a], g[b]));
        }
    }
    out
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn criterion_1() -> Outcome {
    let (report, took) = timed(checks::kernel_fd);
    let report = report.map_err(fmt_err)?;
    let pairs = grid_pairs().len();
    ensure(
        report.rows.len() > 9 * pairs
            && report.max_error <= KERNEL_FD_TOL
            && took < KERNEL_FD_BUDGET,
        format!(
            "{} mixed partials, worst deviation {:.2e} (tol {KERNEL_FD_TOL:.0e}), {:.3} s",
            report.rows.len(),
            report.max_error,
            took.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let (worst, took) = timed(|| -> Result<f64, String> {
        let f = DerivableFunction::plain_reciprocal();
        let mut worst: f64 = 0.0;
        for (u, v) in grid_pairs() {
            let mut fact = 1.0;
            for j in 0..=6 {
                if j > 0 {
                    fact *= j as f64;
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let exact = sign * fact / (u * v.powi(j + 1));
                let got =
                    mixed_deriv(&f, MixedDiffRequest::new(0, j as usize, u, v)).map_err(fmt_err)?;
                worst = worst.max(((got - exact) / exact).abs());
            }
        }
        Ok(worst)
    });
    let worst = worst?;
    ensure(
        worst <= CLOSED_FORM_TOL && took < CLOSED_FORM_BUDGET,
        format!(
            "worst relative error {worst:.2e} (tol {CLOSED_FORM_TOL:.0e}), {:.3} s",
            took.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let (reports, took) = timed(|| -> Result<_, String> {
        let parts = scenario_by_name("exponential-core").map_err(fmt_err)?;
        Ok(suite::run_scenarios(&parts, SEED))
    });
    let reports = reports?;
    let rows: Vec<_> = reports.iter().flat_map(|r| &r.rows).collect();
    let failures: usize = reports.iter().map(|r| r.failures.len()).sum();
    let worst = rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    // with h = x^(k+r)/(k+r)! the right-hand side is (r u + k v) / (k + r)
    let rhs_worst = rows
        .iter()
        .map(|row| {
            let (k, r) = (row.ctx.k as f64, row.ctx.r as f64);
            (row.rhs - (r * row.ctx.u + k * row.ctx.v) / (k + r)).abs()
        })
        .fold(0.0, f64::max);
    ensure(
        rows.len() == CORE_ROWS
            && failures == 0
            && worst <= CORE_TOL
            && rhs_worst <= CORE_TOL
            && took < CORE_BUDGET,
        format!(
            "{} rows, max |residual| {worst:.2e}, rhs vs weighted mean {rhs_worst:.2e} (tol {CORE_TOL:.0e}), {:.3} s",
            rows.len(),
            took.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let d = DistributionModel::shifted_exponential(1.0, 0.0).map_err(fmt_err)?;
    let cases = [
        (2, 3, 1.0, 5.0),
        (1, 1, 0.5, 2.0),
        (3, 2, 2.0, 4.0),
        (4, 1, 1.0, 3.0),
        (2, 4, 0.25, 6.0),
    ];
    let mut worst: f64 = 0.0;
    let mut example = f64::NAN;
    for &(k, r, u, v) in &cases {
        let (kf, rf) = (k as f64, r as f64);
        let ctx = ConditioningContext::minimal(k, r, u, v).map_err(fmt_err)?;
        let lhs = cond_expect_quadrature(&d, &ctx, |t| t).map_err(fmt_err)?;
        worst = worst.max((lhs - (rf * u + kf * v) / (kf + rf)).abs());
        if (k, r, u, v) == (2, 3, 1.0, 5.0) {
            example = lhs;
        }
        if k >= 2 {
            let s = Scenario::power(
                "shifted",
                d.clone(),
                vec![(k, r)],
                vec![IdentityVariant::ShiftedPrime],
                Expectation::Holds,
            )
            .and_then(|s| s.with_points(&[(u, v)]))
            .map_err(fmt_err)?;
            let ctx = s.grid[0];
            let lhs = s
                .lhs_quadrature(&ctx, IdentityVariant::ShiftedPrime)
                .map_err(fmt_err)?;
            let rhs = s
                .kernel_rhs(&ctx, IdentityVariant::ShiftedPrime)
                .map_err(fmt_err)?;
            let exact = (rf * u + (kf - 1.0) * v) / (kf + rf - 1.0);
            worst = worst.max((lhs - exact).abs()).max((rhs - exact).abs());
        }
    }
    ensure(
        worst <= THEOREM_TOL && (example - 2.6).abs() <= THEOREM_TOL,
        format!("(2,3,1,5) -> {example:.12}, worst deviation {worst:.2e} (tol {THEOREM_TOL:.0e})"),
    )
}

fn criterion_5() -> Outcome {
    let d = DistributionModel::shifted_exponential(1.0, 0.0).map_err(fmt_err)?;
    let ctx = ConditioningContext::minimal(2, 3, 1.0, 5.0).map_err(fmt_err)?;
    let (draws, took) = timed(|| simulate::conditional_draws(&d, &ctx, SEED, MC_DRAWS));
    let draws = draws.map_err(fmt_err)?;
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let z = (mean - 2.6) / se;
    ensure(
        draws.len() == MC_DRAWS && z.abs() <= MC_SIGMAS && took < MC_BUDGET,
        format!(
            "mean {mean:.6} over {MC_DRAWS} draws, {z:+.2} SE from 2.6 (limit {MC_SIGMAS}), {:.2} s",
            took.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for name in ["uniform-falsify", "pareto-falsify"] {
        let parts = scenario_by_name(name).map_err(fmt_err)?;
        let report = parts[0].run(SEED);
        let beyond = report
            .rows
            .iter()
            .filter(|r| r.residual.abs() > FALSIFY_FLOOR)
            .count();
        ok &= beyond >= 1;
        notes.push(format!("{name}: {beyond} rows above {FALSIFY_FLOOR:.0e}"));
    }
    let diagnosed = [
        ("uniform:a=0,b=1", Verdict::Fails),
        ("pareto:a=1,c=2", Verdict::Fails),
        ("exp:c=2,l0=1", Verdict::Holds),
    ];
    for (spec, want) in diagnosed {
        let d: DistributionModel = spec.parse().map_err(fmt_err)?;
        let report = diagnose_exponentiality(&d, &GridSpec::default()).map_err(fmt_err)?;
        ok &= report.verdict == want;
        notes.push(format!("diagnose {spec}: {}", report.verdict));
    }
    ensure(ok, notes.join("; "))
}

fn criterion_7() -> Outcome {
    let geo = scenario_by_name("geometric-mean")
        .map_err(fmt_err)?
        .remove(0);
    let har = scenario_by_name("harmonic-mean")
        .map_err(fmt_err)?
        .remove(0);
    // the registered scenarios use g(y) = y^-2 and g(y) = 1/y
    let g_geo = |y: f64| y.powi(-2);
    let g_har = |y: f64| 1.0 / y;
    let mut worst_reduction: f64 = 0.0;
    for ctx in &geo.grid {
        if ctx.k != 1 {
            return Err(format!("geometric-mean context has k={}", ctx.k));
        }
        let got = geo
            .kernel_rhs(ctx, IdentityVariant::Standard)
            .map_err(fmt_err)?;
        let exact = (g_geo(ctx.u) * g_geo(ctx.v)).sqrt();
        worst_reduction = worst_reduction.max(((got - exact) / exact).abs());
    }
    for ctx in &har.grid {
        let got = har
            .kernel_rhs(ctx, IdentityVariant::Standard)
            .map_err(fmt_err)?;
        let (a, b) = (g_har(ctx.u), g_har(ctx.v));
        let exact = 2.0 * a * b / (a + b);
        worst_reduction = worst_reduction.max(((got - exact) / exact).abs());
    }
    let mut worst_scenario: f64 = 0.0;
    let mut verdicts_hold = true;
    for name in ["arithmetic-mean", "geometric-mean", "harmonic-mean"] {
        for s in scenario_by_name(name).map_err(fmt_err)? {
            let report = s.run(SEED);
            verdicts_hold &= report.failures.is_empty() && !report.rows.is_empty();
            worst_scenario = worst_scenario.max(report.max_abs_residual);
        }
    }
    ensure(
        worst_reduction <= REDUCTION_TOL && worst_scenario <= SCENARIO_TOL && verdicts_hold,
        format!(
            "reductions {worst_reduction:.2e} (tol {REDUCTION_TOL:.0e}), mean scenarios max |residual| {worst_scenario:.2e} (tol {SCENARIO_TOL:.0e})"
        ),
    )
}

fn criterion_8() -> Outcome {
    let (s, t) = (6.0, 10.0);
    let mut residuals = Vec::new();
    for a in [1.0, 2.0, 5.0] {
        let scenario = scenario_pareto_example(a, 1.0, 1)
            .and_then(|sc| sc.with_log_points(&[(s, t)]))
            .map_err(fmt_err)?;
        let report = scenario.run(SEED);
        match report.rows.as_slice() {
            [row] => residuals.push(row.residual),
            _ => {
                return Err(format!(
                    "a={a}: expected one row, got {}",
                    report.rows.len()
                ))
            }
        }
    }
    let spread = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - residuals.iter().copied().fold(f64::INFINITY, f64::min);
    let listed: Vec<String> = residuals.iter().map(|r| format!("{r:.2e}")).collect();
    ensure(
        spread <= INVARIANCE_TOL,
        format!(
            "residuals [{}] at (s,t)=(6,10), spread {spread:.2e} (tol {INVARIANCE_TOL:.0e})",
            listed.join(", ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let exp = DistributionModel::shifted_exponential(1.0, 0.0).map_err(fmt_err)?;
    let runs =
        simulate::stream_counts(&exp, RECORD_HORIZON, SEED, RECORD_REPLICATES).map_err(fmt_err)?;
    let counts: Vec<f64> = runs.iter().map(|&(c, _)| c as f64).collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let harmonic: f64 = (1..=RECORD_HORIZON).map(|i| 1.0 / i as f64).sum();
    let z = (mean - harmonic) / se;
    let mut ok = z.abs() <= RECORD_SIGMAS;
    let mut notes = vec![format!(
        "mean records {mean:.4} vs H_1000 {harmonic:.4}: {z:+.2} SE (limit {RECORD_SIGMAS})"
    )];
    for spec in ["exp:c=1,l0=0", "pareto:a=1,c=2"] {
        let d: DistributionModel = spec.parse().map_err(fmt_err)?;
        let x2 =
            simulate::second_record_samples(&d, SEED, X2_DRAWS, X2_HORIZON).map_err(fmt_err)?;
        let (na, nb) = (x2.gamma.len() as f64, x2.stream.len() as f64);
        let stat = ks_two_sample(&x2.gamma, &x2.stream);
        let crit = KS_1PCT * ((na + nb) / (na * nb)).sqrt();
        ok &= stat < crit && x2.gamma.len() == X2_DRAWS;
        notes.push(format!("{spec} X(2) KS {stat:.4} < {crit:.4}"));
    }
    ensure(ok, notes.join("; "))
}

fn run_cli(args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_recordreg"))
        .args(args)
        .output()
        .map_err(fmt_err)?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn criterion_10() -> Outcome {
    let seed = SEED.to_string();
    let mut notes = Vec::new();
    let mut ok = true;
    for format in ["json", "csv"] {
        let args = ["verify", "--seed", seed.as_str(), "--format", format];
        let (code_a, a) = run_cli(&args)?;
        let (code_b, b) = run_cli(&args)?;
        ok &= code_a == 0 && code_b == 0 && !a.is_empty() && a == b;
        notes.push(format!(
            "{format}: exit {code_a}/{code_b}, {} bytes, identical {}",
            a.len(),
            a == b
        ));
    }
    ensure(ok, notes.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("recurrences vs finite differences", criterion_1),
        ("closed form for -1/x", criterion_2),
        ("exponential identity grid", criterion_3),
        ("weighted-mean values", criterion_4),
        ("Monte Carlo conditional mean", criterion_5),
        ("falsification and diagnosis", criterion_6),
        ("mean reductions", criterion_7),
        ("Pareto scale invariance", criterion_8),
        ("record simulation sanity", criterion_9),
        ("determinism of verify", criterion_10),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let outcome =
            std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{status} {:>2} {title}: {detail}", i + 1);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
