use std::io::Write;

use anyhow::{anyhow, bail, Context, Result};

use recordreg::checks::{self, CHECK_NAMES};
use recordreg::regression::{closed_form_rhs, IdentityVariant, RegressionIdentity};
use recordreg::report::{render_checks, render_reports, Cell, Format, SimulationReport};
use recordreg::simulate;
use recordreg::stats::{harmonic_number, ks_critical_two_sample, ks_two_sample, SampleStats};
use recordreg::suite::{
    self, quantile_grid, GridSpec, HTemplate, ResidualReport, Scenario, Thresholds,
    DEFAULT_QUANTILE_PAIRS, SCENARIO_NAMES,
};
use recordreg::{ConditioningContext, DerivableFunction, DistributionModel, DEFAULT_SEED};

use crate::config::{parse_list, parse_pairs, ConfigFile};
use crate::{Cli, Command, DiagnoseArgs, GridArgs, SimArgs};

const DEFAULT_DIST: &str = "exp:c=1,l0=0";

struct Session {
    cfg: ConfigFile,
    seed: u64,
    format: Format,
    out: Option<std::path::PathBuf>,
    thresholds: Option<Thresholds>,
}

impl Session {
    fn new(cli: &Cli) -> Result<Self> {
        let g = &cli.global;
        let cfg = match &g.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let seed = cfg.pick_or(g.seed, "seed", DEFAULT_SEED)?;
        let format: Format = cfg
            .pick_or(g.format.clone(), "format", "json".to_string())?
            .parse()?;
        let out = cfg.pick(g.out.as_ref().map(|p| p.display().to_string()), "out")?;
        let hold = cfg.pick(g.tol, "tol")?;
        let fail = cfg.pick(g.fail_floor, "fail-floor")?;
        let thresholds = match (hold, fail) {
            (None, None) => None,
            (hold, fail) => {
                let d = Thresholds::default();
                let hold = hold.unwrap_or(d.hold);
                Some(Thresholds::new(hold, fail.unwrap_or(d.fail.max(hold)))?)
            }
        };
        Ok(Self {
            cfg,
            seed,
            format,
            out: out.map(Into::into),
            thresholds,
        })
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => {
                std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                stdout.flush()?;
                Ok(())
            }
        }
    }

    fn dist(&self, flag: Option<String>) -> Result<DistributionModel> {
        let spec = self.cfg.pick_or(flag, "dist", DEFAULT_DIST.to_string())?;
        Ok(spec.parse()?)
    }

    fn apply_thresholds(&self, s: Scenario) -> Scenario {
        match self.thresholds {
            Some(t) => s.with_thresholds(t),
            None => s,
        }
    }
}

pub fn run(cli: Cli) -> Result<u8> {
    let cx = Session::new(&cli)?;
    match cli.command {
        Command::Verify { scenario } => verify(&cx, scenario),
        Command::ResidualGrid(args) => residual_grid(&cx, args),
        Command::Simulate(args) => simulate_cmd(&cx, args),
        Command::Diagnose(args) => diagnose(&cx, args),
        Command::Means => means(&cx),
        Command::Check { name } => check(&cx, name),
        Command::Scenarios => {
            cx.emit(&(SCENARIO_NAMES.join("\n") + "\n"))?;
            Ok(0)
        }
    }
}

fn report_status(reports: &[ResidualReport]) -> u8 {
    for r in reports {
        let expected = r.expected.map_or("-", |e| e.as_str());
        eprintln!(
            "{:<40} {:<12} expected {:<6} max |residual| {:.3e}",
            r.scenario, r.verdict, expected, r.max_abs_residual
        );
        for f in &r.failures {
            eprintln!(
                "  row n={} k={} r={} u={} v={} failed: {}",
                f.ctx.n, f.ctx.k, f.ctx.r, f.ctx.u, f.ctx.v, f.message
            );
        }
    }
    if reports.iter().all(ResidualReport::meets_expectation) {
        0
    } else {
        2
    }
}

fn run_named(cx: &Session, names: &[String]) -> Result<u8> {
    let mut scenarios = Vec::new();
    for name in names {
        for s in suite::scenario_by_name(name)? {
            scenarios.push(cx.apply_thresholds(s));
        }
    }
    let reports = suite::run_scenarios(&scenarios, cx.seed);
    cx.emit(&render_reports(&reports, cx.format)?)?;
    Ok(report_status(&reports))
}

fn verify(cx: &Session, flags: Vec<String>) -> Result<u8> {
    let flag = (!flags.is_empty()).then(|| flags.join(","));
    let names: Vec<String> = match cx.cfg.pick(flag, "scenario")? {
        Some(list) => parse_list(&list, "scenario")?,
        None => SCENARIO_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    run_named(cx, &names)
}

fn means(cx: &Session) -> Result<u8> {
    let names = ["arithmetic-mean", "geometric-mean", "harmonic-mean"].map(String::from);
    run_named(cx, &names)
}

fn check(cx: &Session, flags: Vec<String>) -> Result<u8> {
    let flag = (!flags.is_empty()).then(|| flags.join(","));
    let names: Vec<String> = match cx.cfg.pick(flag, "name")? {
        Some(list) => parse_list(&list, "name")?,
        None => CHECK_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    let reports = names
        .iter()
        .map(|n| checks::check_by_name(n, cx.seed))
        .collect::<recordreg::Result<Vec<_>>>()?;
    cx.emit(&render_checks(&reports, cx.format)?)?;
    for c in &reports {
        let status = if c.passed { "pass" } else { "FAIL" };
        eprintln!(
            "{:<20} {status} max error {:.3e} (tolerance {:.0e})",
            c.name, c.max_error, c.tolerance
        );
    }
    Ok(if reports.iter().all(|c| c.passed) {
        0
    } else {
        2
    })
}

fn parse_h(spec: &str) -> Result<HTemplate> {
    let (tag, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let order = || -> Result<usize> {
        arg.parse()
            .map_err(|_| anyhow!("h spec {spec:?} needs an integer after ':'"))
    };
    Ok(match tag {
        "power" if arg.is_empty() => HTemplate::Power,
        "power" => HTemplate::Fixed(DerivableFunction::power_normalized(order()?)?),
        "reciprocal" => HTemplate::Fixed(DerivableFunction::plain_reciprocal()),
        "neg-reciprocal" => HTemplate::Fixed(DerivableFunction::neg_reciprocal(order()?)?),
        "double-sqrt" => HTemplate::Fixed(DerivableFunction::double_sqrt()),
        _ => bail!(
            "unknown h spec {spec:?}; expected power, power:P, reciprocal, neg-reciprocal:K or double-sqrt"
        ),
    })
}

fn parse_variant(spec: &str) -> Result<IdentityVariant> {
    match spec {
        "standard" => Ok(IdentityVariant::Standard),
        "shifted-prime" | "shifted_prime" => Ok(IdentityVariant::ShiftedPrime),
        other => bail!("unknown variant {other:?}; expected standard or shifted-prime"),
    }
}

fn residual_grid(cx: &Session, a: GridArgs) -> Result<u8> {
    let cfg = &cx.cfg;
    let d = cx.dist(a.dist)?;
    let ks: Vec<usize> = parse_list(&cfg.pick_or(a.k, "k", "1".into())?, "k")?;
    let rs: Vec<usize> = parse_list(&cfg.pick_or(a.r, "r", "1".into())?, "r")?;
    let n = cfg.pick(a.n, "n")?;
    let u = cfg.pick(a.u, "u")?;
    let v = cfg.pick(a.v, "v")?;
    let q = cfg.pick(a.q, "q")?;
    let h = parse_h(&cfg.pick_or(a.h, "h", "power".into())?)?;
    let variant = parse_variant(&cfg.pick_or(a.variant, "variant", "standard".into())?)?;

    let points: Vec<(f64, f64)> = match (u, v, q) {
        (Some(u), Some(v), None) => vec![(u, v)],
        (None, None, q) => {
            let pairs = match q {
                Some(q) => parse_pairs(&q, "q")?,
                None => DEFAULT_QUANTILE_PAIRS.to_vec(),
            };
            let probe = quantile_grid(&d, &pairs, &[(1, 1)])?;
            probe.iter().map(|c| (c.u, c.v)).collect()
        }
        _ => bail!("give both --u and --v, or quantile pairs with --q"),
    };
    let mut grid = Vec::new();
    for &k in &ks {
        for &r in &rs {
            for &(u, v) in &points {
                let ctx = ConditioningContext::new(n.unwrap_or(k + 1), k, r, u, v)?;
                ctx.validate_for(&d)?;
                grid.push(ctx);
            }
        }
    }
    let mut scenario = Scenario::power(
        "residual-grid",
        d,
        vec![(1, 1)],
        vec![variant],
        suite::Expectation::Holds,
    )?;
    scenario.h = h;
    scenario.grid = grid;
    let scenario = cx.apply_thresholds(scenario);
    let mut report = scenario.run(cx.seed);
    report.expected = None;
    let reports = [report];
    cx.emit(&render_reports(&reports, cx.format)?)?;
    report_status(&reports);
    Ok(0)
}

fn diagnose(cx: &Session, a: DiagnoseArgs) -> Result<u8> {
    let cfg = &cx.cfg;
    let d = cx.dist(a.dist)?;
    let mut spec = GridSpec::default();
    if let Some(q) = cfg.pick(a.q, "q")? {
        spec.quantile_pairs = parse_pairs(&q, "q")?;
    }
    if let Some(g) = cfg.pick(a.gaps, "gaps")? {
        spec.gaps = parse_pairs(&g, "gaps")?;
    }
    if let Some(t) = cx.thresholds {
        spec.thresholds = t;
    }
    let report = suite::diagnose_exponentiality(&d, &spec)?;
    let reports = [report];
    cx.emit(&render_reports(&reports, cx.format)?)?;
    report_status(&reports);
    Ok(0)
}

fn summary_cells(s: &SampleStats) -> Vec<(String, Cell)> {
    vec![
        ("count".into(), Cell::Int(s.count as u64)),
        ("mean".into(), Cell::Real(s.mean)),
        ("std_dev".into(), Cell::Real(s.std_dev)),
        ("std_error".into(), Cell::Real(s.std_error)),
        ("min".into(), Cell::Real(s.min)),
        ("max".into(), Cell::Real(s.max)),
    ]
}

fn simulate_cmd(cx: &Session, a: SimArgs) -> Result<u8> {
    let cfg = &cx.cfg;
    let what = cfg.pick_or(a.what, "what", "conditional".to_string())?;
    let d = cx.dist(a.dist)?;
    let summary_only = cfg.flag(a.summary_only, "summary-only")?;
    let mut rep = SimulationReport {
        what: what.clone(),
        parameters: vec![
            ("dist".into(), d.label()),
            ("seed".into(), cx.seed.to_string()),
        ],
        ..SimulationReport::default()
    };
    match what.as_str() {
        "conditional" => {
            let k = cfg.pick_or(a.k, "k", 1)?;
            let r = cfg.pick_or(a.r, "r", 1)?;
            let n = cfg.pick_or(a.n, "n", k + 1)?;
            let u = cfg
                .pick(a.u, "u")?
                .ok_or_else(|| anyhow!("--u is required"))?;
            let v = cfg
                .pick(a.v, "v")?
                .ok_or_else(|| anyhow!("--v is required"))?;
            let samples = cfg.pick_or(a.samples, "samples", 100_000)?;
            let ctx = ConditioningContext::new(n, k, r, u, v)?;
            ctx.validate_for(&d)?;
            let draws = simulate::conditional_draws(&d, &ctx, cx.seed, samples)?;
            let stats = SampleStats::of(&draws);
            let ident =
                RegressionIdentity::standard(DerivableFunction::power_normalized(k + r)?, k, r)?;
            let rhs = closed_form_rhs(&ident, u, v)?;
            rep.parameters.extend([
                ("n".into(), n.to_string()),
                ("k".into(), k.to_string()),
                ("r".into(), r.to_string()),
                ("u".into(), u.to_string()),
                ("v".into(), v.to_string()),
            ]);
            rep.summary = summary_cells(&stats);
            rep.summary
                .push(("exponential_mean".into(), Cell::Real(rhs)));
            rep.summary.push((
                "z_score".into(),
                Cell::Real((stats.mean - rhs) / stats.std_error),
            ));
            if !summary_only {
                rep.columns = vec!["draw".into(), "x".into()];
                rep.rows = draws
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| vec![Cell::Int(i as u64), Cell::Real(x)])
                    .collect();
            }
        }
        "records" => {
            let n = cfg.pick_or(a.n, "n", 5)?;
            let samples = cfg.pick_or(a.samples, "samples", 1000)?;
            let seqs = simulate::gamma_sequences(&d, n, cx.seed, samples)?;
            let last: Vec<f64> = seqs.iter().map(|s| s[n - 1]).collect();
            rep.parameters.push(("n".into(), n.to_string()));
            rep.summary = summary_cells(&SampleStats::of(&last));
            if !summary_only {
                rep.columns = vec!["replicate".into(), "index".into(), "x".into()];
                for (rep_i, seq) in seqs.iter().enumerate() {
                    for (i, &x) in seq.iter().enumerate() {
                        rep.rows.push(vec![
                            Cell::Int(rep_i as u64),
                            Cell::Int(i as u64 + 1),
                            Cell::Real(x),
                        ]);
                    }
                }
            }
        }
        "stream" => {
            let horizon = cfg.pick_or(a.horizon, "horizon", 1000)?;
            let samples = cfg.pick_or(a.samples, "samples", 10_000)?;
            let runs = simulate::stream_counts(&d, horizon, cx.seed, samples)?;
            let counts: Vec<f64> = runs.iter().map(|&(c, _)| c as f64).collect();
            let stats = SampleStats::of(&counts);
            let h = harmonic_number(horizon);
            rep.parameters.push(("horizon".into(), horizon.to_string()));
            rep.summary = summary_cells(&stats);
            rep.summary.push(("harmonic_number".into(), Cell::Real(h)));
            rep.summary.push((
                "z_score".into(),
                Cell::Real((stats.mean - h) / stats.std_error),
            ));
            if !summary_only {
                rep.columns = vec!["replicate".into(), "records".into(), "last".into()];
                rep.rows = runs
                    .iter()
                    .enumerate()
                    .map(|(i, &(c, last))| {
                        vec![Cell::Int(i as u64), Cell::Int(c as u64), Cell::Real(last)]
                    })
                    .collect();
            }
        }
        "x2-ks" => {
            let horizon = cfg.pick_or(a.horizon, "horizon", 1_000_000)?;
            let samples = cfg.pick_or(a.samples, "samples", 100_000)?;
            let s = simulate::second_record_samples(&d, cx.seed, samples, horizon)?;
            let stat = ks_two_sample(&s.gamma, &s.stream);
            let crit = ks_critical_two_sample(s.gamma.len(), s.stream.len());
            rep.parameters.push(("horizon".into(), horizon.to_string()));
            rep.summary = vec![
                ("gamma_draws".into(), Cell::Int(s.gamma.len() as u64)),
                ("stream_draws".into(), Cell::Int(s.stream.len() as u64)),
                ("stream_exhausted".into(), Cell::Int(s.exhausted as u64)),
                ("ks_statistic".into(), Cell::Real(stat)),
                ("ks_critical_1pct".into(), Cell::Real(crit)),
                ("consistent".into(), Cell::Int(u64::from(stat < crit))),
            ];
        }
        other => {
            bail!("unknown simulation {other:?}; expected records, stream, conditional or x2-ks")
        }
    }
    cx.emit(&rep.render(cx.format)?)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_specs() {
        assert!(matches!(parse_h("power").unwrap(), HTemplate::Power));
        match parse_h("power:5").unwrap() {
            HTemplate::Fixed(h) => assert_eq!(h.label(), "power_normalized(5)"),
            HTemplate::Power => panic!("expected a fixed h"),
        }
        assert!(parse_h("neg-reciprocal:2").is_ok());
        assert!(parse_h("double-sqrt").is_ok());
        assert!(parse_h("neg-reciprocal").is_err());
        assert!(parse_h("cosh").is_err());
        assert_eq!(
            parse_variant("shifted-prime").unwrap(),
            IdentityVariant::ShiftedPrime
        );
        assert!(parse_variant("other").is_err());
    }
}
