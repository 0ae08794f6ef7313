//! The conditional law of `X(n)` against independent references: a Simpson
//! integral of its density, and the stream of i.i.d. draws.

use proptest::prelude::*;
use recordreg::records::{sample_records_gamma, stream_until_records, ConditionalLaw};
use recordreg::simulate::{conditional_draws, gamma_sequences};
use recordreg::{stream_rng, ConditioningContext, DistributionModel};

const KS_1PCT: f64 = 1.6276;
/// 1% critical value of chi-square with 9 degrees of freedom.
const CHI2_9DF_1PCT: f64 = 21.666;
const MIN_ACCEPTED: usize = 200;

/// Family and a conditioning pair well inside its support.
fn cases() -> Vec<(DistributionModel, f64, f64)> {
    vec![
        (
            DistributionModel::shifted_exponential(1.0, 0.0).unwrap(),
            1.0,
            5.0,
        ),
        (DistributionModel::weibull(1.0, 2.0).unwrap(), 0.4, 1.6),
        (DistributionModel::pareto(1.0, 2.0).unwrap(), 1.5, 6.0),
        (DistributionModel::uniform(0.0, 1.0).unwrap(), 0.2, 0.9),
    ]
}

/// Cumulative Simpson integral of `f` on `panels` equal panels of `[a, b]`,
/// sampling the endpoints from just inside the open interval.
fn cumulative_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let inset = 1e-12 * (b - a);
    let f = |x: f64| f(x.clamp(a + inset, b - inset));
    let mut out = vec![(a, 0.0)];
    let mut acc = 0.0;
    for p in 0..panels {
        let x0 = a + p as f64 * h;
        acc += h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h));
        out.push((x0 + h, acc));
    }
    out
}

fn interpolate(table: &[(f64, f64)], x: f64) -> f64 {
    let i = table
        .partition_point(|&(t, _)| t < x)
        .clamp(1, table.len() - 1);
    let ((x0, y0), (x1, y1)) = (table[i - 1], table[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[test]
fn density_integrates_to_one() {
    for (d, u, v) in cases() {
        for k in 1..=4 {
            for r in 1..=4 {
                let ctx = ConditioningContext::minimal(k, r, u, v).unwrap();
                let law = ConditionalLaw::new(&d, &ctx).unwrap();
                let total = cumulative_simpson(|t| law.density(t), u, v, 4000)
                    .last()
                    .unwrap()
                    .1;
                assert!(
                    (total - 1.0).abs() < 1e-9,
                    "{} k={k} r={r}: {total}",
                    d.label()
                );
            }
        }
    }
}

#[test]
fn closed_form_cdf_matches_integrated_density() {
    for (d, u, v) in cases() {
        for k in 1..=3 {
            for r in 1..=3 {
                let ctx = ConditioningContext::minimal(k, r, u, v).unwrap();
                let law = ConditionalLaw::new(&d, &ctx).unwrap();
                let table = cumulative_simpson(|t| law.density(t), u, v, 2000);
                for &(t, integral) in table.iter().step_by(97) {
                    assert!(
                        (law.cdf(t) - integral).abs() < 1e-9,
                        "{} k={k} r={r} t={t}",
                        d.label()
                    );
                }
            }
        }
    }
}

#[test]
fn sampler_matches_density() {
    let draws = 100_000;
    let critical = KS_1PCT / (draws as f64).sqrt();
    for (fi, (d, u, v)) in cases().into_iter().enumerate() {
        for k in 1..=3 {
            for r in 1..=3 {
                let ctx = ConditioningContext::minimal(k, r, u, v).unwrap();
                let law = ConditionalLaw::new(&d, &ctx).unwrap();
                let table = cumulative_simpson(|t| law.density(t), u, v, 4000);
                let seed = 1000 + (fi * 9 + (k - 1) * 3 + r) as u64;
                let mut xs = conditional_draws(&d, &ctx, seed, draws).unwrap();
                xs.sort_by(f64::total_cmp);
                let n = xs.len() as f64;
                let stat = xs
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        let f = interpolate(&table, x);
                        (f - i as f64 / n).max((i + 1) as f64 / n - f)
                    })
                    .fold(0.0, f64::max);
                assert!(
                    stat < critical,
                    "{} k={k} r={r}: KS {stat} >= {critical}",
                    d.label()
                );
            }
        }
    }
}

/// Outcome of the stream-based check of the Markov property.
#[derive(Debug)]
enum SpotCheck {
    Consistent { accepted: usize, chi2: f64 },
    Inconsistent { accepted: usize, chi2: f64 },
    Inconclusive { accepted: usize },
}

impl SpotCheck {
    fn accepted(&self) -> usize {
        match *self {
            Self::Consistent { accepted, .. }
            | Self::Inconsistent { accepted, .. }
            | Self::Inconclusive { accepted } => accepted,
        }
    }
}

/// Streams i.i.d. exponential draws, keeps realizations whose first and
/// third records fall within `h` of `u` and `v`, and bins the second record
/// by its conditional CDF given the realized neighbours.
fn markov_spot_check(u: f64, v: f64, replicates: u64, seed: u64) -> SpotCheck {
    let d = DistributionModel::shifted_exponential(1.0, 0.0).unwrap();
    let h = 0.05 * (v - u);
    let mut rng = stream_rng(seed, "markov-spot-check", 0);
    let mut bins = [0usize; 10];
    let mut accepted = 0;
    for _ in 0..replicates {
        let Ok(seq) = stream_until_records(&d, &mut rng, 3, 1_000_000) else {
            continue;
        };
        let x = seq.values();
        if (x[0] - u).abs() > h || (x[2] - v).abs() > h {
            continue;
        }
        let ctx = ConditioningContext::new(2, 1, 1, x[0], x[2]).unwrap();
        let p = ConditionalLaw::new(&d, &ctx).unwrap().cdf(x[1]);
        bins[((p * 10.0) as usize).min(9)] += 1;
        accepted += 1;
    }
    if accepted < MIN_ACCEPTED {
        return SpotCheck::Inconclusive { accepted };
    }
    let expected = accepted as f64 / 10.0;
    let chi2 = bins
        .iter()
        .map(|&b| (b as f64 - expected).powi(2) / expected)
        .sum();
    if chi2 < CHI2_9DF_1PCT {
        SpotCheck::Consistent { accepted, chi2 }
    } else {
        SpotCheck::Inconsistent { accepted, chi2 }
    }
}

#[test]
fn stream_records_are_markov_consistent() {
    match markov_spot_check(0.5, 2.0, 300_000, 7) {
        SpotCheck::Consistent { accepted, chi2 } => {
            println!("accepted {accepted}, chi-square {chi2:.2}");
        }
        SpotCheck::Inconsistent { accepted, chi2 } => {
            panic!("chi-square {chi2:.2} over {accepted} accepted realizations")
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn spot_check_reports_too_few_acceptances() {
    let check = markov_spot_check(0.5, 2.0, 100, 7);
    assert!(matches!(check, SpotCheck::Inconclusive { .. }));
    assert!(check.accepted() < MIN_ACCEPTED);
}

#[test]
fn gamma_path_record_means() {
    // X(n) of the unit exponential is a sum of n unit exponentials
    let d = DistributionModel::shifted_exponential(1.0, 0.0).unwrap();
    let seqs = gamma_sequences(&d, 3, 11, 100_000).unwrap();
    for (idx, expected) in [(0usize, 1.0), (2, 3.0)] {
        let xs: Vec<f64> = seqs.iter().map(|s| s[idx]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let se = (expected / n).sqrt();
        assert!(
            (mean - expected).abs() < 4.0 * se,
            "X({}) mean {mean}",
            idx + 1
        );
    }
}

proptest! {
    #[test]
    fn density_ignores_record_index(k in 1usize..4, r in 1usize..4, n_extra in 0usize..10, t in 0.01f64..0.99) {
        let d = DistributionModel::weibull(1.0, 2.0).unwrap();
        let a = ConditioningContext::new(k + 1, k, r, 0.3, 1.7).unwrap();
        let b = ConditioningContext::new(k + 1 + n_extra, k, r, 0.3, 1.7).unwrap();
        let x = 0.3 + 1.4 * t;
        let la = ConditionalLaw::new(&d, &a).unwrap();
        let lb = ConditionalLaw::new(&d, &b).unwrap();
        prop_assert_eq!(la.density(x), lb.density(x));
        prop_assert!(la.density(x) >= 0.0);
    }

    #[test]
    fn gamma_path_sequences_increase(seed in any::<u64>(), n in 1usize..12) {
        let d = DistributionModel::pareto(1.0, 2.0).unwrap();
        let mut rng = stream_rng(seed, "prop", 0);
        let seq = sample_records_gamma(&d, &mut rng, n).unwrap();
        prop_assert_eq!(seq.len(), n);
        prop_assert!(seq.values().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(seq.values()[0] > 1.0);
    }
}
