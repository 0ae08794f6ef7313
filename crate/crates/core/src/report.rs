//! CSV and JSON serialization of residual reports and simulation summaries.
//!
//! Reals are written with 17 significant digits so that they read back to
//! the same `f64`; non-finite values become `null` in JSON and empty cells in
//! CSV. Reports are ordered by scenario name.

use serde::ser::{Serialize, SerializeMap, Serializer};
use serde_json::Number;

use crate::checks::CheckReport;
use crate::error::{Error, Result};
use crate::records::ConditioningContext;
use crate::regression::ResidualRow;
use crate::suite::{ResidualReport, RowFailure};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 12] = [
    "scenario",
    "n",
    "k",
    "r",
    "u",
    "v",
    "lhs",
    "rhs",
    "residual",
    "method",
    "mc_std_error",
    "verdict",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Parse {
                what: "format".into(),
                message: format!("expected csv or json, got {other:?}"),
            }),
        }
    }
}

/// `x` with 17 significant digits, e.g. `2.6000000000000001e0`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// A real serialized as a JSON number with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let n: Number = format_real(self.0)
            .parse()
            .map_err(serde::ser::Error::custom)?;
        n.serialize(s)
    }
}

fn opt_real(x: Option<f64>) -> Option<Real> {
    x.map(Real)
}

fn csv_real(x: f64) -> String {
    if x.is_finite() {
        format_real(x)
    } else {
        String::new()
    }
}

struct ContextFields<'a>(&'a ConditioningContext);

impl ContextFields<'_> {
    fn write<M: SerializeMap>(&self, m: &mut M) -> std::result::Result<(), M::Error> {
        m.serialize_entry("n", &self.0.n)?;
        m.serialize_entry("k", &self.0.k)?;
        m.serialize_entry("r", &self.0.r)?;
        m.serialize_entry("u", &Real(self.0.u))?;
        m.serialize_entry("v", &Real(self.0.v))
    }
}

struct RowJson<'a>(&'a ResidualRow);

impl Serialize for RowJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let row = self.0;
        let mut m = s.serialize_map(None)?;
        ContextFields(&row.ctx).write(&mut m)?;
        m.serialize_entry("variant", &row.variant)?;
        m.serialize_entry("method", &row.method)?;
        m.serialize_entry("lhs", &Real(row.lhs))?;
        m.serialize_entry("rhs", &Real(row.rhs))?;
        m.serialize_entry("residual", &Real(row.residual))?;
        m.serialize_entry("relative_residual", &opt_real(row.relative_residual()))?;
        m.serialize_entry("mc_std_error", &opt_real(row.mc_std_error))?;
        m.end()
    }
}

struct FailureJson<'a>(&'a RowFailure);

impl Serialize for FailureJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        ContextFields(&self.0.ctx).write(&mut m)?;
        m.serialize_entry("variant", &self.0.variant)?;
        m.serialize_entry("message", &self.0.message)?;
        m.end()
    }
}

struct ReportJson<'a>(&'a ResidualReport);

impl Serialize for ReportJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let r = self.0;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("scenario", &r.scenario)?;
        m.serialize_entry("expected", &r.expected)?;
        m.serialize_entry("verdict", &r.verdict)?;
        m.serialize_entry("max_abs_residual", &Real(r.max_abs_residual))?;
        m.serialize_entry("hold_tolerance", &Real(r.thresholds.hold))?;
        m.serialize_entry("fail_floor", &Real(r.thresholds.fail))?;
        let rows: Vec<RowJson> = r.rows.iter().map(RowJson).collect();
        m.serialize_entry("rows", &rows)?;
        let errors: Vec<FailureJson> = r.failures.iter().map(FailureJson).collect();
        m.serialize_entry("errors", &errors)?;
        m.end()
    }
}

struct Document<'a>(&'a [ResidualReport]);

impl Serialize for Document<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("schema_version", &SCHEMA_VERSION)?;
        let reports: Vec<ReportJson> = self.0.iter().map(ReportJson).collect();
        m.serialize_entry("reports", &reports)?;
        m.end()
    }
}

fn sorted(reports: &[ResidualReport]) -> Vec<ResidualReport> {
    let mut out = reports.to_vec();
    out.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    out
}

/// The reports as a pretty-printed JSON document ending in a newline.
pub fn reports_to_json(reports: &[ResidualReport]) -> Result<String> {
    let reports = sorted(reports);
    let mut text = serde_json::to_string_pretty(&Document(&reports)).map_err(|e| Error::Parse {
        what: "json".into(),
        message: e.to_string(),
    })?;
    text.push('\n');
    Ok(text)
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Parse {
        what: "csv".into(),
        message: e.to_string(),
    }
}

/// One CSV line per evaluated row. Contexts that failed to evaluate have no
/// line; they appear in the JSON `errors` list.
pub fn reports_to_csv(reports: &[ResidualReport]) -> Result<String> {
    let reports = sorted(reports);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    for report in &reports {
        for row in &report.rows {
            w.write_record([
                report.scenario.clone(),
                row.ctx.n.to_string(),
                row.ctx.k.to_string(),
                row.ctx.r.to_string(),
                csv_real(row.ctx.u),
                csv_real(row.ctx.v),
                csv_real(row.lhs),
                csv_real(row.rhs),
                csv_real(row.residual),
                row.method.as_str().to_string(),
                row.mc_std_error.map(csv_real).unwrap_or_default(),
                report.verdict.as_str().to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    let bytes = w.into_inner().map_err(csv_error)?;
    String::from_utf8(bytes).map_err(csv_error)
}

pub fn render_reports(reports: &[ResidualReport], format: Format) -> Result<String> {
    match format {
        Format::Csv => reports_to_csv(reports),
        Format::Json => reports_to_json(reports),
    }
}

/// A cell of a simulation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
}

impl Cell {
    fn csv(self) -> String {
        match self {
            Self::Int(i) => i.to_string(),
            Self::Real(x) => csv_real(x),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Self::Int(i) => s.serialize_u64(i),
            Self::Real(x) => Real(x).serialize(s),
        }
    }
}

/// Output of a simulation run: parameters, summary statistics and,
/// optionally, the raw table of draws.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationReport {
    pub what: String,
    pub parameters: Vec<(String, String)>,
    pub summary: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

struct Pairs<'a, T>(&'a [(String, T)]);

impl<T: Serialize> Serialize for Pairs<'_, T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

struct Table<'a>(&'a SimulationReport);

impl Serialize for Table<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let r = self.0;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("schema_version", &SCHEMA_VERSION)?;
        m.serialize_entry("simulation", &r.what)?;
        m.serialize_entry("parameters", &Pairs(&r.parameters))?;
        m.serialize_entry("summary", &Pairs(&r.summary))?;
        m.serialize_entry("columns", &r.columns)?;
        m.serialize_entry("rows", &r.rows)?;
        m.end()
    }
}

impl SimulationReport {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(&Table(self)).map_err(|e| Error::Parse {
            what: "json".into(),
            message: e.to_string(),
        })?;
        text.push('\n');
        Ok(text)
    }

    /// The table of draws, or a `statistic,value` table when there are no
    /// draws.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(["statistic", "value"]).map_err(csv_error)?;
            for (k, v) in &self.summary {
                w.write_record([k.clone(), v.csv()]).map_err(csv_error)?;
            }
        } else {
            w.write_record(&self.columns).map_err(csv_error)?;
            for row in &self.rows {
                w.write_record(row.iter().map(|c| c.csv()))
                    .map_err(csv_error)?;
            }
        }
        let bytes = w.into_inner().map_err(csv_error)?;
        String::from_utf8(bytes).map_err(csv_error)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

pub const CHECK_CSV_COLUMNS: [&str; 8] = [
    "check",
    "subject",
    "point",
    "value",
    "reference",
    "error",
    "tolerance",
    "passed",
];

struct CheckJson<'a>(&'a CheckReport);

impl Serialize for CheckJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let c = self.0;
        let rows: Vec<_> = c
            .rows
            .iter()
            .map(|r| {
                let mut m = serde_json::Map::new();
                m.insert("subject".into(), r.subject.clone().into());
                m.insert("point".into(), r.point.clone().into());
                for (key, x) in [
                    ("value", r.value),
                    ("reference", r.reference),
                    ("error", r.error),
                ] {
                    m.insert(
                        key.into(),
                        serde_json::to_value(Real(x)).unwrap_or_default(),
                    );
                }
                m
            })
            .collect();
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("check", &c.name)?;
        m.serialize_entry("passed", &c.passed)?;
        m.serialize_entry("tolerance", &Real(c.tolerance))?;
        m.serialize_entry("max_error", &Real(c.max_error))?;
        m.serialize_entry("rows", &rows)?;
        m.end()
    }
}

struct CheckDocument<'a>(&'a [CheckReport]);

impl Serialize for CheckDocument<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let checks: Vec<_> = self.0.iter().map(CheckJson).collect();
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("schema_version", &SCHEMA_VERSION)?;
        m.serialize_entry("checks", &checks)?;
        m.end()
    }
}

pub fn checks_to_json(checks: &[CheckReport]) -> Result<String> {
    let mut text =
        serde_json::to_string_pretty(&CheckDocument(checks)).map_err(|e| Error::Parse {
            what: "json".into(),
            message: e.to_string(),
        })?;
    text.push('\n');
    Ok(text)
}

pub fn checks_to_csv(checks: &[CheckReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CHECK_CSV_COLUMNS).map_err(csv_error)?;
    for c in checks {
        for r in &c.rows {
            w.write_record([
                c.name.clone(),
                r.subject.clone(),
                r.point.clone(),
                csv_real(r.value),
                csv_real(r.reference),
                csv_real(r.error),
                csv_real(c.tolerance),
                c.passed.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    let bytes = w.into_inner().map_err(csv_error)?;
    String::from_utf8(bytes).map_err(csv_error)
}

pub fn render_checks(checks: &[CheckReport], format: Format) -> Result<String> {
    match format {
        Format::Csv => checks_to_csv(checks),
        Format::Json => checks_to_json(checks),
    }
}
