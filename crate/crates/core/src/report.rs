//! Experiment reports and their JSON / CSV forms.
//!
//! JSON is an array of report objects carrying `"schema": 1`. CSV is a long
//! format with one row per report field:
//!
//! ```text
//! schema,run_id,audit,family,seed,wall_time_ms,record,name,value,lhs,rhs,ratio,relation
//! ```
//!
//! `record` is `meta` (one per report, first), `size`, `bound` or `flag`.
//! Integers are written as integers; real quantities and ratios are rounded
//! to 12 significant digits and always carry a `.` or an exponent, so both
//! formats round-trip every value exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 13] = [
    "schema",
    "run_id",
    "audit",
    "family",
    "seed",
    "wall_time_ms",
    "record",
    "name",
    "value",
    "lhs",
    "rhs",
    "ratio",
    "relation",
];

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// One side of a bound: an exact integer or a rounded real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Int(u64),
    Real(f64),
}

impl Quantity {
    pub fn real(x: f64) -> Self {
        Quantity::Real(round12(x))
    }

    /// Exact when it fits `u64`, otherwise the nearest rounded real.
    pub fn wide(x: u128) -> Self {
        u64::try_from(x).map_or_else(|_| Quantity::real(x as f64), Quantity::Int)
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Quantity::Int(n) => n as f64,
            Quantity::Real(x) => x,
        }
    }

    fn parse(s: &str) -> Result<Self> {
        let bad = || LabError::Usage(format!("bad quantity `{s}`"));
        if s.contains(['.', 'e', 'E', 'n', 'N', 'i']) {
            s.parse().map(Quantity::Real).map_err(|_| bad())
        } else {
            s.parse().map(Quantity::Int).map_err(|_| bad())
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Int(n) => write!(f, "{n}"),
            // Debug keeps a `.0` on integral values, so the type survives CSV.
            Quantity::Real(x) => write!(f, "{x:?}"),
        }
    }
}

impl From<u64> for Quantity {
    fn from(n: u64) -> Self {
        Quantity::Int(n)
    }
}

impl From<f64> for Quantity {
    fn from(x: f64) -> Self {
        Quantity::real(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "<=" => Ok(Relation::Le),
            ">=" => Ok(Relation::Ge),
            "=" => Ok(Relation::Eq),
            _ => Err(LabError::Usage(format!("bad relation `{s}`"))),
        }
    }
}

/// `lhs relation rhs`, with `ratio = lhs / rhs` (absent when `rhs = 0`).
/// `holds` is decided by the audit, exactly where the audit can.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: Quantity,
    pub rhs: Quantity,
    pub relation: Relation,
    pub ratio: Option<f64>,
    pub holds: bool,
}

impl BoundCheck {
    pub fn new(
        name: &str,
        lhs: impl Into<Quantity>,
        relation: Relation,
        rhs: impl Into<Quantity>,
        holds: bool,
    ) -> Self {
        let (lhs, rhs) = (lhs.into(), rhs.into());
        BoundCheck {
            name: name.to_string(),
            lhs,
            rhs,
            relation,
            ratio: ratio_of(lhs, rhs),
            holds,
        }
    }

    /// Like [`BoundCheck::new`], with `holds` taken from comparing the
    /// stored values. For reported, non-exact comparisons.
    pub fn compare(name: &str, lhs: impl Into<Quantity>, relation: Relation, rhs: impl Into<Quantity>) -> Self {
        let (lhs, rhs) = (lhs.into(), rhs.into());
        let (l, r) = (lhs.as_f64(), rhs.as_f64());
        let holds = match relation {
            Relation::Le => l <= r,
            Relation::Ge => l >= r,
            Relation::Eq => l == r,
        };
        Self::new(name, lhs, relation, rhs, holds)
    }
}

fn ratio_of(lhs: Quantity, rhs: Quantity) -> Option<f64> {
    let r = rhs.as_f64();
    (r != 0.0).then(|| round12(lhs.as_f64() / r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub run_id: String,
    pub audit: String,
    /// The family spec in its text form.
    pub family: String,
    pub seed: u64,
    pub sizes: BTreeMap<String, u64>,
    pub bounds: Vec<BoundCheck>,
    pub flags: BTreeMap<String, bool>,
    pub wall_time_ms: u64,
}

impl ExperimentReport {
    pub fn new(run_id: impl Into<String>, audit: impl Into<String>, family: impl Into<String>, seed: u64) -> Self {
        ExperimentReport {
            schema: SCHEMA_VERSION,
            run_id: run_id.into(),
            audit: audit.into(),
            family: family.into(),
            seed,
            sizes: BTreeMap::new(),
            bounds: Vec::new(),
            flags: BTreeMap::new(),
            wall_time_ms: 0,
        }
    }

    pub fn size(&mut self, name: &str, value: u64) -> &mut Self {
        self.sizes.insert(name.to_string(), value);
        self
    }

    pub fn bound(&mut self, check: BoundCheck) -> &mut Self {
        self.bounds.push(check);
        self
    }

    pub fn flag(&mut self, name: &str, value: bool) -> &mut Self {
        self.flags.insert(name.to_string(), value);
        self
    }

    pub fn bound_named(&self, name: &str) -> Option<&BoundCheck> {
        self.bounds.iter().find(|b| b.name == name)
    }

    /// True when every bound holds and every flag is set.
    pub fn all_pass(&self) -> bool {
        self.bounds.iter().all(|b| b.holds) && self.flags.values().all(|&f| f)
    }

    /// Checks the schema version and that every stored ratio equals its
    /// `lhs / rhs` recomputed and rounded the same way.
    pub fn check_consistency(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(LabError::Internal(format!(
                "report {} has schema {}, expected {SCHEMA_VERSION}",
                self.run_id, self.schema
            )));
        }
        for b in &self.bounds {
            let expected = ratio_of(b.lhs, b.rhs);
            if b.ratio != expected {
                return Err(LabError::Internal(format!(
                    "report {} bound {}: ratio {:?} but lhs/rhs gives {expected:?}",
                    self.run_id, b.name, b.ratio
                )));
            }
        }
        Ok(())
    }

    /// Equality ignoring wall time.
    pub fn same_result(&self, other: &ExperimentReport) -> bool {
        ExperimentReport { wall_time_ms: 0, ..self.clone() } == ExperimentReport { wall_time_ms: 0, ..other.clone() }
    }
}

pub fn to_json_string(reports: &[ExperimentReport]) -> Result<String> {
    for r in reports {
        r.check_consistency()?;
    }
    Ok(serde_json::to_string_pretty(reports)? + "\n")
}

pub fn from_json_str(text: &str) -> Result<Vec<ExperimentReport>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    validate_json(&value)?;
    let reports: Vec<ExperimentReport> = serde_json::from_value(value)?;
    for r in &reports {
        r.check_consistency()?;
    }
    Ok(reports)
}

/// Structural check of a JSON report document: an array of objects with
/// every field present and of the right type, and `schema = 1`.
pub fn validate_json(doc: &serde_json::Value) -> Result<()> {
    use serde_json::Value;
    let bad = |what: String| Err(LabError::Usage(format!("report schema: {what}")));
    let Value::Array(items) = doc else {
        return bad("top level is not an array".into());
    };
    for (i, item) in items.iter().enumerate() {
        let Value::Object(obj) = item else {
            return bad(format!("item {i} is not an object"));
        };
        let field = |k: &str| obj.get(k).ok_or_else(|| LabError::Usage(format!("report schema: item {i} lacks `{k}`")));
        if field("schema")?.as_u64() != Some(SCHEMA_VERSION as u64) {
            return bad(format!("item {i} has a schema other than {SCHEMA_VERSION}"));
        }
        for k in ["run_id", "audit", "family"] {
            if !field(k)?.is_string() {
                return bad(format!("item {i}: `{k}` is not a string"));
            }
        }
        for k in ["seed", "wall_time_ms"] {
            if !field(k)?.is_u64() {
                return bad(format!("item {i}: `{k}` is not an unsigned integer"));
            }
        }
        let sizes = field("sizes")?.as_object();
        if !sizes.is_some_and(|m| m.values().all(Value::is_u64)) {
            return bad(format!("item {i}: `sizes` is not a map of integers"));
        }
        let flags = field("flags")?.as_object();
        if !flags.is_some_and(|m| m.values().all(Value::is_boolean)) {
            return bad(format!("item {i}: `flags` is not a map of booleans"));
        }
        let Some(bounds) = field("bounds")?.as_array() else {
            return bad(format!("item {i}: `bounds` is not an array"));
        };
        for (j, b) in bounds.iter().enumerate() {
            let ok = b["name"].is_string()
                && b["lhs"].is_number()
                && b["rhs"].is_number()
                && matches!(b["relation"].as_str(), Some("<=" | ">=" | "="))
                && (b["ratio"].is_number() || b["ratio"].is_null())
                && b["holds"].is_boolean();
            if !ok {
                return bad(format!("item {i}: bound {j} is malformed"));
            }
        }
    }
    Ok(())
}

pub fn write_csv<W: Write>(reports: &[ExperimentReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        r.check_consistency()?;
        let head = [
            r.schema.to_string(),
            r.run_id.clone(),
            r.audit.clone(),
            r.family.clone(),
            r.seed.to_string(),
            r.wall_time_ms.to_string(),
        ];
        let mut row = |record: &str, name: &str, rest: [String; 5]| -> Result<()> {
            let fields = head.iter().cloned().chain([record.to_string(), name.to_string()]).chain(rest);
            w.write_record(fields.collect::<Vec<_>>())?;
            Ok(())
        };
        row("meta", "", Default::default())?;
        for (name, v) in &r.sizes {
            row("size", name, [v.to_string(), String::new(), String::new(), String::new(), String::new()])?;
        }
        for b in &r.bounds {
            row(
                "bound",
                &b.name,
                [
                    b.holds.to_string(),
                    b.lhs.to_string(),
                    b.rhs.to_string(),
                    b.ratio.map(|x| format!("{x:?}")).unwrap_or_default(),
                    b.relation.symbol().to_string(),
                ],
            )?;
        }
        for (name, v) in &r.flags {
            row("flag", name, [v.to_string(), String::new(), String::new(), String::new(), String::new()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(reports: &[ExperimentReport]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(reports, &mut buf)?;
    String::from_utf8(buf).map_err(|e| LabError::Internal(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ExperimentReport>> {
    let mut rdr = csv::Reader::from_reader(input);
    if rdr.headers()?.iter().ne(CSV_HEADER) {
        return Err(LabError::Usage("CSV header does not match the report schema".into()));
    }
    let bad = |what: &str, line: usize| LabError::Usage(format!("CSV row {line}: {what}"));
    let mut reports: Vec<ExperimentReport> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let f = |k: usize| rec.get(k).unwrap_or("");
        let int = |k: usize| f(k).parse::<u64>().map_err(|_| bad(CSV_HEADER[k], line));
        let flag = |k: usize| f(k).parse::<bool>().map_err(|_| bad(CSV_HEADER[k], line));
        match f(6) {
            "meta" => {
                let schema = int(0)?;
                let mut r = ExperimentReport::new(f(1), f(2), f(3), int(4)?);
                r.schema = u32::try_from(schema).map_err(|_| bad("schema", line))?;
                r.wall_time_ms = int(5)?;
                reports.push(r);
            }
            kind => {
                let r = reports
                    .last_mut()
                    .filter(|r| r.run_id == f(1))
                    .ok_or_else(|| bad("row before its meta row", line))?;
                match kind {
                    "size" => {
                        r.sizes.insert(f(7).to_string(), int(8)?);
                    }
                    "flag" => {
                        r.flags.insert(f(7).to_string(), flag(8)?);
                    }
                    "bound" => {
                        let ratio = match f(11) {
                            "" => None,
                            s => Some(s.parse().map_err(|_| bad("ratio", line))?),
                        };
                        r.bounds.push(BoundCheck {
                            name: f(7).to_string(),
                            lhs: Quantity::parse(f(9))?,
                            rhs: Quantity::parse(f(10))?,
                            relation: Relation::parse(f(12))?,
                            ratio,
                            holds: flag(8)?,
                        });
                    }
                    other => return Err(bad(&format!("unknown record `{other}`"), line)),
                }
            }
        }
    }
    for r in &reports {
        r.check_consistency()?;
    }
    Ok(reports)
}

pub fn from_csv_str(text: &str) -> Result<Vec<ExperimentReport>> {
    read_csv(text.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Writes `reports` to `path` in the given format.
pub fn emit_report(reports: &[ExperimentReport], format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Json => to_json_string(reports)?,
        ReportFormat::Csv => to_csv_string(reports)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new("cell-0000", "thm1", "kind=random p=101 size=5 seed=1", 1);
        r.size("card_a", 5).size("card_shifted", 14);
        r.bound(BoundCheck::compare("beta", 1.64, Relation::Ge, 106.0 / 105.0));
        r.bound(BoundCheck::new("exact", 4u64, Relation::Le, 0u64, false));
        r.bound(BoundCheck::new("integral_real", 2.0, Relation::Eq, 2u64, true));
        r.flag("pass", true);
        r.wall_time_ms = 3;
        r
    }

    #[test]
    fn rounding() {
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(2.0), 2.0);
        assert_eq!(round12(123456789.0123456), 123456789.012);
    }

    #[test]
    fn quantity_text() {
        assert_eq!(Quantity::real(2.0).to_string(), "2.0");
        assert_eq!(Quantity::Int(2).to_string(), "2");
        assert_eq!(Quantity::parse("2.0").unwrap(), Quantity::Real(2.0));
        assert_eq!(Quantity::parse("1e-7").unwrap(), Quantity::Real(1e-7));
        assert_eq!(Quantity::parse("17").unwrap(), Quantity::Int(17));
        assert_eq!(Quantity::wide(1 << 70), Quantity::real(2f64.powi(70)));
        assert_eq!(Quantity::wide(1 << 40), Quantity::Int(1 << 40));
    }

    #[test]
    fn json_round_trip_and_schema() {
        let reports = vec![sample()];
        let text = to_json_string(&reports).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        validate_json(&doc).unwrap();
        assert_eq!(doc[0]["schema"], 1);
        assert_eq!(from_json_str(&text).unwrap(), reports);
        assert_eq!(to_json_string(&[]).unwrap(), "[]\n");
        assert!(validate_json(&serde_json::json!([{"schema": 2}])).is_err());
    }

    #[test]
    fn csv_round_trips() {
        let reports = vec![sample(), ExperimentReport::new("cell-0001", "ruzsa", "x", 2)];
        let csv = to_csv_string(&reports).unwrap();
        assert_eq!(from_csv_str(&csv).unwrap(), reports);
        let json = to_json_string(&from_csv_str(&csv).unwrap()).unwrap();
        assert_eq!(to_csv_string(&from_json_str(&json).unwrap()).unwrap(), csv);
        assert_eq!(to_csv_string(&[]).unwrap(), CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn inconsistent_ratio_is_rejected() {
        let mut r = sample();
        r.bounds[0].ratio = Some(9.0);
        assert!(matches!(r.check_consistency(), Err(LabError::Internal(_))));
        assert!(to_json_string(&[r]).is_err());
    }
}
