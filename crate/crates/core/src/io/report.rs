//! Unit-tagged report tree with deterministic JSON and CSV renderings.
//!
//! Every number is written as `{"unit": ..., "value": ...}` and rounded to 12
//! significant digits; map keys come out sorted. Non-finite values are the
//! strings `"inf"`, `"-inf"` and `"nan"`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Number, Value};
use thiserror::Error;

const SIG_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    Nats,
    Bits,
    Probability,
    /// Dimensionless real number.
    Ratio,
    Count,
}

impl Unit {
    pub fn name(self) -> &'static str {
        match self {
            Unit::Nats => "nats",
            Unit::Bits => "bits",
            Unit::Probability => "probability",
            Unit::Ratio => "ratio",
            Unit::Count => "count",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        [Unit::Nats, Unit::Bits, Unit::Probability, Unit::Ratio, Unit::Count].into_iter().find(|u| u.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReportValue {
    Map(BTreeMap<String, ReportValue>),
    List(Vec<ReportValue>),
    Quantity { value: f64, unit: Unit },
    Text(String),
    Flag(bool),
}

impl ReportValue {
    pub fn nats(value: f64) -> Self {
        ReportValue::Quantity { value, unit: Unit::Nats }
    }

    pub fn probability(value: f64) -> Self {
        ReportValue::Quantity { value, unit: Unit::Probability }
    }

    pub fn ratio(value: f64) -> Self {
        ReportValue::Quantity { value, unit: Unit::Ratio }
    }

    pub fn count(value: usize) -> Self {
        ReportValue::Quantity { value: value as f64, unit: Unit::Count }
    }

    pub fn text(s: impl Into<String>) -> Self {
        ReportValue::Text(s.into())
    }

    pub fn list<I: IntoIterator<Item = ReportValue>>(items: I) -> Self {
        ReportValue::List(items.into_iter().collect())
    }

    pub fn nats_list(values: &[f64]) -> Self {
        Self::list(values.iter().map(|&v| Self::nats(v)))
    }

    pub fn counts(values: &[usize]) -> Self {
        Self::list(values.iter().map(|&v| Self::count(v)))
    }

    pub fn map() -> Self {
        ReportValue::Map(BTreeMap::new())
    }

    /// Adds `key` to a map value; panics on other variants.
    pub fn with(mut self, key: impl Into<String>, value: ReportValue) -> Self {
        match &mut self {
            ReportValue::Map(m) => {
                m.insert(key.into(), value);
            }
            _ => panic!("with() on a non-map report value"),
        }
        self
    }

    /// Follows a dotted path of map keys.
    pub fn get(&self, path: &str) -> Option<&ReportValue> {
        path.split('.').try_fold(self, |v, key| match v {
            ReportValue::Map(m) => m.get(key),
            ReportValue::List(l) => key.parse::<usize>().ok().and_then(|i| l.get(i)),
            _ => None,
        })
    }

    /// Stored value of a quantity (nats for information quantities).
    pub fn value(&self) -> Option<f64> {
        match self {
            ReportValue::Quantity { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub root: BTreeMap<String, ReportValue>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: ReportValue) {
        self.root.insert(key.into(), value);
    }

    pub fn get(&self, path: &str) -> Option<&ReportValue> {
        let (head, rest) = path.split_once('.').unwrap_or((path, ""));
        let v = self.root.get(head)?;
        if rest.is_empty() {
            Some(v)
        } else {
            v.get(rest)
        }
    }

    pub fn value(&self, path: &str) -> Option<f64> {
        self.get(path).and_then(ReportValue::value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(format!("unknown report format '{s}' (expected json or csv)")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

/// Converts a stored quantity to what gets written; `bits` rescales nats only.
fn displayed(value: f64, unit: Unit, bits: bool) -> (f64, Unit) {
    if bits && unit == Unit::Nats {
        (value / std::f64::consts::LN_2, Unit::Bits)
    } else {
        (value, unit)
    }
}

fn rounded(value: f64) -> f64 {
    if value == 0.0 {
        return 0.0;
    }
    format!("{value:.prec$e}", prec = SIG_DIGITS - 1).parse().unwrap()
}

/// Integral values are written without a fractional part.
fn number(value: f64) -> Option<Number> {
    let r = rounded(value);
    if r.fract() == 0.0 && r.abs() < 9.0e15 {
        Some(Number::from(r as i64))
    } else {
        Number::from_f64(r)
    }
}

fn number_text(value: f64) -> String {
    if value.is_nan() {
        "nan".into()
    } else if value.is_infinite() {
        if value > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        number(value).unwrap().to_string()
    }
}

fn number_json(value: f64) -> Value {
    match number(value) {
        Some(n) if value.is_finite() => Value::Number(n),
        _ => Value::String(number_text(value)),
    }
}

fn to_json(v: &ReportValue, bits: bool) -> Value {
    match v {
        ReportValue::Map(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), to_json(v, bits))).collect()),
        ReportValue::List(l) => Value::Array(l.iter().map(|v| to_json(v, bits)).collect()),
        ReportValue::Quantity { value, unit } => {
            let (value, unit) = displayed(*value, *unit, bits);
            let mut m = Map::new();
            m.insert("unit".into(), Value::String(unit.name().into()));
            m.insert("value".into(), number_json(value));
            Value::Object(m)
        }
        ReportValue::Text(s) => Value::String(s.clone()),
        ReportValue::Flag(b) => Value::Bool(*b),
    }
}

fn flatten(prefix: &str, v: &ReportValue, bits: bool, rows: &mut Vec<[String; 3]>) {
    let child = |key: &str| if prefix.is_empty() { key.to_string() } else { format!("{prefix}.{key}") };
    match v {
        ReportValue::Map(m) => m.iter().for_each(|(k, v)| flatten(&child(k), v, bits, rows)),
        ReportValue::List(l) => l.iter().enumerate().for_each(|(i, v)| flatten(&child(&i.to_string()), v, bits, rows)),
        ReportValue::Quantity { value, unit } => {
            let (value, unit) = displayed(*value, *unit, bits);
            rows.push([prefix.into(), number_text(value), unit.name().into()]);
        }
        ReportValue::Text(s) => rows.push([prefix.into(), s.clone(), String::new()]),
        ReportValue::Flag(b) => rows.push([prefix.into(), b.to_string(), String::new()]),
    }
}

/// Renders the report; the output is identical for identical reports.
pub fn render_report(report: &Report, format: ReportFormat, bits: bool) -> String {
    let root = ReportValue::Map(report.root.clone());
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&to_json(&root, bits)).unwrap();
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut rows = Vec::new();
            flatten("", &root, bits, &mut rows);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["path", "value", "unit"]).unwrap();
            for r in &rows {
                w.write_record(r).unwrap();
            }
            String::from_utf8(w.into_inner().unwrap()).unwrap()
        }
    }
}

pub fn write_report(report: &Report, path: impl AsRef<Path>, format: ReportFormat, bits: bool) -> Result<(), ReportError> {
    let path = path.as_ref();
    std::fs::write(path, render_report(report, format, bits))
        .map_err(|source| ReportError::Write { path: path.display().to_string(), source })
}

fn from_json(v: &Value, at: &str) -> Result<ReportValue, String> {
    Ok(match v {
        Value::Object(m) => {
            if let (2, Some(Value::String(u)), Some(val)) = (m.len(), m.get("unit"), m.get("value")) {
                if let Some(unit) = Unit::from_name(u) {
                    let value = match val {
                        Value::Number(n) => n.as_f64().unwrap(),
                        Value::String(s) => match s.as_str() {
                            "inf" => f64::INFINITY,
                            "-inf" => f64::NEG_INFINITY,
                            "nan" => f64::NAN,
                            _ => return Err(format!("{at}: bad numeric value '{s}'")),
                        },
                        _ => return Err(format!("{at}: quantity value is not a number")),
                    };
                    return Ok(ReportValue::Quantity { value, unit });
                }
            }
            ReportValue::Map(
                m.iter()
                    .map(|(k, v)| Ok((k.clone(), from_json(v, &format!("{at}.{k}"))?)))
                    .collect::<Result<_, String>>()?,
            )
        }
        Value::Array(l) => ReportValue::List(
            l.iter().enumerate().map(|(i, v)| from_json(v, &format!("{at}.{i}"))).collect::<Result<_, _>>()?,
        ),
        Value::String(s) => ReportValue::Text(s.clone()),
        Value::Bool(b) => ReportValue::Flag(*b),
        Value::Number(_) => return Err(format!("{at}: number without a unit tag")),
        Value::Null => return Err(format!("{at}: null is not a report value")),
    })
}

/// Reads a JSON report written by [`write_report`]. Values come back in the
/// units they were written in.
pub fn read_report_json(path: impl AsRef<Path>) -> Result<Report, ReportError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Read { path: shown.clone(), source })?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| ReportError::Parse { path: shown.clone(), message: e.to_string() })?;
    match from_json(&value, "$").map_err(|message| ReportError::Parse { path: shown.clone(), message })? {
        ReportValue::Map(root) => Ok(Report { root }),
        _ => Err(ReportError::Parse { path: shown, message: "top level is not an object".into() }),
    }
}
