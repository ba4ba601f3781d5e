//! JSON and CSV report documents.
//!
//! Floats are rounded to 12 significant digits and fields keep insertion
//! order, so serializing the same report twice gives identical bytes.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::input(format!("unknown report format '{other}'"))),
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

/// Settings a metric block was computed with.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub k: usize,
    pub cutoff: f64,
    pub bandwidth: f64,
    pub seed: u64,
    pub method: Option<String>,
    pub fraction: Option<f64>,
    pub count: Option<usize>,
}

impl Parameters {
    fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("k".into(), Value::from(self.k));
        m.insert("cutoff".into(), float(self.cutoff));
        m.insert("bandwidth".into(), float(self.bandwidth));
        m.insert("seed".into(), Value::from(self.seed));
        m.insert(
            "method".into(),
            self.method.clone().map_or(Value::Null, Value::from),
        );
        m.insert("fraction".into(), self.fraction.map_or(Value::Null, float));
        m.insert("count".into(), self.count.map_or(Value::Null, Value::from));
        Value::Object(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Float(f64),
    Int(u64),
    Text(String),
    Floats(Vec<f64>),
    Ints(Vec<u64>),
    Null,
}

impl MetricValue {
    fn to_value(&self) -> Value {
        match self {
            MetricValue::Float(x) => float(*x),
            MetricValue::Int(i) => Value::from(*i),
            MetricValue::Text(s) => Value::from(s.as_str()),
            MetricValue::Floats(v) => Value::Array(v.iter().map(|&x| float(x)).collect()),
            MetricValue::Ints(v) => Value::Array(v.iter().map(|&i| Value::from(i)).collect()),
            MetricValue::Null => Value::Null,
        }
    }

    fn is_scalar(&self) -> bool {
        !matches!(self, MetricValue::Floats(_) | MetricValue::Ints(_))
    }
}

impl From<f64> for MetricValue {
    fn from(x: f64) -> Self {
        MetricValue::Float(x)
    }
}

impl From<usize> for MetricValue {
    fn from(i: usize) -> Self {
        MetricValue::Int(i as u64)
    }
}

impl From<Option<f64>> for MetricValue {
    fn from(x: Option<f64>) -> Self {
        x.map_or(MetricValue::Null, MetricValue::Float)
    }
}

impl From<&str> for MetricValue {
    fn from(s: &str) -> Self {
        MetricValue::Text(s.to_string())
    }
}

impl From<Vec<f64>> for MetricValue {
    fn from(v: Vec<f64>) -> Self {
        MetricValue::Floats(v)
    }
}

impl From<Vec<u64>> for MetricValue {
    fn from(v: Vec<u64>) -> Self {
        MetricValue::Ints(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricBlock {
    pub name: String,
    pub parameters: Parameters,
    pub metrics: Vec<(String, MetricValue)>,
}

impl MetricBlock {
    pub fn new(name: impl Into<String>, parameters: Parameters) -> Self {
        MetricBlock {
            name: name.into(),
            parameters,
            metrics: Vec::new(),
        }
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<MetricValue>) -> &mut Self {
        self.metrics.push((key.into(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&MetricValue> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the input file(s), hex encoded.
    pub input_digest: String,
    pub parameters: Parameters,
    pub blocks: Vec<MetricBlock>,
}

impl ReportDocument {
    pub fn new(input_digest: impl Into<String>, parameters: Parameters) -> Self {
        ReportDocument {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest: input_digest.into(),
            parameters,
            blocks: Vec::new(),
        }
    }

    pub fn block(&self, name: &str) -> Option<&MetricBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn to_json_value(&self) -> Value {
        let mut root = Map::new();
        root.insert("tool".into(), Value::from(self.tool.as_str()));
        root.insert("version".into(), Value::from(self.version.as_str()));
        root.insert(
            "input_digest".into(),
            Value::from(self.input_digest.as_str()),
        );
        root.insert("parameters".into(), self.parameters.to_value());
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut m = Map::new();
                m.insert("name".into(), Value::from(b.name.as_str()));
                m.insert("parameters".into(), b.parameters.to_value());
                let metrics = b
                    .metrics
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_value()))
                    .collect::<Map<_, _>>();
                m.insert("metrics".into(), Value::Object(metrics));
                Value::Object(m)
            })
            .collect();
        root.insert("blocks".into(), Value::Array(blocks));
        Value::Object(root)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.to_json_value())?;
        s.push('\n');
        Ok(s)
    }

    /// One row per block: parameters followed by every scalar metric.
    /// List-valued metrics are JSON-only.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut metric_keys: Vec<&str> = Vec::new();
        for b in &self.blocks {
            for (k, v) in &b.metrics {
                if v.is_scalar() && !metric_keys.contains(&k.as_str()) {
                    metric_keys.push(k);
                }
            }
        }
        let param_keys = [
            "k",
            "cutoff",
            "bandwidth",
            "seed",
            "method",
            "fraction",
            "count",
        ];
        let mut writer = csv::Writer::from_writer(out);
        let mut header = vec!["block"];
        header.extend(param_keys);
        header.extend(&metric_keys);
        writer.write_record(&header)?;
        for b in &self.blocks {
            let params = b.parameters.to_value();
            let mut record = vec![b.name.clone()];
            record.extend(param_keys.iter().map(|k| cell(&params[*k])));
            for key in &metric_keys {
                record.push(b.get(key).map_or(String::new(), |v| cell(&v.to_value())));
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Json => self.to_json_string(),
            ReportFormat::Csv => self.to_csv_string(),
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Round to 12 significant digits; non-finite values become `null`.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x + 0.0;
    }
    format!("{x:.11e}")
        .parse::<f64>()
        .expect("formatted float parses")
        + 0.0
}

fn float(x: f64) -> Value {
    Number::from_f64(round_sig12(x)).map_or(Value::Null, Value::Number)
}

pub fn write_report(report: &ReportDocument, format: ReportFormat, path: &Path) -> Result<()> {
    let mut file = File::create(path)?;
    file.write_all(report.render(format)?.as_bytes())?;
    Ok(())
}
