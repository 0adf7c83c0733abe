//! Result records, comparison tables and their renderings.

mod emit;
mod table;

pub use emit::{emit_records, emit_table, Emitted, Format};
pub use table::{efficiency_table, speedup_table, DeviceKey, Table, TableKind, TableRow};

use crate::bench::{BenchResult, Status};
use crate::error::{Error, Result};
use crate::grid::Precision;
use crate::perf::MetricDirection;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Name accepted by [`load_results`] for the bundled dataset.
pub const EMBEDDED: &str = "paper:embedded";

const PAPER_DATA: &str = include_str!("../../data/paper_data.csv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TimeS,
    Gflops,
    GflopsPerW,
    EnergyJ,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::TimeS,
        Metric::Gflops,
        Metric::GflopsPerW,
        Metric::EnergyJ,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::TimeS => "time_s",
            Metric::Gflops => "gflops",
            Metric::GflopsPerW => "gflops_per_w",
            Metric::EnergyJ => "energy_j",
        }
    }

    /// Times and energies improve downwards, rates upwards.
    pub fn direction(self) -> MetricDirection {
        match self {
            Metric::TimeS | Metric::EnergyJ => MetricDirection::Time,
            Metric::Gflops | Metric::GflopsPerW => MetricDirection::Rate,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown metric {s:?}")))
    }
}

/// One measured or transcribed value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub device: String,
    pub workload: String,
    pub size: u64,
    pub precision: Precision,
    pub metric: Metric,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// Uniqueness key of a record.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordKey {
    pub device: String,
    pub workload: String,
    pub size: u64,
    pub precision: Precision,
    pub metric: Metric,
}

impl Record {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            device: self.device.clone(),
            workload: self.workload.clone(),
            size: self.size,
            precision: self.precision,
            metric: self.metric,
        }
    }
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {}, {})",
            self.device, self.workload, self.size, self.precision, self.metric
        )
    }
}

/// Records with unique keys, kept in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultSet {
    records: Vec<Record>,
    index: BTreeMap<RecordKey, usize>,
}

impl ResultSet {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        let mut rs = ResultSet::default();
        for r in records {
            rs.push(r)?;
        }
        Ok(rs)
    }

    pub fn push(&mut self, record: Record) -> Result<()> {
        if !record.value.is_finite() {
            return Err(Error::Config(format!(
                "non-finite value for {}",
                record.key()
            )));
        }
        let key = record.key();
        if self.index.contains_key(&key) {
            return Err(Error::DuplicateKey(key.to_string()));
        }
        self.index.insert(key, self.records.len());
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(
        &self,
        device: &DeviceKey,
        workload: &str,
        size: u64,
        metric: Metric,
    ) -> Option<f64> {
        let key = RecordKey {
            device: device.device.clone(),
            workload: workload.to_owned(),
            size,
            precision: device.precision,
            metric,
        };
        self.index.get(&key).map(|&i| self.records[i].value)
    }

    /// Distinct (device, precision) pairs in order of first appearance.
    pub fn devices(&self) -> Vec<DeviceKey> {
        let mut out: Vec<DeviceKey> = Vec::new();
        for r in &self.records {
            let d = DeviceKey {
                device: r.device.clone(),
                precision: r.precision,
            };
            if !out.contains(&d) {
                out.push(d);
            }
        }
        out
    }
}

/// The bundled dataset of figure coordinates and table cells.
pub fn paper_dataset() -> ResultSet {
    parse_csv(PAPER_DATA).expect("bundled dataset is valid")
}

/// Loads a CSV or JSON results file, or the bundled dataset for [`EMBEDDED`].
///
/// JSON may be an array of records or an array of benchmark results; the
/// latter become records for device `local`.
pub fn load_results(path: &str) -> Result<ResultSet> {
    if path == EMBEDDED {
        return Ok(paper_dataset());
    }
    parse_results(&std::fs::read_to_string(Path::new(path))?)
}

/// Parses results text, choosing JSON when it starts with `[`.
pub fn parse_results(text: &str) -> Result<ResultSet> {
    if text.trim_start().starts_with('[') {
        parse_json(text)
    } else {
        parse_csv(text)
    }
}

fn physical_line(text: &str, byte: u64) -> u64 {
    let bytes = text.as_bytes();
    let mut end = (byte as usize).min(bytes.len());
    while end < bytes.len() && matches!(bytes[end], b'\n' | b'\r') {
        end += 1;
    }
    1 + bytes[..end].iter().filter(|&&b| b == b'\n').count() as u64
}

pub(crate) const CSV_HEADER: [&str; 6] =
    ["device", "workload", "size", "precision", "metric", "value"];

/// `device,workload,size,precision,metric,value[,source]` with a header row.
/// Lines starting with `#` are comments. An empty input is an empty set.
pub fn parse_csv(text: &str) -> Result<ResultSet> {
    // Blank out comments so reported positions stay physical lines.
    let uncommented: String = text
        .split_inclusive('\n')
        .map(|l| {
            if l.trim_start().starts_with('#') {
                "\n"
            } else {
                l
            }
        })
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(false)
        .from_reader(uncommented.as_bytes());
    let mut rs = ResultSet::default();
    let mut has_source = None;
    for row in reader.records() {
        let row = row?;
        let line = row
            .position()
            .map_or(0, |p| physical_line(&uncommented, p.byte()));
        let err = |message: String| Error::Parse { line, message };
        let Some(with_source) = has_source else {
            let fields: Vec<&str> = row.iter().map(str::trim).collect();
            let with_source = match fields.as_slice() {
                f if f == CSV_HEADER => false,
                [head @ .., "source"] if head == CSV_HEADER => true,
                _ => {
                    return Err(err(format!(
                        "expected header {}[,source]",
                        CSV_HEADER.join(",")
                    )))
                }
            };
            has_source = Some(with_source);
            continue;
        };
        let expected = if with_source { 7 } else { 6 };
        if row.len() != expected {
            return Err(err(format!(
                "expected {expected} fields, found {}",
                row.len()
            )));
        }
        let f = |i: usize| row[i].trim();
        let size = f(2)
            .parse::<u64>()
            .map_err(|e| err(format!("size {:?}: {e}", f(2))))?;
        let precision = f(3).parse::<Precision>().map_err(|e| err(e.to_string()))?;
        let metric = f(4).parse::<Metric>().map_err(|e| err(e.to_string()))?;
        let value = f(5)
            .parse::<f64>()
            .map_err(|e| err(format!("value {:?}: {e}", f(5))))?;
        let source = (with_source && !f(6).is_empty()).then(|| f(6).to_owned());
        rs.push(Record {
            device: f(0).to_owned(),
            workload: f(1).to_owned(),
            size,
            precision,
            metric,
            value,
            source,
        })
        .map_err(|e| match e {
            Error::DuplicateKey(k) => Error::DuplicateKey(format!("{k} at line {line}")),
            other => err(other.to_string()),
        })?;
    }
    Ok(rs)
}

/// JSON array of records, or of benchmark results.
pub fn parse_json(text: &str) -> Result<ResultSet> {
    let values: Vec<serde_json::Value> = serde_json::from_str(text)?;
    let mut rs = ResultSet::default();
    for v in values {
        if v.get("status").is_some() {
            let b: BenchResult = serde_json::from_value(v)?;
            for r in bench_records(&b) {
                rs.push(r)?;
            }
        } else {
            rs.push(serde_json::from_value(v)?)?;
        }
    }
    Ok(rs)
}

/// Records derived from a successful benchmark under device `local`.
pub fn bench_records(b: &BenchResult) -> Vec<Record> {
    if b.status != Status::Ok {
        return Vec::new();
    }
    let efficiency = match (b.gflops_mean, b.power_w_mean) {
        (Some(g), Some(w)) if w > 0.0 => Some(g / w),
        _ => None,
    };
    [
        (Metric::TimeS, b.mean_s),
        (Metric::Gflops, b.gflops_mean),
        (Metric::GflopsPerW, efficiency),
        (Metric::EnergyJ, b.energy_j),
    ]
    .into_iter()
    .filter_map(|(metric, value)| {
        Some(Record {
            device: "local".into(),
            workload: b.workload.clone(),
            size: b.size as u64,
            precision: b.precision,
            metric,
            value: value?,
            source: None,
        })
    })
    .collect()
}
