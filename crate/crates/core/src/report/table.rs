use super::{Metric, ResultSet};
use crate::error::{Error, Result};
use crate::grid::Precision;
use crate::perf;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

/// A device label together with the precision it ran at.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DeviceKey {
    pub device: String,
    pub precision: Precision,
}

impl DeviceKey {
    pub fn new(device: &str, precision: Precision) -> Self {
        DeviceKey {
            device: device.to_owned(),
            precision,
        }
    }
}

impl FromStr for DeviceKey {
    type Err = Error;

    /// `"<device>,<precision>"`, e.g. `"CPU M1,fp16"`.
    fn from_str(s: &str) -> Result<Self> {
        let (device, precision) = s.rsplit_once(',').ok_or_else(|| {
            Error::Config(format!("expected \"<device>,<precision>\", got {s:?}"))
        })?;
        let device = device.trim();
        if device.is_empty() {
            return Err(Error::Config(format!("empty device label in {s:?}")));
        }
        Ok(DeviceKey::new(device, precision.parse()?))
    }
}

impl fmt::Display for DeviceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.device, self.precision)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableKind {
    Speedup,
    Efficiency,
    Raw,
}

impl FromStr for TableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "speedup" => Ok(TableKind::Speedup),
            "efficiency" => Ok(TableKind::Efficiency),
            "raw" => Ok(TableKind::Raw),
            other => Err(Error::Config(format!(
                "unknown report kind {other:?}; expected speedup, efficiency or raw"
            ))),
        }
    }
}

/// One benchmark row; `cells[i]` belongs to `Table::columns[i]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub workload: String,
    pub size: u64,
    /// Metric the ratio was taken on.
    pub metric: Metric,
    pub cells: Vec<Option<f64>>,
}

/// Ratios against a baseline device, devices as columns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub title: String,
    pub baseline: DeviceKey,
    pub columns: Vec<DeviceKey>,
    pub rows: Vec<TableRow>,
}

impl Table {
    /// Column header: the bare device when it shares the baseline's precision.
    pub fn column_label(&self, i: usize) -> String {
        let c = &self.columns[i];
        if c.precision == self.baseline.precision {
            c.device.clone()
        } else {
            format!("{} {}", c.device, c.precision)
        }
    }

    pub fn cell(&self, workload: &str, size: u64, device: &str) -> Option<f64> {
        let col = self.columns.iter().position(|c| c.device == device)?;
        self.rows
            .iter()
            .find(|r| r.workload == workload && r.size == size)
            .and_then(|r| r.cells[col])
    }
}

/// Baseline (workload, size) pairs: workloads in order of first appearance, sizes ascending.
fn default_rows(rs: &ResultSet, baseline: &DeviceKey) -> Vec<(String, u64)> {
    let mut workloads: Vec<&str> = Vec::new();
    let mut rows: Vec<(String, u64)> = Vec::new();
    for r in rs.records() {
        if r.device == baseline.device && r.precision == baseline.precision {
            if !workloads.contains(&r.workload.as_str()) {
                workloads.push(&r.workload);
            }
            let key = (r.workload.clone(), r.size);
            if !rows.contains(&key) {
                rows.push(key);
            }
        }
    }
    rows.sort_by_key(|(w, s)| (workloads.iter().position(|x| x == w), *s));
    rows
}

/// Metric a row is compared on when none is forced.
fn pick_metric(
    rs: &ResultSet,
    baseline: &DeviceKey,
    workload: &str,
    size: u64,
    kind: TableKind,
) -> Option<Metric> {
    let prefs: &[Metric] = match kind {
        TableKind::Efficiency => &[Metric::GflopsPerW],
        _ => &[Metric::TimeS, Metric::Gflops],
    };
    prefs
        .iter()
        .copied()
        .find(|&m| rs.get(baseline, workload, size, m).is_some())
}

fn ratio_table(
    rs: &ResultSet,
    kind: TableKind,
    baseline: &DeviceKey,
    rows: Option<&[(String, u64)]>,
    candidates: Option<&[DeviceKey]>,
    metric: Option<Metric>,
) -> Result<Table> {
    let rows = match rows {
        Some(r) => r.to_vec(),
        None => {
            let rows = default_rows(rs, baseline);
            if rows.is_empty() {
                return Err(Error::MissingBaseline(format!("no records for {baseline}")));
            }
            rows
        }
    };
    let columns = match candidates {
        Some(c) => c.to_vec(),
        None => rs
            .devices()
            .into_iter()
            .filter(|d| d.precision == baseline.precision && d != baseline)
            .collect(),
    };
    let mut gaps = Vec::new();
    let mut out = Vec::new();
    for (workload, size) in rows {
        let m = metric.or_else(|| pick_metric(rs, baseline, &workload, size, kind));
        let Some((m, base)) = m.and_then(|m| Some((m, rs.get(baseline, &workload, size, m)?)))
        else {
            let what = metric.map_or_else(|| "any metric".to_owned(), |m| m.to_string());
            gaps.push(format!("{workload} {size} ({what})"));
            continue;
        };
        let cells = columns
            .iter()
            .map(|c| {
                let v = rs.get(c, &workload, size, m)?;
                perf::speedup(base, v, m.direction()).ok()
            })
            .collect();
        out.push(TableRow {
            workload,
            size,
            metric: m,
            cells,
        });
    }
    if !gaps.is_empty() {
        return Err(Error::MissingBaseline(format!(
            "{baseline} lacks {}",
            gaps.join(", ")
        )));
    }
    let title = match kind {
        TableKind::Efficiency => format!(
            "Efficiency gain over {} {}",
            baseline.device, baseline.precision
        ),
        _ => format!("Speedup from {} {}", baseline.device, baseline.precision),
    };
    Ok(Table {
        title,
        baseline: baseline.clone(),
        columns,
        rows: out,
    })
}

/// Speedup of every candidate over `baseline`. Each row compares one metric:
/// `metric` if given, else time when the baseline has it, else GFLOPS. Time
/// metrics use `baseline / candidate`, rates `candidate / baseline`; missing
/// candidates are empty cells.
///
/// `rows` defaults to every (workload, size) the baseline has; `candidates`
/// to every other device at the baseline's precision, in order of appearance.
pub fn speedup_table(
    rs: &ResultSet,
    baseline: &DeviceKey,
    rows: Option<&[(String, u64)]>,
    candidates: Option<&[DeviceKey]>,
    metric: Option<Metric>,
) -> Result<Table> {
    ratio_table(rs, TableKind::Speedup, baseline, rows, candidates, metric)
}

/// GFLOPS/W of every candidate relative to `baseline`.
pub fn efficiency_table(
    rs: &ResultSet,
    baseline: &DeviceKey,
    rows: Option<&[(String, u64)]>,
    candidates: Option<&[DeviceKey]>,
) -> Result<Table> {
    ratio_table(
        rs,
        TableKind::Efficiency,
        baseline,
        rows,
        candidates,
        Some(Metric::GflopsPerW),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{paper_dataset, parse_csv};

    const FP16: Precision = Precision::Fp16Storage;

    fn baseline() -> DeviceKey {
        DeviceKey::new("CPU M1", FP16)
    }

    #[test]
    fn device_key_parsing() {
        let d: DeviceKey = "CPU M4 Pro, fp16".parse().unwrap();
        assert_eq!(d, DeviceKey::new("CPU M4 Pro", FP16));
        assert_eq!(d.to_string(), "CPU M4 Pro,fp16");
        assert!("CPU M1".parse::<DeviceKey>().is_err());
        assert!(",fp16".parse::<DeviceKey>().is_err());
        assert!("CPU M1,fp8".parse::<DeviceKey>().is_err());
    }

    #[test]
    fn paper_spot_cells() {
        let t = speedup_table(&paper_dataset(), &baseline(), None, None, None).unwrap();
        let labels: Vec<String> = (0..t.columns.len()).map(|i| t.column_label(i)).collect();
        assert_eq!(
            labels,
            ["GPU M1", "ANE M1", "CPU M4 Pro", "GPU M4 Pro", "ANE M4 Pro"]
        );
        let close = |w: &str, s: u64, d: &str, want: f64| {
            let got = t.cell(w, s, d).unwrap();
            assert!(
                (got / want - 1.0).abs() < 0.02,
                "{w} {s} {d}: {got} vs {want}"
            );
        };
        close("jacobi", 4096, "GPU M1", 8.57);
        close("jacobi", 8192, "GPU M1", 9.47);
        close("multigrid", 8192, "GPU M4 Pro", 25.75);
        close("multigrid", 4096, "ANE M4 Pro", 17.40);
        close("gemm", 4096, "ANE M1", 2.70);
        assert_eq!(t.cell("gemm", 8192, "ANE M1"), None);
        let row = t.rows.iter().find(|r| r.workload == "multigrid").unwrap();
        assert_eq!(row.metric, Metric::TimeS);
        let row = t.rows.iter().find(|r| r.workload == "gemm").unwrap();
        assert_eq!(row.metric, Metric::Gflops);
    }

    #[test]
    fn baseline_against_itself() {
        let rs = paper_dataset();
        let rows = [("jacobi".to_owned(), 4096)];
        let t = speedup_table(&rs, &baseline(), Some(&rows), Some(&[baseline()]), None).unwrap();
        assert_eq!(t.rows[0].cells, vec![Some(1.0)]);
    }

    #[test]
    fn missing_baseline_lists_gaps() {
        let rs = paper_dataset();
        let rows = [
            ("gemm".to_owned(), 12288),
            ("jacobi".to_owned(), 4096),
            ("jacobi".to_owned(), 7),
        ];
        match speedup_table(&rs, &baseline(), Some(&rows), None, None) {
            Err(Error::MissingBaseline(msg)) => {
                assert!(
                    msg.contains("gemm 12288") && msg.contains("jacobi 7"),
                    "{msg}"
                );
                assert!(!msg.contains("jacobi 4096"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn absent_baseline_is_an_error() {
        let rs = paper_dataset();
        let nobody = DeviceKey::new("Nope", FP16);
        assert!(matches!(
            speedup_table(&rs, &nobody, None, None, None),
            Err(Error::MissingBaseline(_))
        ));
        assert!(matches!(
            efficiency_table(&ResultSet::default(), &baseline(), None, None),
            Err(Error::MissingBaseline(_))
        ));
    }

    #[test]
    fn forced_metric_and_efficiency() {
        let rs = paper_dataset();
        let rows = [("multigrid".to_owned(), 4096)];
        let t = speedup_table(&rs, &baseline(), Some(&rows), None, Some(Metric::EnergyJ)).unwrap();
        assert_eq!(t.rows[0].metric, Metric::EnergyJ);
        let rows = [("jacobi".to_owned(), 4096)];
        let t = efficiency_table(&rs, &baseline(), Some(&rows), None).unwrap();
        assert_eq!(t.rows[0].metric, Metric::GflopsPerW);
        assert!(t.cell("jacobi", 4096, "ANE M1").unwrap() > 1.0);
    }

    #[test]
    fn default_rows_ordering() {
        let rs = parse_csv(
            "device,workload,size,precision,metric,value\n\
             B,w2,8,fp32,gflops,1\nB,w1,16,fp32,gflops,1\nB,w2,4,fp32,gflops,2\nC,w2,4,fp32,gflops,4\n",
        )
        .unwrap();
        let t =
            speedup_table(&rs, &DeviceKey::new("B", Precision::Fp32), None, None, None).unwrap();
        let order: Vec<(&str, u64)> = t
            .rows
            .iter()
            .map(|r| (r.workload.as_str(), r.size))
            .collect();
        assert_eq!(order, [("w2", 4), ("w2", 8), ("w1", 16)]);
        assert_eq!(t.cell("w2", 4, "C"), Some(2.0));
        assert_eq!(t.cell("w2", 8, "C"), None);
    }
}
