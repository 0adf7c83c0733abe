use super::{Record, ResultSet, Table};
use crate::error::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Markdown,
    PlotData,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            "plot-data" => Ok(Format::PlotData),
            other => Err(Error::UnknownFormat(other.to_owned())),
        }
    }
}

/// A single document, or one file per series for plot data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Emitted {
    Document(Vec<u8>),
    Files(Vec<(String, Vec<u8>)>),
}

fn display_workload(w: &str) -> &str {
    match w {
        "gemm" => "GEMM",
        "jacobi" => "Jacobi",
        "multigrid" => "Multigrid",
        other => other,
    }
}

fn cell_text(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{v:.2}"))
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    out.trim_end_matches('-').to_owned()
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn markdown_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut s = String::new();
    let line = |s: &mut String, cells: &[String]| {
        s.push('|');
        for c in cells {
            let _ = write!(s, " {} |", c.replace('|', "\\|"));
        }
        s.push('\n');
    };
    line(&mut s, header);
    line(&mut s, &vec!["---".to_owned(); header.len()]);
    for r in rows {
        line(&mut s, r);
    }
    s.into_bytes()
}

fn json_bytes<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

#[derive(Serialize)]
struct JsonTable<'a> {
    title: &'a str,
    baseline: String,
    columns: Vec<String>,
    rows: Vec<JsonRow<'a>>,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    benchmark: &'a str,
    size: u64,
    metric: &'a str,
    cells: &'a [Option<f64>],
}

/// Renders a ratio table; text formats round cells to two decimals and show
/// missing cells as `-`.
pub fn emit_table(t: &Table, format: Format) -> Result<Emitted> {
    let labels: Vec<String> = (0..t.columns.len()).map(|i| t.column_label(i)).collect();
    let text_rows = || -> Vec<Vec<String>> {
        t.rows
            .iter()
            .map(|r| {
                let mut row = vec![display_workload(&r.workload).to_owned(), r.size.to_string()];
                row.extend(r.cells.iter().map(|&c| cell_text(c)));
                row
            })
            .collect()
    };
    Ok(match format {
        Format::Csv => {
            let mut header = vec!["benchmark".to_owned(), "size".to_owned()];
            header.extend(labels.iter().cloned());
            Emitted::Document(csv_bytes(&header, &text_rows())?)
        }
        Format::Markdown => {
            let mut header = vec!["Benchmark".to_owned(), "Size".to_owned()];
            header.extend(labels.iter().cloned());
            Emitted::Document(markdown_bytes(&header, &text_rows()))
        }
        Format::Json => Emitted::Document(json_bytes(&JsonTable {
            title: &t.title,
            baseline: t.baseline.to_string(),
            columns: labels,
            rows: t
                .rows
                .iter()
                .map(|r| JsonRow {
                    benchmark: &r.workload,
                    size: r.size,
                    metric: r.metric.as_str(),
                    cells: &r.cells,
                })
                .collect(),
        })?),
        Format::PlotData => {
            let mut series: BTreeMap<String, String> = BTreeMap::new();
            for r in &t.rows {
                for (i, c) in r.cells.iter().enumerate() {
                    let Some(v) = c else { continue };
                    let name = format!("{}_{}.dat", slug(&labels[i]), slug(&r.workload));
                    let body = series.entry(name).or_insert_with(|| {
                        format!("# {}: {} {}\n", t.title, labels[i], r.workload)
                    });
                    let _ = writeln!(body, "{} {}", r.size, v);
                }
            }
            Emitted::Files(
                series
                    .into_iter()
                    .map(|(k, v)| (k, v.into_bytes()))
                    .collect(),
            )
        }
    })
}

/// Renders records. CSV and JSON read back through `load_results` unchanged.
pub fn emit_records(rs: &ResultSet, format: Format) -> Result<Emitted> {
    let with_source = rs.records().iter().any(|r| r.source.is_some());
    let text_rows = || -> Vec<Vec<String>> {
        rs.records()
            .iter()
            .map(|r| {
                let mut row = vec![
                    r.device.clone(),
                    r.workload.clone(),
                    r.size.to_string(),
                    r.precision.to_string(),
                    r.metric.to_string(),
                    r.value.to_string(),
                ];
                if with_source {
                    row.push(r.source.clone().unwrap_or_default());
                }
                row
            })
            .collect()
    };
    let mut header: Vec<String> = super::CSV_HEADER.iter().map(|s| s.to_string()).collect();
    if with_source {
        header.push("source".into());
    }
    Ok(match format {
        Format::Csv => Emitted::Document(csv_bytes(&header, &text_rows())?),
        Format::Markdown => Emitted::Document(markdown_bytes(&header, &text_rows())),
        Format::Json => Emitted::Document(json_bytes(rs.records())?),
        Format::PlotData => {
            let mut series: BTreeMap<String, Vec<&Record>> = BTreeMap::new();
            for r in rs.records() {
                let name = format!(
                    "{}_{}_{}_{}.dat",
                    slug(&r.device),
                    r.precision,
                    slug(&r.workload),
                    r.metric
                );
                series.entry(name).or_default().push(r);
            }
            Emitted::Files(
                series
                    .into_iter()
                    .map(|(name, mut points)| {
                        points.sort_by_key(|r| r.size);
                        let head = points[0];
                        let mut body = format!(
                            "# {} {} {} {}\n",
                            head.device, head.precision, head.workload, head.metric
                        );
                        for p in points {
                            let _ = writeln!(body, "{} {}", p.size, p.value);
                        }
                        (name, body.into_bytes())
                    })
                    .collect(),
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Precision;
    use crate::report::{paper_dataset, parse_results, speedup_table, DeviceKey, Metric, TableRow};

    fn doc(e: Emitted) -> String {
        match e {
            Emitted::Document(b) => String::from_utf8(b).unwrap(),
            Emitted::Files(_) => panic!("expected a document"),
        }
    }

    fn one_cell() -> Table {
        Table {
            title: "Speedup from CPU M1 fp16".into(),
            baseline: DeviceKey::new("CPU M1", Precision::Fp16Storage),
            columns: vec![DeviceKey::new("GPU M1", Precision::Fp16Storage)],
            rows: vec![TableRow {
                workload: "jacobi".into(),
                size: 4096,
                metric: Metric::Gflops,
                cells: vec![Some(8.564202334630351)],
            }],
        }
    }

    #[test]
    fn unknown_format() {
        assert!(matches!(
            "xml".parse::<Format>(),
            Err(Error::UnknownFormat(_))
        ));
    }

    #[test]
    fn empty_table_csv_is_header() {
        let mut t = one_cell();
        t.rows.clear();
        assert_eq!(
            doc(emit_table(&t, Format::Csv).unwrap()),
            "benchmark,size,GPU M1\n"
        );
        let empty = ResultSet::default();
        assert_eq!(
            doc(emit_records(&empty, Format::Csv).unwrap()),
            "device,workload,size,precision,metric,value\n"
        );
    }

    #[test]
    fn one_cell_markdown_golden() {
        let md = doc(emit_table(&one_cell(), Format::Markdown).unwrap());
        assert_eq!(
            md,
            "| Benchmark | Size | GPU M1 |\n| --- | --- | --- |\n| Jacobi | 4096 | 8.56 |\n"
        );
    }

    #[test]
    fn table_json_and_plot_data() {
        let json = doc(emit_table(&one_cell(), Format::Json).unwrap());
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["columns"][0], "GPU M1");
        assert_eq!(v["rows"][0]["cells"][0], 8.564202334630351);
        match emit_table(&one_cell(), Format::PlotData).unwrap() {
            Emitted::Files(f) => {
                assert_eq!(f.len(), 1);
                assert_eq!(f[0].0, "gpu-m1_jacobi.dat");
                let body = String::from_utf8(f[0].1.clone()).unwrap();
                assert!(
                    body.ends_with(&format!("4096 {}\n", 8.564202334630351f64)),
                    "{body}"
                );
            }
            _ => panic!(),
        }
    }

    #[test]
    fn deterministic_and_round_trips() {
        let rs = paper_dataset();
        let a = doc(emit_records(&rs, Format::Json).unwrap());
        let b = doc(emit_records(&rs, Format::Json).unwrap());
        assert_eq!(a, b);
        let again = doc(emit_records(&parse_results(&a).unwrap(), Format::Json).unwrap());
        assert_eq!(a, again);
        let csv = doc(emit_records(&rs, Format::Csv).unwrap());
        assert_eq!(parse_results(&csv).unwrap(), rs);
        let t = speedup_table(
            &rs,
            &DeviceKey::new("CPU M1", Precision::Fp16Storage),
            None,
            None,
            None,
        )
        .unwrap();
        for f in [Format::Csv, Format::Markdown, Format::Json] {
            assert_eq!(emit_table(&t, f).unwrap(), emit_table(&t, f).unwrap());
        }
        assert!(!doc(emit_table(&t, Format::Csv).unwrap()).contains("8,57"));
    }

    #[test]
    fn record_plot_series() {
        let rs = paper_dataset();
        let Emitted::Files(files) = emit_records(&rs, Format::PlotData).unwrap() else {
            panic!()
        };
        let name = "ane-m1_fp16_gemm_gflops.dat";
        let body = &files.iter().find(|(n, _)| n == name).unwrap().1;
        let text = String::from_utf8(body.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("256 "));
        assert!(text.contains("4096 2567.23\n"));
        assert!(files.windows(2).all(|w| w[0].0 < w[1].0));
    }
}
