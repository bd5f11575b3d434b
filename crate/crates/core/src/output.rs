//! CSV and JSON writers. Floats are written in shortest round-trip form, so
//! reading a file back yields the in-memory values exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{ElementTrace, PopulationTrace, Sample};
use crate::sweep::{SweepRow, SweepTable};

pub const TRACE_HEADER: [&str; 7] = ["t", "O1", "O2", "O3", "trace", "n1", "n2"];
pub const SWEEP_HEADER: [&str; 6] = ["field1", "kappa", "O1_st", "O2_st", "converged", "t_converged"];

#[derive(Serialize, Deserialize)]
struct TraceRecord {
    t: f64,
    #[serde(rename = "O1")]
    o1: f64,
    #[serde(rename = "O2")]
    o2: f64,
    #[serde(rename = "O3")]
    o3: f64,
    trace: f64,
    n1: f64,
    n2: f64,
}

#[derive(Serialize, Deserialize)]
struct SweepRecord {
    field1: String,
    kappa: f64,
    #[serde(rename = "O1_st")]
    o1_st: f64,
    #[serde(rename = "O2_st")]
    o2_st: f64,
    converged: bool,
    t_converged: f64,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_trace_csv(trace: &PopulationTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    if trace.samples.is_empty() {
        w.write_record(TRACE_HEADER).map_err(csv_err(path))?;
    }
    for s in &trace.samples {
        w.serialize(TraceRecord {
            t: s.t,
            o1: s.o1,
            o2: s.o2,
            o3: s.o3,
            trace: s.trace,
            n1: s.n1,
            n2: s.n2,
        })
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<PopulationTrace> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let samples = r
        .deserialize()
        .map(|rec| {
            rec.map(|t: TraceRecord| Sample {
                t: t.t,
                o1: t.o1,
                o2: t.o2,
                o3: t.o3,
                trace: t.trace,
                n1: t.n1,
                n2: t.n2,
            })
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err(path))?;
    Ok(PopulationTrace { samples })
}

pub fn write_sweep_csv(table: &SweepTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    if table.rows.is_empty() {
        w.write_record(SWEEP_HEADER).map_err(csv_err(path))?;
    }
    for r in &table.rows {
        w.serialize(SweepRecord {
            field1: r.field1.clone(),
            kappa: r.kappa,
            o1_st: r.o1_st,
            o2_st: r.o2_st,
            converged: r.converged,
            t_converged: r.t_converged,
        })
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<SweepTable> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let rows = r
        .deserialize()
        .map(|rec| {
            rec.map(|s: SweepRecord| SweepRow {
                field1: s.field1,
                kappa: s.kappa,
                o1_st: s.o1_st,
                o2_st: s.o2_st,
                converged: s.converged,
                t_converged: s.t_converged,
            })
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err(path))?;
    Ok(SweepTable { rows })
}

/// One row per step: `t` followed by the real and imaginary part of every
/// watched element.
pub fn write_elements_csv(traces: &[ElementTrace], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let mut header = vec!["t".to_string()];
    for tr in traces {
        header.push(format!("re[{}]", tr.element));
        header.push(format!("im[{}]", tr.element));
    }
    w.write_record(&header).map_err(csv_err(path))?;
    let len = traces.iter().map(|t| t.values.len()).min().unwrap_or(0);
    let dt = traces.first().map_or(0.0, |t| t.dt);
    for i in 0..len {
        let mut rec = Vec::with_capacity(header.len());
        rec.push(i as f64 * dt);
        for tr in traces {
            rec.push(tr.values[i].re);
            rec.push(tr.values[i].im);
        }
        w.serialize(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Run summary paired with the hash of the manifest that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary<T> {
    pub manifest_hash: String,
    #[serde(flatten)]
    pub result: T,
}

pub fn write_summary_json<T: Serialize>(
    result: &T,
    manifest_hash: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_json(
        &Summary {
            manifest_hash: manifest_hash.to_string(),
            result,
        },
        path,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{BasisIndex, ElementIndex};
    use num_complex::Complex64;

    fn sample(t: f64) -> Sample {
        Sample {
            t,
            o1: 1.0 / 3.0,
            o2: 1e-300,
            o3: 0.1 + 0.2,
            trace: 1.0,
            n1: 2.5e17,
            n2: -0.0,
        }
    }

    #[test]
    fn trace_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let trace = PopulationTrace {
            samples: vec![sample(0.0), sample(0.1)],
        };
        write_trace_csv(&trace, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER.join(","));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(read_trace_csv(&path).unwrap(), trace);
    }

    #[test]
    fn single_sample_gives_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&PopulationTrace { samples: vec![sample(0.0)] }, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
    }

    #[test]
    fn sweep_roundtrip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let rows = (0..120)
            .map(|i| SweepRow {
                field1: ["fock", "coherent", "squeezed"][i / 40].into(),
                kappa: 0.05 * (1.0 + i as f64),
                o1_st: 0.3,
                o2_st: 0.7,
                converged: i % 7 != 0,
                t_converged: 123.456,
            })
            .collect();
        let table = SweepTable { rows };
        write_sweep_csv(&table, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), SWEEP_HEADER.join(","));
        assert_eq!(text.lines().count(), 121);
        assert_eq!(read_sweep_csv(&path).unwrap(), table);
    }

    #[test]
    fn element_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("elements.csv");
        let e = ElementIndex::diagonal(BasisIndex::new(2, 1, 0));
        let tr = ElementTrace {
            element: e,
            dt: 0.5,
            values: vec![Complex64::new(0.0, 0.0), Complex64::new(0.25, -1e-20)],
        };
        write_elements_csv(&[tr], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,\"re[2,1,0;2,1,0]\",\"im[2,1,0;2,1,0]\"");
        assert_eq!(lines[2], "0.5,0.25,-1e-20");
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = write_trace_csv(&PopulationTrace::default(), "/nonexistent/dir/x.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/x.csv"));
    }
}
