use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of the CSV trace format.
pub const TRACE_COLUMNS: [&str; 6] = ["iter", "elapsed_s", "energy", "best_energy", "cut_value", "event"];

/// One observation of a solver run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: u64,
    pub elapsed_s: f64,
    /// Ising energy of the sign of the current state.
    pub energy: f64,
    /// Lowest energy seen so far in the run.
    pub best_energy: f64,
    pub cut_value: Option<f64>,
    pub event: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "jsonl" => Ok(TraceFormat::Jsonl),
            other => Err(Error::InvalidParameter(format!("unknown trace format {other:?}"))),
        }
    }
}

fn check_monotone(records: &[TraceRecord]) -> Result<()> {
    for (k, w) in records.windows(2).enumerate() {
        if w[1].iter < w[0].iter {
            return Err(Error::TraceSchema(format!(
                "iteration counter decreases at record {}",
                k + 1
            )));
        }
    }
    Ok(())
}

pub fn write_trace<W: Write>(records: &[TraceRecord], sink: W, format: TraceFormat) -> Result<()> {
    match format {
        TraceFormat::Csv => write_trace_csv(records, sink),
        TraceFormat::Jsonl => write_trace_jsonl(records, sink),
    }
}

pub fn read_trace<R: Read>(source: R, format: TraceFormat) -> Result<Vec<TraceRecord>> {
    match format {
        TraceFormat::Csv => read_trace_csv(source),
        TraceFormat::Jsonl => read_trace_jsonl(std::io::BufReader::new(source)),
    }
}

/// CSV with header `iter,elapsed_s,energy,best_energy,cut_value,event`.
/// Floats use the shortest representation that parses back to the same
/// value.
pub fn write_trace_csv<W: Write>(records: &[TraceRecord], sink: W) -> Result<()> {
    check_monotone(records)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(TRACE_COLUMNS).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(source: R) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(TRACE_COLUMNS.iter().copied()) {
        return Err(Error::TraceSchema(format!(
            "expected header {:?}, found {:?}",
            TRACE_COLUMNS.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.deserialize::<TraceRecord>().enumerate() {
        let rec = rec.map_err(|e| Error::TraceSchema(format!("record {}: {e}", k + 1)))?;
        out.push(rec);
    }
    check_monotone(&out)?;
    Ok(out)
}

pub fn write_trace_jsonl<W: Write>(records: &[TraceRecord], mut sink: W) -> Result<()> {
    check_monotone(records)?;
    for r in records {
        serde_json::to_writer(&mut sink, r)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

pub fn read_trace_jsonl<R: BufRead>(source: R) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for (k, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord =
            serde_json::from_str(&line).map_err(|e| Error::TraceSchema(format!("line {}: {e}", k + 1)))?;
        out.push(rec);
    }
    check_monotone(&out)?;
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::TraceSchema(format!("{other:?}")),
    }
}
