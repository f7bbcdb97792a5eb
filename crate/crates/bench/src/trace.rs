//! Resource-monitoring trace files.
//!
//! A trace is CSV with exactly these columns:
//! `timestamp_ms,resource_type,utilization,requested_capacity,current_load,response_time_ms`.
//! [`write_trace`] emits the canonical form: that header, columns in that
//! order, `\n` line endings and shortest round-trip decimal numbers.
//! Loading a canonical file and writing it back reproduces it byte for byte.

use std::io::{Read, Write};
use std::path::Path;

use rlsched_core::workload::{validate_trace, TraceError, TraceRecord};
use rlsched_core::Resource;

pub const COLUMNS: [&str; 6] = [
    "timestamp_ms",
    "resource_type",
    "utilization",
    "requested_capacity",
    "current_load",
    "response_time_ms",
];

#[derive(Debug, thiserror::Error)]
pub enum TraceFileError {
    #[error("trace io: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("trace schema: {0}")]
    Schema(String),
    #[error("trace line {line}: timestamp decreases")]
    Order { line: u64 },
}

impl From<TraceError> for TraceFileError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Order { line } => TraceFileError::Order { line },
            TraceError::Field { line, field, reason } => TraceFileError::Parse {
                line,
                message: format!("{field}: {reason}"),
            },
        }
    }
}

fn csv_error(e: csv::Error) -> TraceFileError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TraceFileError::Io(io),
        kind => TraceFileError::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRecord>, TraceFileError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers().map_err(csv_error)?.clone();
    let mut index = [0usize; 6];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| TraceFileError::Schema(format!("missing column `{name}`")))?;
    }
    if let Some(extra) = headers.iter().find(|h| !COLUMNS.contains(&h.trim())) {
        return Err(TraceFileError::Schema(format!("unexpected column `{extra}`")));
    }

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        let get = |i: usize| row.get(index[i]).unwrap_or("").trim();
        let num = |i: usize| {
            get(i).parse::<f64>().map_err(|_| TraceFileError::Parse {
                line,
                message: format!("{}: not a number: `{}`", COLUMNS[i], get(i)),
            })
        };
        let resource_type = Resource::from_name(get(1)).ok_or_else(|| TraceFileError::Parse {
            line,
            message: format!("resource_type: unknown `{}`", get(1)),
        })?;
        let current_load = get(4).parse::<u64>().map_err(|_| TraceFileError::Parse {
            line,
            message: format!("current_load: not a non-negative integer: `{}`", get(4)),
        })?;
        let record = TraceRecord {
            timestamp_ms: num(0)?,
            resource_type,
            utilization: num(2)?,
            requested_capacity: num(3)?,
            current_load,
            response_time_ms: num(5)?,
        };
        record.validate(line)?;
        if let Some(prev) = out.last().map(|r: &TraceRecord| r.timestamp_ms) {
            if record.timestamp_ms < prev {
                return Err(TraceFileError::Order { line });
            }
        }
        out.push(record);
    }
    Ok(out)
}

pub fn write_trace_to<W: Write>(records: &[TraceRecord], output: W) -> Result<(), TraceFileError> {
    validate_trace(records)?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(output);
    writer.write_record(COLUMNS).map_err(csv_error)?;
    for r in records {
        writer
            .write_record([
                r.timestamp_ms.to_string(),
                r.resource_type.name().to_string(),
                r.utilization.to_string(),
                r.requested_capacity.to_string(),
                r.current_load.to_string(),
                r.response_time_ms.to_string(),
            ])
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRecord>, TraceFileError> {
    read_trace(std::fs::File::open(path)?)
}

pub fn write_trace(records: &[TraceRecord], path: &Path) -> Result<(), TraceFileError> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_trace_to(records, file)
}
