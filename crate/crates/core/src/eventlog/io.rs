//! File formats: IO log CSV and event log JSON.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Event, EventLog, IOSample, LogError, LogMeta, Trace};
use crate::signal::Class;

#[derive(Serialize, Deserialize)]
struct IoRow {
    tick: u64,
    address: String,
    value: bool,
    class: Class,
}

/// CSV with header `tick,address,value,class`.
pub fn write_io_log<W: Write>(samples: &[IOSample], out: W) -> Result<(), LogError> {
    let mut w = csv::Writer::from_writer(out);
    if samples.is_empty() {
        w.write_record(["tick", "address", "value", "class"])?;
    }
    for s in samples {
        w.serialize(IoRow {
            tick: s.tick,
            address: s.address.clone(),
            value: s.value,
            class: s.class,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_io_log<R: Read>(input: R) -> Result<Vec<IOSample>, LogError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: IoRow = row?;
        out.push(IOSample {
            tick: row.tick,
            address: row.address,
            value: row.value,
            class: row.class,
        });
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct LogDocument {
    meta: LogMeta,
    traces: Vec<TraceDocument>,
}

#[derive(Serialize, Deserialize)]
struct TraceDocument {
    events: Vec<Event>,
}

pub fn write_event_log<W: Write>(log: &EventLog, mut out: W) -> Result<(), LogError> {
    if log.traces.is_empty() {
        return Err(LogError::EmptyLog);
    }
    if let Some(i) = log.traces.iter().position(Trace::is_empty) {
        return Err(LogError::EmptyTrace(i));
    }
    let doc = LogDocument {
        meta: log.meta.clone(),
        traces: log
            .traces
            .iter()
            .map(|t| TraceDocument {
                events: t.events.clone(),
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut out, &doc).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_event_log<R: Read>(input: R) -> Result<EventLog, LogError> {
    let doc: LogDocument = serde_json::from_reader(input).map_err(|e| LogError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let log = EventLog {
        meta: doc.meta,
        traces: doc.traces.into_iter().map(|t| Trace { events: t.events }).collect(),
    };
    if let Some(i) = log.traces.iter().position(Trace::is_empty) {
        return Err(LogError::EmptyTrace(i));
    }
    Ok(log)
}
