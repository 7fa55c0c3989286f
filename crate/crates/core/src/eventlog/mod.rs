//! Raw IO logs, change events and event logs.
//!
//! A tapped IO log holds one [`IOSample`] per address per scan. [`reduce_log`]
//! keeps only value changes and merges same-tick same-class changes into one
//! [`Event`]; [`split_traces`] cuts the event stream into traces at each
//! occurrence of the reset activity.

mod io;
mod reduce;

pub use io::{read_event_log, read_io_log, write_event_log, write_io_log};
pub use reduce::{reduce_log, split_traces};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{contains_component, Class, SignalError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IOSample {
    pub tick: u64,
    pub address: String,
    pub value: bool,
    pub class: Class,
}

impl IOSample {
    pub fn new(tick: u64, address: impl Into<String>, value: bool) -> Self {
        let address = address.into();
        let class = Class::of_address(&address).unwrap_or(Class::Input);
        IOSample {
            tick,
            address,
            value,
            class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub activity: String,
    pub class: Class,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub events: Vec<Event>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn starts_with_reset(&self, reset: &str) -> bool {
        self.events
            .first()
            .is_some_and(|e| contains_component(&e.activity, reset))
    }

    pub fn activities(&self) -> impl Iterator<Item = &str> {
        self.events.iter().map(|e| e.activity.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogMeta {
    pub scenario: String,
    pub reset: String,
    pub duration_s: f64,
    pub dt_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub meta: LogMeta,
    pub traces: Vec<Trace>,
}

impl EventLog {
    pub fn event_count(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    /// Traces bounded by a reset on both sides: they start with the reset
    /// activity and another trace follows them.
    pub fn complete(&self) -> EventLog {
        let n = self.traces.len();
        let traces = self
            .traces
            .iter()
            .take(n.saturating_sub(1))
            .filter(|t| t.starts_with_reset(&self.meta.reset))
            .cloned()
            .collect();
        EventLog {
            meta: self.meta.clone(),
            traces,
        }
    }

    /// Same metadata, a subset of the traces.
    pub fn with_traces(&self, traces: Vec<Trace>) -> EventLog {
        EventLog {
            meta: self.meta.clone(),
            traces,
        }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("sample at tick {tick} for `{address}` is out of order")]
    Ordering { tick: u64, address: String },
    #[error("address `{address}` is recorded with class {class}")]
    Wiring { address: String, class: Class },
    #[error("trace {0} has no events")]
    EmptyTrace(usize),
    #[error("event log has no traces")]
    EmptyLog,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
