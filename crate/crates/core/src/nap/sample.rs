//! Timed state samples harvested while replaying an event log.

use std::fmt;
use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use super::decay::{DecayParams, DecayTracker};
use super::NapError;
use crate::eventlog::EventLog;
use crate::petri::{replay_trace, LabeledPetriNet, Replayer};

pub const END_LABEL: &str = "END";

/// What happens next: an activity, or the end of the case.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NextLabel {
    Activity(String),
    End,
}

impl fmt::Display for NextLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NextLabel::Activity(a) => f.write_str(a),
            NextLabel::End => f.write_str(END_LABEL),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedStateSample {
    pub decay: Vec<f64>,
    pub counts: Vec<u32>,
    pub marking: Vec<u32>,
    pub label: NextLabel,
}

impl TimedStateSample {
    /// Decay values, then counts, then marking.
    pub fn features(&self) -> Vec<f64> {
        self.decay
            .iter()
            .copied()
            .chain(self.counts.iter().map(|&c| f64::from(c)))
            .chain(self.marking.iter().map(|&m| f64::from(m)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    pub samples: Vec<TimedStateSample>,
    /// Traces left out because they do not replay without missing tokens.
    pub skipped: usize,
}

/// Horizon per place: twice the mean interval between token entries seen in
/// replay, or the longest trace duration for places entered at most once
/// per trace.
pub fn estimate_decay_params(net: &LabeledPetriNet, log: &EventLog) -> Result<DecayParams, NapError> {
    let dt = log.meta.dt_s;
    let n = net.place_count();
    let mut interval_sum = vec![0.0; n];
    let mut interval_count = vec![0usize; n];
    let mut longest: f64 = 0.0;
    for trace in &log.traces {
        if trace.is_empty() || replay_trace(net, trace)?.missing_tokens > 0 {
            continue;
        }
        let t0 = trace.events[0].tick as f64 * dt;
        let t_end = trace.events[trace.len() - 1].tick as f64 * dt;
        longest = longest.max(t_end - t0);
        let mut last: Vec<Option<f64>> = vec![None; n];
        for (i, &tokens) in net.initial_marking().0.iter().enumerate() {
            if tokens > 0 {
                last[i] = Some(t0);
            }
        }
        let mut replayer = Replayer::new(net);
        for event in &trace.events {
            let t = event.tick as f64 * dt;
            let step = replayer.step(&event.activity)?;
            for tr in step.hidden.iter().chain(std::iter::once(&step.labeled)) {
                for p in net.outputs(*tr) {
                    if let Some(prev) = last[p.0] {
                        interval_sum[p.0] += t - prev;
                        interval_count[p.0] += 1;
                    }
                    last[p.0] = Some(t);
                }
            }
        }
    }
    let fallback = if longest > 0.0 { longest } else { dt.max(1e-3) };
    let horizon = (0..n)
        .map(|p| {
            let mean = if interval_count[p] > 0 {
                interval_sum[p] / interval_count[p] as f64
            } else {
                0.0
            };
            if mean > 0.0 {
                2.0 * mean
            } else {
                fallback
            }
        })
        .collect();
    Ok(DecayParams { beta: 1.0, horizon })
}

/// Replay every fitting trace and take one sample before each event plus a
/// final END sample. Hidden firings move tokens but produce no sample.
pub fn sample_log(net: &LabeledPetriNet, log: &EventLog, params: &DecayParams) -> Result<SampleSet, NapError> {
    if params.horizon.len() != net.place_count() {
        return Err(NapError::Dimension {
            expected: net.place_count(),
            got: params.horizon.len(),
        });
    }
    let dt = log.meta.dt_s;
    let mut set = SampleSet::default();
    for (index, trace) in log.traces.iter().enumerate() {
        if trace.is_empty() {
            continue;
        }
        if replay_trace(net, trace)?.missing_tokens > 0 {
            warn!("trace {index} does not fit the net; skipped");
            set.skipped += 1;
            continue;
        }
        let mut tracker = DecayTracker::new(net.place_count());
        let mut replayer = Replayer::new(net);
        let t0 = trace.events[0].tick as f64 * dt;
        tracker.begin_cycle(replayer.marking(), t0);
        let mut t = t0;
        for event in &trace.events {
            t = event.tick as f64 * dt;
            set.samples.push(tracker.snapshot(
                params,
                t,
                replayer.marking(),
                NextLabel::Activity(event.activity.clone()),
            ));
            let step = replayer.step(&event.activity)?;
            for &h in &step.hidden {
                tracker.record_firing(net, h, t);
            }
            tracker.record_firing(net, step.labeled, t);
        }
        set.samples.push(tracker.snapshot(params, t, replayer.marking(), NextLabel::End));
    }
    Ok(set)
}

/// CSV export: `label,decay_*,count_*,marking_*` with one column per place.
pub fn write_samples_csv<W: Write>(net: &LabeledPetriNet, samples: &[TimedStateSample], out: W) -> Result<(), NapError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["label".to_string()];
    for prefix in ["decay", "count", "marking"] {
        header.extend(net.places().iter().map(|p| format!("{prefix}:{p}")));
    }
    w.write_record(&header)?;
    for s in samples {
        let mut row = vec![s.label.to_string()];
        row.extend(s.features().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
