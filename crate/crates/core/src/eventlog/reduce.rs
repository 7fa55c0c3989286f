use std::collections::HashMap;

use log::warn;

use super::{Event, EventLog, IOSample, LogError, LogMeta, Trace};
use crate::signal::{contains_component, join_components, Class, Component};

/// Turn a raw IO log into change events.
///
/// Every address is assumed low before its first sample. Changes sharing a
/// tick and a class become one event whose activity joins the components in
/// address order.
pub fn reduce_log(samples: &[IOSample]) -> Result<Vec<Event>, LogError> {
    let mut last_value: HashMap<&str, bool> = HashMap::new();
    let mut events = Vec::new();
    let mut position: Option<(u64, Class)> = None;
    let mut pending: Vec<Component> = Vec::new();

    let flush = |pending: &mut Vec<Component>, position: Option<(u64, Class)>, events: &mut Vec<Event>| {
        if let (false, Some((tick, class))) = (pending.is_empty(), position) {
            events.push(Event {
                activity: join_components(pending),
                class,
                tick,
            });
            pending.clear();
        }
    };

    for sample in samples {
        if Class::of_address(&sample.address) != Some(sample.class) {
            return Err(LogError::Wiring {
                address: sample.address.clone(),
                class: sample.class,
            });
        }
        let here = (sample.tick, sample.class);
        if let Some(prev) = position {
            if here < prev {
                return Err(LogError::Ordering {
                    tick: sample.tick,
                    address: sample.address.clone(),
                });
            }
            if here != prev {
                flush(&mut pending, position, &mut events);
            }
        }
        position = Some(here);

        let before = last_value.insert(sample.address.as_str(), sample.value).unwrap_or(false);
        if before != sample.value {
            pending.push(Component::new(sample.address.clone(), sample.value));
        }
    }
    flush(&mut pending, position, &mut events);
    Ok(events)
}

/// Cut `events` into traces, starting a new trace at every event that
/// contains `meta.reset` as a component. A leading segment before the first
/// reset is kept as its own trace.
pub fn split_traces(events: Vec<Event>, meta: LogMeta) -> EventLog {
    let mut traces = Vec::new();
    let mut current = Trace::default();
    let mut seen_reset = false;
    for event in events {
        if contains_component(&event.activity, &meta.reset) {
            seen_reset = true;
            if !current.is_empty() {
                traces.push(std::mem::take(&mut current));
            }
        }
        current.events.push(event);
    }
    if !current.is_empty() {
        traces.push(current);
    }
    if !seen_reset && !traces.is_empty() {
        warn!("reset activity `{}` never occurs; log has a single trace", meta.reset);
    }
    EventLog { meta, traces }
}
