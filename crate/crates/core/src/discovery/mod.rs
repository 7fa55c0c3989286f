//! Petri net discovery from event logs.
//!
//! The directly-follows graph of the log is turned into a state-machine net
//! with exclusive-choice routing only: one place per activity ("`a` has just
//! happened") plus a source and a sink place, one labeled transition per
//! retained directly-follows edge `x -> a` moving the token from `p[x]` to
//! `p[a]`, and one hidden transition per end activity moving the token to
//! the sink. Same-tick merging leaves PLC logs strictly sequential, so no
//! concurrency detection is attempted.

mod dfg;
mod iso;

pub use dfg::{build_dfg, DirectlyFollowsGraph, Node};
pub use iso::structurally_isomorphic;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventlog::EventLog;
use crate::petri::{Arc, LabeledPetriNet, PetriError, Transition};
use crate::signal::{activity_class, SignalError};

pub const START_PLACE: &str = "p[START]";
pub const END_PLACE: &str = "p[END]";

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("cannot discover a model from an empty log")]
    NoModel,
    #[error("edge filter percentile must lie in [0, 1], got {0}")]
    BadPercentile(f64),
    #[error("activity `{activity}`: {source}")]
    Activity { activity: String, source: SignalError },
    #[error(transparent)]
    Net(#[from] PetriError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    /// Per source node, outgoing edges less frequent than this percentile of
    /// its outgoing frequencies are dropped. The most frequent edge is kept.
    pub edge_filter_percentile: f64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            edge_filter_percentile: 0.0,
        }
    }
}

pub fn activity_place(activity: &str) -> String {
    format!("p[{activity}]")
}

fn node_place(node: &Node) -> String {
    match node {
        Node::Start => START_PLACE.to_string(),
        Node::Activity(a) => activity_place(a),
        Node::End => END_PLACE.to_string(),
    }
}

fn node_name(node: &Node) -> &str {
    match node {
        Node::Start => "START",
        Node::Activity(a) => a,
        Node::End => "END",
    }
}

pub fn discover_net(log: &EventLog, cfg: &DiscoveryConfig) -> Result<LabeledPetriNet, DiscoveryError> {
    let p = cfg.edge_filter_percentile;
    if !(0.0..=1.0).contains(&p) {
        return Err(DiscoveryError::BadPercentile(p));
    }
    if log.traces.iter().all(|t| t.is_empty()) {
        return Err(DiscoveryError::NoModel);
    }
    let dfg = build_dfg(log).filtered(p);

    let mut places = BTreeSet::from([START_PLACE.to_string(), END_PLACE.to_string()]);
    let mut transitions = Vec::new();
    let mut arcs = Vec::new();
    for (from, to) in dfg.edges.keys() {
        let source = node_place(from);
        places.insert(source.clone());
        match to {
            Node::Activity(activity) => {
                let class = activity_class(activity).map_err(|source| DiscoveryError::Activity {
                    activity: activity.clone(),
                    source,
                })?;
                let id = format!("t[{} -> {}]", node_name(from), activity);
                let target = activity_place(activity);
                places.insert(target.clone());
                transitions.push(Transition::labeled(id.clone(), activity.clone(), class));
                arcs.push(Arc::new(source, id.clone()));
                arcs.push(Arc::new(id, target));
            }
            Node::End => {
                let id = format!("tau[{}]", node_name(from));
                transitions.push(Transition::hidden(id.clone()));
                arcs.push(Arc::new(source, id.clone()));
                arcs.push(Arc::new(id, END_PLACE));
            }
            Node::Start => unreachable!("no edge enters START"),
        }
    }
    let initial = BTreeMap::from([(START_PLACE.to_string(), 1)]);
    let final_marking = BTreeMap::from([(END_PLACE.to_string(), 1)]);
    Ok(LabeledPetriNet::new(places, transitions, arcs, &initial, &final_marking)?)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::eventlog::{Event, LogMeta, Trace};
    use crate::petri::{replay_trace, Marking};
    use crate::signal::Class;
    use proptest::prelude::*;

    const A: &str = "%IX0.0_true";
    const B: &str = "%QX0.0_true";
    const C: &str = "%IX0.0_false";

    pub(crate) fn log_of(traces: &[&[&str]]) -> EventLog {
        EventLog {
            meta: LogMeta {
                scenario: "toy".into(),
                reset: A.into(),
                duration_s: 0.0,
                dt_s: 1.0,
            },
            traces: traces
                .iter()
                .map(|t| Trace {
                    events: t
                        .iter()
                        .enumerate()
                        .map(|(i, a)| Event {
                            activity: a.to_string(),
                            class: activity_class(a).unwrap(),
                            tick: i as u64,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn two_activity_sequence() {
        let net = discover_net(&log_of(&[&[A, B]]), &DiscoveryConfig::default()).unwrap();
        assert_eq!(net.places().len(), 4);
        assert_eq!(net.transitions().len(), 3);
        assert_eq!(net.transitions().iter().filter(|t| t.is_hidden()).count(), 1);
        let enabled = net.enabled_transitions(net.initial_marking()).unwrap();
        assert_eq!(enabled.len(), 1);
        assert_eq!(net.transition(enabled[0]).label.as_deref(), Some(A));
        assert_eq!(net.transition(enabled[0]).class, Some(Class::Input));
        let r = replay_trace(&net, &log_of(&[&[A, B]]).traces[0]).unwrap();
        assert!(r.reached_final);
        assert_eq!(r.missing_tokens, 0);
    }

    #[test]
    fn empty_log_has_no_model() {
        let log = log_of(&[]);
        assert!(matches!(
            discover_net(&log, &DiscoveryConfig::default()),
            Err(DiscoveryError::NoModel)
        ));
        let bad = DiscoveryConfig {
            edge_filter_percentile: 1.5,
        };
        assert!(matches!(discover_net(&log_of(&[&[A]]), &bad), Err(DiscoveryError::BadPercentile(_))));
    }

    #[test]
    fn loop_produces_back_arc() {
        let net = discover_net(&log_of(&[&[A, B, C, B, C]]), &DiscoveryConfig::default()).unwrap();
        // the place after C feeds a transition that re-enters B's place
        let back = net.transition_id(&format!("t[{C} -> {B}]")).unwrap();
        assert_eq!(net.places()[net.inputs(back)[0].0], activity_place(C));
        let r = replay_trace(&net, &log_of(&[&[A, B, C, B, C]]).traces[0]).unwrap();
        assert_eq!(r.missing_tokens, 0);
        assert!(r.reached_final);
    }

    #[test]
    fn filter_drops_rare_edges() {
        let log = log_of(&[&[A, B], &[A, B], &[A, B], &[A, C]]);
        let all = discover_net(&log, &DiscoveryConfig::default()).unwrap();
        let filtered = discover_net(
            &log,
            &DiscoveryConfig {
                edge_filter_percentile: 1.0,
            },
        )
        .unwrap();
        assert!(all.transition_id(&format!("t[{A} -> {C}]")).is_some());
        assert!(filtered.transition_id(&format!("t[{A} -> {C}]")).is_none());
        assert!(filtered.transition_id(&format!("t[{A} -> {B}]")).is_some());
    }

    fn arb_log() -> impl Strategy<Value = Vec<Vec<usize>>> {
        proptest::collection::vec(proptest::collection::vec(0usize..5, 1..10), 1..8)
    }

    const ALPHABET: [&str; 5] = ["%IX0.0_true", "%IX0.0_false", "%IX0.1_true", "%QX0.0_true", "%QX0.0_false+%QX0.1_true"];

    proptest! {
        #[test]
        fn rediscovery_fits_and_is_well_formed(traces in arb_log()) {
            let names: Vec<Vec<&str>> = traces.iter().map(|t| t.iter().map(|&i| ALPHABET[i]).collect()).collect();
            let refs: Vec<&[&str]> = names.iter().map(|t| t.as_slice()).collect();
            let log = log_of(&refs);
            let net = discover_net(&log, &DiscoveryConfig::default()).unwrap();
            for trace in &log.traces {
                let r = replay_trace(&net, trace).unwrap();
                prop_assert_eq!(r.missing_tokens, 0);
                prop_assert!(r.reached_final);
            }
            for t in net.transition_ids() {
                prop_assert!(!net.inputs(t).is_empty());
                prop_assert!(!net.outputs(t).is_empty());
                let tr = net.transition(t);
                prop_assert_eq!(tr.label.is_some(), tr.class.is_some());
            }
            for (i, _) in net.places().iter().enumerate() {
                let p = crate::petri::PlaceId(i);
                prop_assert!(net.transition_ids().any(|t| net.inputs(t).contains(&p) || net.outputs(t).contains(&p)));
            }
            prop_assert_eq!(net.initial_marking().total(), 1);
            prop_assert_eq!(net.final_marking(), &{
                let mut m = Marking::zeros(net.place_count());
                m.0[net.place_id(END_PLACE).unwrap().0] = 1;
                m
            });
            let again = discover_net(&log, &DiscoveryConfig::default()).unwrap();
            prop_assert_eq!(again.to_json(), net.to_json());
        }
    }
}
