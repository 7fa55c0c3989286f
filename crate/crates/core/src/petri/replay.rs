//! Token replay of activity sequences.

use std::collections::{HashSet, VecDeque};

use super::{LabeledPetriNet, Marking, PetriError, TransitionId};
use crate::eventlog::Trace;

/// Maximum number of hidden firings inserted to enable one labeled transition.
pub const HIDDEN_SEARCH_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayResult {
    pub reached_final: bool,
    pub fired: Vec<TransitionId>,
    /// Tokens that had to be created out of thin air; 0 means the trace fits.
    pub missing_tokens: u32,
}

/// What one replay step fired.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepFiring {
    pub hidden: Vec<TransitionId>,
    pub labeled: TransitionId,
    pub inserted: u32,
}

/// Breadth-first search over hidden-only firing sequences of length at most
/// [`HIDDEN_SEARCH_DEPTH`], exploring transitions in canonical order.
pub(crate) fn hidden_path(
    net: &LabeledPetriNet,
    start: &Marking,
    goal: impl Fn(&Marking) -> bool,
) -> Option<Vec<TransitionId>> {
    if goal(start) {
        return Some(Vec::new());
    }
    let hidden: Vec<TransitionId> = net
        .transition_ids()
        .filter(|&t| net.transition(t).is_hidden())
        .collect();
    if hidden.is_empty() {
        return None;
    }
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start.clone(), Vec::new())]);
    while let Some((m, path)) = queue.pop_front() {
        if path.len() == HIDDEN_SEARCH_DEPTH {
            continue;
        }
        for &t in &hidden {
            if !net.is_enabled(&m, t) {
                continue;
            }
            let mut next = m.clone();
            net.fire_in_place(&mut next, t);
            if !seen.insert(next.clone()) {
                continue;
            }
            let mut next_path = path.clone();
            next_path.push(t);
            if goal(&next) {
                return Some(next_path);
            }
            queue.push_back((next, next_path));
        }
    }
    None
}

/// Incremental replay over a net, one activity at a time.
#[derive(Debug, Clone)]
pub struct Replayer<'a> {
    net: &'a LabeledPetriNet,
    marking: Marking,
    fired: Vec<TransitionId>,
    missing: u32,
}

impl<'a> Replayer<'a> {
    pub fn new(net: &'a LabeledPetriNet) -> Self {
        Replayer {
            net,
            marking: net.initial_marking().clone(),
            fired: Vec::new(),
            missing: 0,
        }
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    pub fn missing_tokens(&self) -> u32 {
        self.missing
    }

    /// Fire the transition labeled `activity`, routing through hidden
    /// transitions or inserting missing tokens when it is not enabled.
    pub fn step(&mut self, activity: &str) -> Result<StepFiring, PetriError> {
        let net = self.net;
        let candidates: Vec<TransitionId> = net.transitions_labeled(activity).collect();
        if candidates.is_empty() {
            return Err(PetriError::UnknownActivity(activity.to_string()));
        }
        let enabled_candidate = |m: &Marking| candidates.iter().copied().find(|&t| net.is_enabled(m, t));

        let mut hidden = Vec::new();
        let mut inserted = 0;
        let chosen = match enabled_candidate(&self.marking) {
            Some(t) => t,
            None => match hidden_path(net, &self.marking, |m| enabled_candidate(m).is_some()) {
                Some(path) => {
                    for &h in &path {
                        net.fire_in_place(&mut self.marking, h);
                    }
                    hidden = path;
                    enabled_candidate(&self.marking).expect("search goal holds")
                }
                None => {
                    let t = candidates[0];
                    for p in net.inputs(t) {
                        if self.marking.0[p.0] == 0 {
                            self.marking.0[p.0] = 1;
                            inserted += 1;
                        }
                    }
                    t
                }
            },
        };
        net.fire_in_place(&mut self.marking, chosen);
        self.missing += inserted;
        self.fired.extend(hidden.iter().copied());
        self.fired.push(chosen);
        Ok(StepFiring {
            hidden,
            labeled: chosen,
            inserted,
        })
    }

    /// Route to the final marking through hidden transitions if possible.
    /// Returns the hidden transitions fired.
    pub fn finish(&mut self) -> Vec<TransitionId> {
        let target = self.net.final_marking().clone();
        match hidden_path(self.net, &self.marking, |m| *m == target) {
            Some(path) => {
                for &h in &path {
                    self.net.fire_in_place(&mut self.marking, h);
                }
                self.fired.extend(path.iter().copied());
                path
            }
            None => Vec::new(),
        }
    }

    pub fn into_result(self) -> ReplayResult {
        ReplayResult {
            reached_final: self.marking == *self.net.final_marking(),
            fired: self.fired,
            missing_tokens: self.missing,
        }
    }
}

pub fn replay_activities<'s>(
    net: &LabeledPetriNet,
    activities: impl IntoIterator<Item = &'s str>,
) -> Result<ReplayResult, PetriError> {
    let mut replayer = Replayer::new(net);
    for activity in activities {
        replayer.step(activity)?;
    }
    replayer.finish();
    Ok(replayer.into_result())
}

pub fn replay_trace(net: &LabeledPetriNet, trace: &Trace) -> Result<ReplayResult, PetriError> {
    replay_activities(net, trace.events.iter().map(|e| e.activity.as_str()))
}
