//! Driving the plant with a mined net instead of the original program.
//!
//! Each scan the controller reports the input changes it sees, then keeps
//! taking decisions on its marking until it has to wait for the plant:
//!
//! * an enabled input transition whose label equals the observed change
//!   fires (rule 1);
//! * a marking enabling exactly one transition, an output one, fires it and
//!   writes its values to the output image (rule 2);
//! * a marking enabling an output transition next to other transitions is a
//!   choice resolved by the next-activity predictor (rule 3);
//! * hidden-only markings fire their first hidden transition, and the final
//!   marking starts the next cycle from the initial one.
//!
//! On the very first scan every input value counts as observed, and any
//! enabled input transition whose components are all among them may fire.

mod compare;
mod run;

pub use compare::{compare_trajectories, CompareError, Comparison};
pub use run::{check_wiring, run_substituted, ControllerOptions};

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nap::{DecayTracker, NapError, NapModel, NextLabel};
use crate::petri::{hidden_path, LabeledPetriNet, Marking, PetriError, TransitionId};
use crate::plant::PlantError;
use crate::signal::{components, join_components, Class, Component};

/// Upper bound on explored markings when looking for choice points.
pub const REACHABILITY_LIMIT: usize = 10_000;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Net(#[from] PetriError),
    #[error(transparent)]
    Predictor(#[from] NapError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error("choice at marking {0} needs a next-activity predictor")]
    NoPredictor(String),
    #[error("predictor carries no decay parameters")]
    MissingDecay,
    #[error("predictor expects {expected} features but the net yields {got}")]
    ModelMismatch { expected: usize, got: usize },
    #[error("net uses {class} address {address}, which the plant does not provide")]
    Wiring { address: String, class: Class },
    #[error("tick {tick}: observed `{activity}` matches no enabled transition")]
    UnexpectedInput { tick: u64, activity: String },
}

/// How the enabled set of a marking is handled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Situation {
    Final,
    Deadlock,
    HiddenOnly(TransitionId),
    /// Only input transitions, possibly with hidden ones: wait for the plant.
    AwaitInput,
    /// A single enabled transition, an output one.
    Emit(TransitionId),
    /// An output transition competing with other transitions.
    Choice,
}

/// Enabled transitions split by class, each in canonical order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnabledSets {
    pub inputs: Vec<TransitionId>,
    pub outputs: Vec<TransitionId>,
    pub hidden: Vec<TransitionId>,
}

pub fn classify_enabled(net: &LabeledPetriNet, marking: &Marking) -> Result<EnabledSets, PetriError> {
    let mut sets = EnabledSets::default();
    for t in net.enabled_transitions(marking)? {
        match net.transition(t).class {
            None => sets.hidden.push(t),
            Some(Class::Input) => sets.inputs.push(t),
            Some(Class::Output) => sets.outputs.push(t),
        }
    }
    Ok(sets)
}

pub fn classify(net: &LabeledPetriNet, marking: &Marking) -> Result<Situation, PetriError> {
    if marking == net.final_marking() {
        return Ok(Situation::Final);
    }
    let e = classify_enabled(net, marking)?;
    Ok(match (e.hidden.len(), e.inputs.len(), e.outputs.len()) {
        (0, 0, 0) => Situation::Deadlock,
        (_, 0, 0) => Situation::HiddenOnly(e.hidden[0]),
        (_, _, 0) => Situation::AwaitInput,
        (0, 0, 1) => Situation::Emit(e.outputs[0]),
        _ => Situation::Choice,
    })
}

/// Reachable markings (with the final marking looping back to the initial
/// one) whose enabled set is a choice.
pub fn choice_points(net: &LabeledPetriNet) -> Result<Vec<Marking>, PetriError> {
    let start = net.initial_marking().clone();
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut found = Vec::new();
    while let Some(m) = queue.pop_front() {
        if seen.len() > REACHABILITY_LIMIT {
            break;
        }
        if classify(net, &m)? == Situation::Choice {
            found.push(m.clone());
        }
        let next: Vec<Marking> = if &m == net.final_marking() {
            vec![net.initial_marking().clone()]
        } else {
            net.enabled_transitions(&m)?
                .into_iter()
                .map(|t| net.fire(&m, t))
                .collect::<Result<_, _>>()?
        };
        for n in next {
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(found)
}

pub fn needs_predictor(net: &LabeledPetriNet) -> Result<bool, PetriError> {
    Ok(!choice_points(net)?.is_empty())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCounts {
    pub r1: u64,
    pub r2: u64,
    pub r3: u64,
    pub hidden: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub rule_counts: RuleCounts,
    /// Observed input changes that matched no enabled transition.
    pub violations: u64,
    /// Times the final marking was reached or END was chosen.
    pub cycles: u64,
    pub deadlocked: bool,
    pub diagnostic: Option<String>,
}

enum Outcome {
    Acted,
    Wait,
}

pub struct ApproxController<'a> {
    net: &'a LabeledPetriNet,
    model: Option<&'a NapModel>,
    marking: Marking,
    tracker: DecayTracker,
    cycle_pending: bool,
    outputs: BTreeMap<String, bool>,
    previous_inputs: Option<BTreeMap<String, bool>>,
    strict: bool,
    report: RunReport,
}

impl<'a> ApproxController<'a> {
    /// `output_addresses` are written on every scan even when no transition
    /// ever sets them.
    pub fn new(
        net: &'a LabeledPetriNet,
        model: Option<&'a NapModel>,
        output_addresses: &[String],
        strict: bool,
    ) -> Result<Self, ControllerError> {
        if let Some(m) = model {
            let expected = m.feature_mean.len();
            if expected != 3 * net.place_count() {
                return Err(ControllerError::ModelMismatch {
                    expected,
                    got: 3 * net.place_count(),
                });
            }
        }
        let mut outputs: BTreeMap<String, bool> = output_addresses.iter().map(|a| (a.clone(), false)).collect();
        for t in net.transitions() {
            if let (Some(label), Some(Class::Output)) = (&t.label, t.class) {
                for c in components(label).map_err(|e| PetriError::InvalidNet(e.to_string()))? {
                    outputs.entry(c.address).or_insert(false);
                }
            }
        }
        Ok(ApproxController {
            net,
            model,
            marking: net.initial_marking().clone(),
            tracker: DecayTracker::new(net.place_count()),
            cycle_pending: true,
            outputs,
            previous_inputs: None,
            strict,
            report: RunReport::default(),
        })
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    pub fn outputs(&self) -> &BTreeMap<String, bool> {
        &self.outputs
    }

    pub fn report(&self) -> &RunReport {
        &self.report
    }

    pub fn into_report(self) -> RunReport {
        self.report
    }

    pub fn is_halted(&self) -> bool {
        self.report.deadlocked
    }

    fn describe_marking(&self) -> String {
        let marked: Vec<String> = self
            .marking
            .0
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(i, &k)| format!("{}={k}", self.net.places()[i]))
            .collect();
        format!("{{{}}}", marked.join(", "))
    }

    fn ensure_cycle_started(&mut self, time: f64) {
        if self.cycle_pending {
            self.tracker.begin_cycle(&self.marking, time);
            self.cycle_pending = false;
        }
    }

    fn fire(&mut self, t: TransitionId, time: f64) -> Result<(), ControllerError> {
        self.ensure_cycle_started(time);
        self.marking = self.net.fire(&self.marking, t)?;
        self.tracker.record_firing(self.net, t, time);
        Ok(())
    }

    fn emit(&mut self, t: TransitionId, time: f64) -> Result<(), ControllerError> {
        let label = self.net.transition(t).label.clone().expect("output transitions are labeled");
        for c in components(&label).map_err(|e| PetriError::InvalidNet(e.to_string()))? {
            self.outputs.insert(c.address, c.value);
        }
        self.fire(t, time)
    }

    fn start_next_cycle(&mut self) {
        self.marking = self.net.initial_marking().clone();
        self.cycle_pending = true;
        self.report.cycles += 1;
    }

    /// Fire the enabled input transition explained by `pending`, if any.
    fn match_observation(
        &mut self,
        pending: &mut BTreeSet<Component>,
        startup: bool,
        time: f64,
    ) -> Result<bool, ControllerError> {
        if pending.is_empty() {
            return Ok(false);
        }
        let observed = join_components(&pending.iter().cloned().collect::<Vec<_>>());
        for t in self.net.enabled_transitions(&self.marking)? {
            let tr = self.net.transition(t);
            if tr.class != Some(Class::Input) {
                continue;
            }
            let label = tr.label.as_deref().expect("input transitions are labeled");
            let hit = if startup {
                let parts = components(label).map_err(|e| PetriError::InvalidNet(e.to_string()))?;
                if parts.iter().all(|c| pending.contains(c)) {
                    parts.iter().for_each(|c| {
                        pending.remove(c);
                    });
                    true
                } else {
                    false
                }
            } else if label == observed {
                pending.clear();
                true
            } else {
                false
            };
            if hit {
                self.fire(t, time)?;
                self.report.rule_counts.r1 += 1;
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn choose(&mut self, time: f64) -> Result<Outcome, ControllerError> {
        let model = self
            .model
            .ok_or_else(|| ControllerError::NoPredictor(self.describe_marking()))?;
        let params = model.decay.as_ref().ok_or(ControllerError::MissingDecay)?;
        self.ensure_cycle_started(time);
        let sample = self.tracker.snapshot(params, time, &self.marking, NextLabel::End);
        let enabled = self.net.enabled_transitions(&self.marking)?;
        for (label, _) in model.predict_next(&sample)? {
            match label {
                NextLabel::Activity(a) => {
                    let Some(&t) = enabled
                        .iter()
                        .find(|&&t| self.net.transition(t).label.as_deref() == Some(a.as_str()))
                    else {
                        continue;
                    };
                    if self.net.transition(t).class == Some(Class::Output) {
                        self.emit(t, time)?;
                        self.report.rule_counts.r3 += 1;
                        return Ok(Outcome::Acted);
                    }
                    return Ok(Outcome::Wait);
                }
                NextLabel::End => {
                    let final_marking = self.net.final_marking().clone();
                    let path = hidden_path(self.net, &self.marking, |m| m == &final_marking);
                    if let Some(path) = path.filter(|p| !p.is_empty()) {
                        for t in path {
                            self.fire(t, time)?;
                            self.report.rule_counts.hidden += 1;
                        }
                        self.report.rule_counts.r3 += 1;
                        return Ok(Outcome::Acted);
                    }
                }
            }
        }
        Ok(Outcome::Wait)
    }

    /// One scan: take the input image, decide until waiting, and return the
    /// output image. The image holds its values between scans.
    pub fn control_step(
        &mut self,
        tick: u64,
        time: f64,
        inputs: &BTreeMap<String, bool>,
    ) -> Result<&BTreeMap<String, bool>, ControllerError> {
        if self.report.deadlocked {
            return Ok(&self.outputs);
        }
        let startup = self.previous_inputs.is_none();
        let mut pending: BTreeSet<Component> = inputs
            .iter()
            .filter(|(a, v)| startup || self.previous_inputs.as_ref().and_then(|p| p.get(*a)) != Some(v))
            .map(|(a, &v)| Component::new(a.clone(), v))
            .collect();
        self.previous_inputs = Some(inputs.clone());

        let limit = 4 * self.net.transitions().len() + 8;
        let mut rounds = 0;
        loop {
            rounds += 1;
            if rounds > limit {
                self.report.diagnostic = Some(format!(
                    "tick {tick}: decision round limit reached at marking {}",
                    self.describe_marking()
                ));
                break;
            }
            if self.match_observation(&mut pending, startup, time)? {
                continue;
            }
            match classify(self.net, &self.marking)? {
                Situation::Final => self.start_next_cycle(),
                Situation::Deadlock => {
                    self.report.deadlocked = true;
                    let mut msg = format!("tick {tick}: deadlock at marking {}", self.describe_marking());
                    if !pending.is_empty() {
                        let _ = write!(msg, " with unexplained input {}", join_components(&pending.iter().cloned().collect::<Vec<_>>()));
                    }
                    self.report.diagnostic = Some(msg);
                    return Ok(&self.outputs);
                }
                Situation::HiddenOnly(t) => {
                    self.fire(t, time)?;
                    self.report.rule_counts.hidden += 1;
                }
                Situation::AwaitInput => break,
                Situation::Emit(t) => {
                    self.emit(t, time)?;
                    self.report.rule_counts.r2 += 1;
                }
                Situation::Choice => match self.choose(time)? {
                    Outcome::Acted => {}
                    Outcome::Wait => break,
                },
            }
        }
        if !startup && !pending.is_empty() {
            let activity = join_components(&pending.iter().cloned().collect::<Vec<_>>());
            if self.strict {
                return Err(ControllerError::UnexpectedInput { tick, activity });
            }
            log::warn!("tick {tick}: observed {activity} matches no enabled transition");
            self.report.violations += 1;
        }
        Ok(&self.outputs)
    }
}
