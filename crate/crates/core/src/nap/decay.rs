//! Per-place linear decay functions and token-movement counters.

use serde::{Deserialize, Serialize};

use super::sample::{NextLabel, TimedStateSample};
use crate::petri::{LabeledPetriNet, Marking, TransitionId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    /// Activation right after a token enters.
    pub beta: f64,
    /// Seconds until a place's activation reaches zero, per place.
    pub horizon: Vec<f64>,
}

/// `beta * max(0, 1 - (now - last) / horizon)`, or 0 if no token ever entered.
pub fn decay_value(params: &DecayParams, place: usize, t_now: f64, t_last: Option<f64>) -> f64 {
    match t_last {
        None => 0.0,
        Some(last) => {
            let elapsed = (t_now - last).max(0.0);
            if elapsed >= params.horizon[place] {
                return 0.0;
            }
            params.beta * (1.0 - elapsed / params.horizon[place]).max(0.0)
        }
    }
}

/// Last token-entry time and entry count of every place.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayTracker {
    last_entry: Vec<Option<f64>>,
    counts: Vec<u32>,
}

impl DecayTracker {
    pub fn new(places: usize) -> Self {
        DecayTracker {
            last_entry: vec![None; places],
            counts: vec![0; places],
        }
    }

    /// Zero the counters and register the tokens of `marking` as entering at `t`.
    /// Entry times of other places are kept.
    pub fn begin_cycle(&mut self, marking: &Marking, t: f64) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        for (i, &tokens) in marking.0.iter().enumerate() {
            if tokens > 0 {
                self.last_entry[i] = Some(t);
                self.counts[i] += tokens;
            }
        }
    }

    pub fn record_firing(&mut self, net: &LabeledPetriNet, t: TransitionId, time: f64) {
        for p in net.outputs(t) {
            self.last_entry[p.0] = Some(time);
            self.counts[p.0] += 1;
        }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn last_entry(&self, place: usize) -> Option<f64> {
        self.last_entry[place]
    }

    pub fn decay_vector(&self, params: &DecayParams, t_now: f64) -> Vec<f64> {
        self.last_entry
            .iter()
            .enumerate()
            .map(|(p, &last)| decay_value(params, p, t_now, last))
            .collect()
    }

    pub fn snapshot(&self, params: &DecayParams, t_now: f64, marking: &Marking, label: NextLabel) -> TimedStateSample {
        TimedStateSample {
            decay: self.decay_vector(params, t_now),
            counts: self.counts.clone(),
            marking: marking.0.clone(),
            label,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(horizon: f64) -> DecayParams {
        DecayParams {
            beta: 1.0,
            horizon: vec![horizon],
        }
    }

    #[test]
    fn activation_at_entry() {
        assert_eq!(decay_value(&params(10.0), 0, 3.0, Some(3.0)), 1.0);
    }

    #[test]
    fn fully_decayed_after_horizon() {
        assert_eq!(decay_value(&params(10.0), 0, 13.0, Some(3.0)), 0.0);
        assert_eq!(decay_value(&params(10.0), 0, 50.0, Some(3.0)), 0.0);
    }

    #[test]
    fn linear_midpoint() {
        assert!((decay_value(&params(10.0), 0, 4.0, Some(0.0)) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn never_entered_is_zero() {
        assert_eq!(decay_value(&params(10.0), 0, 4.0, None), 0.0);
    }

    proptest! {
        #[test]
        fn non_increasing_and_zero_at_horizon(
            last in 0.0f64..100.0,
            horizon in 0.01f64..50.0,
            beta in 0.01f64..5.0,
            a in 0.0f64..200.0,
            b in 0.0f64..200.0,
        ) {
            let p = DecayParams { beta, horizon: vec![horizon] };
            let (early, late) = if a <= b { (last + a, last + b) } else { (last + b, last + a) };
            let ve = decay_value(&p, 0, early, Some(last));
            let vl = decay_value(&p, 0, late, Some(last));
            prop_assert!(vl <= ve);
            prop_assert!((0.0..=beta).contains(&ve));
            let at_horizon = last + horizon;
            let v = decay_value(&p, 0, at_horizon, Some(last));
            if at_horizon - last >= horizon {
                prop_assert_eq!(v, 0.0);
            } else {
                prop_assert!(v <= beta * 1e-12);
            }
            prop_assert_eq!(decay_value(&p, 0, last + horizon + 1e-9 * horizon, Some(last)), 0.0);
        }
    }
}
