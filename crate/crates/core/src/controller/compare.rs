use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closed_loop::Recording;
use crate::eventlog::{reduce_log, split_traces, LogError, LogMeta};
use crate::plant::Trajectory;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("runs use different scan periods: {0} s vs {1} s")]
    StepMismatch(f64, f64),
    #[error(transparent)]
    Log(#[from] LogError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Comparison {
    /// Ticks present in both trajectories.
    pub compared_ticks: usize,
    /// Both runs cover the same number of ticks.
    pub lengths_equal: bool,
    pub max_level_diff: f64,
    /// Valve switch ticks paired in order, substituted minus original.
    pub switch_tick_diffs: Vec<i64>,
    /// Event activities agree on the shorter of the two logs.
    pub event_sequence_equal: bool,
    /// Both logs contain the same distinct complete-cycle sequences.
    pub cycle_sequences_equal: bool,
}

fn switch_ticks(t: &Trajectory) -> Vec<u64> {
    let mut prev = (false, false);
    let mut out = Vec::new();
    for row in &t.rows {
        let now = (row.inv, row.outv);
        if now != prev {
            out.push(row.tick);
        }
        prev = now;
    }
    out
}

fn cycles(rec: &Recording, meta: &LogMeta) -> Result<BTreeSet<Vec<String>>, LogError> {
    let log = split_traces(reduce_log(&rec.io_log)?, meta.clone()).complete();
    Ok(log
        .traces
        .iter()
        .map(|t| t.activities().map(str::to_string).collect())
        .collect())
}

/// Compare an original run with a substituted one over their common ticks.
/// `reset` is the activity that starts a cycle.
pub fn compare_trajectories(original: &Recording, substituted: &Recording, reset: &str) -> Result<Comparison, CompareError> {
    if (original.trajectory.dt - substituted.trajectory.dt).abs() > 1e-12 {
        return Err(CompareError::StepMismatch(original.trajectory.dt, substituted.trajectory.dt));
    }
    let a = &original.trajectory.rows;
    let b = &substituted.trajectory.rows;
    let compared_ticks = a.len().min(b.len());
    let max_level_diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x.level - y.level).abs())
        .fold(0.0, f64::max);
    let switch_tick_diffs = switch_ticks(&original.trajectory)
        .into_iter()
        .zip(switch_ticks(&substituted.trajectory))
        .map(|(x, y)| y as i64 - x as i64)
        .collect();

    let ea = reduce_log(&original.io_log)?;
    let eb = reduce_log(&substituted.io_log)?;
    let n = ea.len().min(eb.len());
    let event_sequence_equal = (n > 0 || ea.len() == eb.len())
        && ea[..n].iter().zip(&eb[..n]).all(|(x, y)| x.activity == y.activity);

    let meta = LogMeta {
        scenario: String::new(),
        reset: reset.to_string(),
        duration_s: 0.0,
        dt_s: original.trajectory.dt,
    };
    let cycle_sequences_equal = cycles(original, &meta)? == cycles(substituted, &meta)?;
    Ok(Comparison {
        compared_ticks,
        lengths_equal: a.len() == b.len(),
        max_level_diff,
        switch_tick_diffs,
        event_sequence_equal,
        cycle_sequences_equal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_loop::run_closed_loop;
    use crate::ladder::{c1, c2};
    use crate::plant::PlantConfig;

    #[test]
    fn identical_runs_compare_equal() {
        let rec = run_closed_loop(&c1(), &PlantConfig::p1(0.1), 100.0).unwrap();
        let cmp = compare_trajectories(&rec, &rec, "%IX0.1_false").unwrap();
        assert_eq!(cmp.compared_ticks, 1000);
        assert!(cmp.lengths_equal);
        assert_eq!(cmp.max_level_diff, 0.0);
        assert!(cmp.switch_tick_diffs.iter().all(|&d| d == 0));
        assert!(!cmp.switch_tick_diffs.is_empty());
        assert!(cmp.event_sequence_equal);
        assert!(cmp.cycle_sequences_equal);
    }

    #[test]
    fn different_controllers_differ() {
        let a = run_closed_loop(&c1(), &PlantConfig::p1(0.1), 200.0).unwrap();
        let b = run_closed_loop(&c2(), &PlantConfig::p1(0.1), 200.0).unwrap();
        let cmp = compare_trajectories(&a, &b, "%IX0.1_false").unwrap();
        assert!(cmp.max_level_diff > 10.0);
        assert!(!cmp.event_sequence_equal);
        assert!(!cmp.cycle_sequences_equal);
    }

    #[test]
    fn truncated_run_and_step_mismatch() {
        let a = run_closed_loop(&c1(), &PlantConfig::p1(0.1), 100.0).unwrap();
        let mut b = a.clone();
        b.trajectory.rows.truncate(500);
        let cmp = compare_trajectories(&a, &b, "%IX0.1_false").unwrap();
        assert!(!cmp.lengths_equal);
        assert_eq!(cmp.compared_ticks, 500);
        b.trajectory.dt = 0.2;
        assert!(matches!(compare_trajectories(&a, &b, "%IX0.1_false"), Err(CompareError::StepMismatch(..))));
    }
}
