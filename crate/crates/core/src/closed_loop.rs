//! Closed-loop runs of a controller against the tank plant, tapped into a
//! raw IO log.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::eventlog::IOSample;
use crate::ladder::{LadderError, LadderProgram, LadderRuntime};
use crate::plant::{Actuators, Plant, PlantConfig, PlantError, PlantState, Trajectory, ADDR_INV, ADDR_OUTV};

#[derive(Debug, Error)]
pub enum LoopError {
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Ladder(#[from] LadderError),
}

/// Trajectory and tapped IO log of one closed-loop run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Recording {
    pub trajectory: Trajectory,
    pub io_log: Vec<IOSample>,
}

impl Recording {
    pub fn new(dt: f64) -> Self {
        Recording {
            trajectory: Trajectory::new(dt),
            io_log: Vec::new(),
        }
    }
}

/// Sensor image keyed by input address.
pub fn input_image(state: &PlantState) -> BTreeMap<String, bool> {
    state
        .sensors
        .image()
        .iter()
        .map(|&(a, v)| (a.to_string(), v))
        .collect()
}

pub(crate) fn actuators_from(outputs: &BTreeMap<String, bool>) -> Actuators {
    Actuators {
        inv: outputs.get(ADDR_INV).copied().unwrap_or(false),
        outv: outputs.get(ADDR_OUTV).copied().unwrap_or(false),
    }
}

/// Append one tick of samples: every input, then every output, each in address order.
pub(crate) fn tap(
    log: &mut Vec<IOSample>,
    tick: u64,
    inputs: &BTreeMap<String, bool>,
    outputs: &BTreeMap<String, bool>,
) {
    for (address, &value) in inputs.iter().chain(outputs) {
        log.push(IOSample::new(tick, address.clone(), value));
    }
}

/// Run `program` against a fresh plant for `duration_s` seconds.
///
/// Per tick: read sensors, tap inputs, scan, tap outputs, apply outputs,
/// step the plant.
pub fn run_closed_loop(program: &LadderProgram, plant: &PlantConfig, duration_s: f64) -> Result<Recording, LoopError> {
    let mut runtime = LadderRuntime::new(program.clone())?;
    let mut plant = Plant::new(plant.clone())?;
    let ticks = plant.config().ticks_for(duration_s);
    let mut rec = Recording::new(plant.config().dt);
    for _ in 0..ticks {
        let state = *plant.state();
        let inputs = input_image(&state);
        let outputs = runtime.scan(&inputs)?;
        tap(&mut rec.io_log, state.tick, &inputs, &outputs);
        let act = actuators_from(&outputs);
        rec.trajectory.push(&state, act);
        plant.step(act.inv, act.outv);
    }
    Ok(rec)
}
