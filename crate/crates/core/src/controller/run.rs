use log::info;

use super::{ApproxController, ControllerError, RunReport};
use crate::closed_loop::{actuators_from, input_image, tap, Recording};
use crate::nap::NapModel;
use crate::petri::LabeledPetriNet;
use crate::plant::{Plant, PlantConfig, ADDR_INV, ADDR_LLS, ADDR_MLS, ADDR_OUTV, ADDR_ULS};
use crate::signal::{components, Class};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ControllerOptions {
    /// Fail on an observed input change that no enabled transition explains.
    pub strict: bool,
}

/// Every address the net mentions must be a tank sensor or actuator.
pub fn check_wiring(net: &LabeledPetriNet) -> Result<(), ControllerError> {
    for t in net.transitions() {
        let (Some(label), Some(class)) = (&t.label, t.class) else {
            continue;
        };
        let known: &[&str] = match class {
            Class::Input => &[ADDR_ULS, ADDR_LLS, ADDR_MLS],
            Class::Output => &[ADDR_INV, ADDR_OUTV],
        };
        for c in components(label).map_err(|e| crate::petri::PetriError::InvalidNet(e.to_string()))? {
            if !known.contains(&c.address.as_str()) {
                return Err(ControllerError::Wiring {
                    address: c.address,
                    class,
                });
            }
        }
    }
    Ok(())
}

/// Run the mined controller against a fresh plant, tapping the same IO log
/// and trajectory as a closed-loop run. A deadlock ends the run early.
pub fn run_substituted(
    net: &LabeledPetriNet,
    model: Option<&NapModel>,
    plant: &PlantConfig,
    duration_s: f64,
    opts: ControllerOptions,
) -> Result<(Recording, RunReport), ControllerError> {
    check_wiring(net)?;
    let outputs = [ADDR_INV.to_string(), ADDR_OUTV.to_string()];
    let mut controller = ApproxController::new(net, model, &outputs, opts.strict)?;
    let mut plant = Plant::new(plant.clone())?;
    let dt = plant.config().dt;
    let ticks = plant.config().ticks_for(duration_s);
    let mut rec = Recording::new(dt);
    for _ in 0..ticks {
        let state = *plant.state();
        let inputs = input_image(&state);
        let outputs = controller.control_step(state.tick, state.tick as f64 * dt, &inputs)?.clone();
        tap(&mut rec.io_log, state.tick, &inputs, &outputs);
        let act = actuators_from(&outputs);
        rec.trajectory.push(&state, act);
        if controller.is_halted() {
            break;
        }
        plant.step(act.inv, act.outv);
    }
    let report = controller.into_report();
    info!(
        "substituted run: {} ticks, {} cycles, rules {:?}, {} violations",
        rec.trajectory.len(),
        report.cycles,
        report.rule_counts,
        report.violations
    );
    Ok((rec, report))
}
