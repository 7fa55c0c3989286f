//! Reconstructing black-box PLC logic from tapped inputs and outputs.
//!
//! The pipeline records a controller driving a simulated tank plant,
//! reduces the IO log to an event log, discovers a class-labeled Petri net,
//! trains a decay-replay next-activity predictor where the net is
//! ambiguous, and finally drives the plant with the mined model.

pub mod closed_loop;
pub mod controller;
pub mod discovery;
pub mod eventlog;
pub mod ladder;
pub mod nap;
pub mod petri;
pub mod pipeline;
pub mod plant;
pub mod signal;

pub use closed_loop::{run_closed_loop, Recording};
pub use controller::{compare_trajectories, run_substituted, Comparison, ControllerOptions, RunReport};
pub use discovery::{discover_net, structurally_isomorphic, DiscoveryConfig};
pub use eventlog::{Event, EventLog, IOSample, LogMeta, Trace};
pub use nap::{NapModel, NextLabel, TimedStateSample, TrainConfig};
pub use petri::{LabeledPetriNet, Marking, PlaceId, TransitionId};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutcome, Scenario, Summary};
pub use plant::{Plant, PlantConfig, PlantState, Trajectory};
pub use signal::Class;
