//! Labeled place/transition nets with ordinary (weight 1) arcs.
//!
//! Places and transitions are kept in lexicographic order of their
//! identifiers, so a [`Marking`] is a plain vector indexed by that order.

mod net;
mod replay;

pub use net::{Arc, LabeledPetriNet, Marking, PlaceId, Transition, TransitionId};
pub(crate) use replay::hidden_path;
pub use replay::{replay_activities, replay_trace, ReplayResult, Replayer, HIDDEN_SEARCH_DEPTH};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PetriError {
    #[error("marking has {got} entries but the net has {expected} places")]
    Dimension { expected: usize, got: usize },
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error("no transition is labeled with activity `{0}`")]
    UnknownActivity(String),
    #[error("invalid net: {0}")]
    InvalidNet(String),
    #[error("malformed net document: {0}")]
    Parse(String),
}
