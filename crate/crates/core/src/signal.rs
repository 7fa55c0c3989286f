//! Signal classes, activity components and their canonical string form.
//!
//! An activity component is `<address>_<true|false>`, e.g. `%IX0.1_false`.
//! Several components observed at the same tick and of the same class are
//! merged into one activity by joining them with `+`, ordered by address.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Input (`%I`) or output (`%Q`) side of the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Class {
    #[serde(rename = "%I")]
    Input,
    #[serde(rename = "%Q")]
    Output,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::Input => "%I",
            Class::Output => "%Q",
        }
    }

    /// Class implied by a physical address prefix (`%I...` or `%Q...`).
    pub fn of_address(address: &str) -> Option<Class> {
        if address.starts_with("%I") {
            Some(Class::Input)
        } else if address.starts_with("%Q") {
            Some(Class::Output)
        } else {
            None
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Class {
    type Err = SignalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "%I" => Ok(Class::Input),
            "%Q" => Ok(Class::Output),
            other => Err(SignalError::BadClass(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignalError {
    #[error("unknown class `{0}` (expected %I or %Q)")]
    BadClass(String),
    #[error("malformed activity component `{0}`")]
    BadComponent(String),
    #[error("address `{0}` has no %I/%Q prefix")]
    BadAddress(String),
    #[error("activity `{0}` mixes input and output components")]
    MixedClasses(String),
    #[error("empty activity")]
    Empty,
}

/// One observed value change: an address and the value it changed to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Component {
    pub address: String,
    pub value: bool,
}

impl Component {
    pub fn new(address: impl Into<String>, value: bool) -> Self {
        Component {
            address: address.into(),
            value,
        }
    }

    pub fn class(&self) -> Option<Class> {
        Class::of_address(&self.address)
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.address, self.value)
    }
}

impl FromStr for Component {
    type Err = SignalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (address, value) = s
            .rsplit_once('_')
            .ok_or_else(|| SignalError::BadComponent(s.to_string()))?;
        let value = match value {
            "true" => true,
            "false" => false,
            _ => return Err(SignalError::BadComponent(s.to_string())),
        };
        if address.is_empty() || address.contains('+') {
            return Err(SignalError::BadComponent(s.to_string()));
        }
        Ok(Component::new(address, value))
    }
}

/// Split an activity string into its components.
pub fn components(activity: &str) -> Result<Vec<Component>, SignalError> {
    if activity.is_empty() {
        return Err(SignalError::Empty);
    }
    activity.split('+').map(str::parse).collect()
}

/// Join components into the canonical activity string (sorted by address).
pub fn join_components(parts: &[Component]) -> String {
    let mut sorted: Vec<&Component> = parts.iter().collect();
    sorted.sort();
    sorted
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("+")
}

/// Re-order the components of an activity into canonical form.
pub fn canonicalize(activity: &str) -> Result<String, SignalError> {
    Ok(join_components(&components(activity)?))
}

/// The single class shared by every component of `activity`.
pub fn activity_class(activity: &str) -> Result<Class, SignalError> {
    let parts = components(activity)?;
    let mut class = None;
    for part in &parts {
        let c = part
            .class()
            .ok_or_else(|| SignalError::BadAddress(part.address.clone()))?;
        match class {
            None => class = Some(c),
            Some(prev) if prev != c => return Err(SignalError::MixedClasses(activity.to_string())),
            Some(_) => {}
        }
    }
    class.ok_or(SignalError::Empty)
}

/// True if `component` (e.g. `%IX0.1_false`) is one of the parts of `activity`.
pub fn contains_component(activity: &str, component: &str) -> bool {
    activity.split('+').any(|part| part == component)
}
