//! Observation literals.

use alloc::string::String;

use crate::deps::ComponentId;
use crate::interp::OccKey;

/// What an observation talks about. Inputs and outputs are resolved against
/// the current dependency graph, so they survive refinement unchanged.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    /// A parameter of the method under test at entry.
    Input(String),
    /// The final value of a variable of the method under test.
    Output(String),
    At(OccKey),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Observation {
    Ok(Target),
    Nok(Target),
    /// The component is known to behave correctly.
    Normal(ComponentId),
}

impl Observation {
    pub fn target(&self) -> Option<&Target> {
        match self {
            Observation::Ok(t) | Observation::Nok(t) => Some(t),
            Observation::Normal(_) => None,
        }
    }
}
