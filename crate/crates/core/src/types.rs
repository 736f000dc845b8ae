use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Binary ground-contact state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContactState {
    #[serde(rename = "C")]
    Contact,
    #[serde(rename = "NC")]
    NoContact,
}

impl ContactState {
    pub fn opposite(self) -> Self {
        match self {
            ContactState::Contact => ContactState::NoContact,
            ContactState::NoContact => ContactState::Contact,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ContactState::Contact => "C",
            ContactState::NoContact => "NC",
        }
    }
}

impl fmt::Display for ContactState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContactState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "C" => Ok(ContactState::Contact),
            "NC" => Ok(ContactState::NoContact),
            other => Err(format!("unknown contact label {other:?}")),
        }
    }
}

/// Absolute knee and wheel torque pair (Nm), the measurement vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorqueSample {
    pub knee: f64,
    pub wheel: f64,
}

impl TorqueSample {
    /// Returns `None` unless both components are finite and non-negative.
    pub fn new(knee: f64, wheel: f64) -> Option<Self> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        (ok(knee) && ok(wheel)).then_some(Self { knee, wheel })
    }

    /// Takes absolute values of signed torques.
    pub fn from_signed(knee: f64, wheel: f64) -> Option<Self> {
        Self::new(knee.abs(), wheel.abs())
    }

    pub fn axis(&self, axis: usize) -> f64 {
        match axis {
            0 => self.knee,
            _ => self.wheel,
        }
    }
}

/// Direction of a contact transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// Contact to no contact.
    Takeoff,
    /// No contact to contact.
    Landing,
}

impl EventKind {
    /// Transition kind for a change from `from` to `to`, if they differ.
    pub fn between(from: ContactState, to: ContactState) -> Option<Self> {
        match (from, to) {
            (ContactState::Contact, ContactState::NoContact) => Some(EventKind::Takeoff),
            (ContactState::NoContact, ContactState::Contact) => Some(EventKind::Landing),
            _ => None,
        }
    }

    /// State entered by this transition.
    pub fn target(self) -> ContactState {
        match self {
            EventKind::Takeoff => ContactState::NoContact,
            EventKind::Landing => ContactState::Contact,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Takeoff => "takeoff",
            EventKind::Landing => "landing",
        }
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "takeoff" => Ok(EventKind::Takeoff),
            "landing" => Ok(EventKind::Landing),
            other => Err(format!("unknown event kind {other:?}")),
        }
    }
}

/// A transition at a point in time (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}
