//! Relay-node address map handed to the robot before a mission.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Left,
    Right,
    Through,
}

/// Pipe configuration a relay node marks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Configuration {
    Straight,
    Bend45,
    Bend90,
    Bend135,
    TJunction { branch: Branch },
}

impl Configuration {
    pub fn name(&self) -> &'static str {
        match self {
            Configuration::Straight => "Straight",
            Configuration::Bend45 => "Bend45",
            Configuration::Bend90 => "Bend90",
            Configuration::Bend135 => "Bend135",
            Configuration::TJunction { .. } => "TJunction",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RnaError {
    #[error("RNA {0} is not in the map")]
    Unknown(u16),
    #[error("RNA map is empty")]
    Empty,
    #[error("RNA {0} appears more than once")]
    Duplicate(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnaEntry {
    pub address: u16,
    pub configuration: Configuration,
}

/// Ordered relay-node addresses, each with the configuration it marks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RnaArray(Vec<RnaEntry>);

impl RnaArray {
    pub fn new(entries: Vec<RnaEntry>) -> Result<Self, RnaError> {
        let a = Self(entries);
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), RnaError> {
        for (i, e) in self.0.iter().enumerate() {
            if self.0[..i].iter().any(|o| o.address == e.address) {
                return Err(RnaError::Duplicate(e.address));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[RnaEntry] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Result of a lookup, with the number of loop iterations it took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lookup {
    pub configuration: Configuration,
    pub index: usize,
    pub iterations: usize,
}

/// Walks the map in order until the received address matches.
pub fn configuration_lookup(received: u16, map: &RnaArray) -> Result<Lookup, RnaError> {
    if map.is_empty() {
        return Err(RnaError::Empty);
    }
    let mut i = 0;
    while i < map.0.len() {
        let entry = &map.0[i];
        i += 1;
        if entry.address == received {
            return Ok(Lookup {
                configuration: entry.configuration,
                index: i - 1,
                iterations: i,
            });
        }
    }
    Err(RnaError::Unknown(received))
}
