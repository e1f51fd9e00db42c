//! Pipe network: straight segments joined by junctions, each junction marked
//! by a buried relay node.
//!
//! Junction `k` sits at the far end of segment `k`, so a map with `n`
//! segments has `n - 1` junctions. The robot's position is the arc length
//! along its current segment.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characterization::{INCH, MAX_PIPE_DIAMETER_IN, MIN_PIPE_DIAMETER_IN};
use crate::control::steering::check_traversable;
use crate::plant::RobotState;
use crate::protocol::rna::{Branch, Configuration, RnaArray};
use crate::rfchannel::{LinkGeometry, RssTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("map has no segments")]
    NoSegments,
    #[error("{segments} segments need {} junctions, found {junctions}", segments - 1)]
    JunctionCount { segments: usize, junctions: usize },
    #[error("segment {index}: {reason}")]
    Segment { index: usize, reason: String },
    #[error("segment {index}: diameter {inches:.2} in outside {min}-{max} in")]
    Diameter {
        index: usize,
        inches: f64,
        min: f64,
        max: f64,
    },
    #[error("junction {index}: {reason}")]
    Junction { index: usize, reason: String },
    #[error("relay address {0} used twice")]
    DuplicateAddress(u16),
    #[error("RNA array has {rna} entries for {junctions} junctions")]
    RnaLength { rna: usize, junctions: usize },
    #[error("RNA entry {index}: {reason}")]
    RnaMismatch { index: usize, reason: String },
}

/// Water/soil depth above the pipe along a segment: constant `ambient_cm`
/// except in a window before a relay-bearing junction, where it ramps down
/// linearly to `min_depth_cm` at the junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DepthProfile {
    pub ambient_cm: f64,
    pub coverage_window_m: f64,
    pub min_depth_cm: f64,
}

impl Default for DepthProfile {
    fn default() -> Self {
        Self {
            ambient_cm: 60.0,
            coverage_window_m: 1.0,
            min_depth_cm: 10.0,
        }
    }
}

impl DepthProfile {
    fn validate(&self) -> Result<(), String> {
        if !(self.min_depth_cm.is_finite() && self.min_depth_cm >= 0.0) {
            return Err("min_depth_cm must be non-negative".into());
        }
        if !(self.ambient_cm.is_finite() && self.ambient_cm > self.min_depth_cm) {
            return Err("ambient_cm must exceed min_depth_cm".into());
        }
        if !(self.coverage_window_m.is_finite() && self.coverage_window_m > 0.0) {
            return Err("coverage_window_m must be positive".into());
        }
        Ok(())
    }

    /// Depth at `to_junction` metres before a relay-bearing junction.
    pub fn depth(&self, to_junction: f64) -> f64 {
        let d = to_junction.max(0.0);
        if d >= self.coverage_window_m {
            self.ambient_cm
        } else {
            self.min_depth_cm + (self.ambient_cm - self.min_depth_cm) * d / self.coverage_window_m
        }
    }

    /// Distance before the junction at which the mean link comes up.
    pub fn link_up_distance(&self, table: &RssTable) -> f64 {
        let crossing = table.crossing_depth();
        if crossing >= self.ambient_cm {
            return f64::INFINITY;
        }
        if crossing < self.min_depth_cm {
            return 0.0;
        }
        self.coverage_window_m * (crossing - self.min_depth_cm) / (self.ambient_cm - self.min_depth_cm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub length_m: f64,
    pub diameter_m: f64,
    /// Overrides the map-wide profile.
    #[serde(default)]
    pub depth: Option<DepthProfile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JunctionKind {
    Straight,
    Bend45,
    Bend90,
    Bend135,
    TJunction,
}

impl JunctionKind {
    pub fn matches(self, c: &Configuration) -> bool {
        matches!(
            (self, c),
            (JunctionKind::Straight, Configuration::Straight)
                | (JunctionKind::Bend45, Configuration::Bend45)
                | (JunctionKind::Bend90, Configuration::Bend90)
                | (JunctionKind::Bend135, Configuration::Bend135)
                | (JunctionKind::TJunction, Configuration::TJunction { .. })
        )
    }

    /// Representative configuration for diameter checks.
    fn probe(self) -> Configuration {
        match self {
            JunctionKind::Straight => Configuration::Straight,
            JunctionKind::Bend45 => Configuration::Bend45,
            JunctionKind::Bend90 => Configuration::Bend90,
            JunctionKind::Bend135 => Configuration::Bend135,
            JunctionKind::TJunction => Configuration::TJunction {
                branch: Branch::Through,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelayPlacement {
    pub address: u16,
    /// Horizontal offset of the node from the junction (cm).
    #[serde(default)]
    pub horizontal_cm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Junction {
    pub kind: JunctionKind,
    pub relay_node: Option<RelayPlacement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipeMap {
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub junctions: Vec<Junction>,
    #[serde(default)]
    pub depth: DepthProfile,
}

impl Default for PipeMap {
    fn default() -> Self {
        Self {
            segments: vec![Segment {
                length_m: 3.0,
                diameter_m: 14.0 * INCH,
                depth: None,
            }],
            junctions: Vec::new(),
            depth: DepthProfile::default(),
        }
    }
}

impl PipeMap {
    pub fn validate(&self) -> Result<(), MapError> {
        if self.segments.is_empty() {
            return Err(MapError::NoSegments);
        }
        if self.junctions.len() + 1 != self.segments.len() {
            return Err(MapError::JunctionCount {
                segments: self.segments.len(),
                junctions: self.junctions.len(),
            });
        }
        self.depth
            .validate()
            .map_err(|reason| MapError::Segment { index: 0, reason })?;
        for (index, s) in self.segments.iter().enumerate() {
            if !(s.length_m.is_finite() && s.length_m > 0.0) {
                return Err(MapError::Segment {
                    index,
                    reason: format!("length must be positive, got {}", s.length_m),
                });
            }
            let inches = s.diameter_m / INCH;
            if !(MIN_PIPE_DIAMETER_IN - 1e-9..=MAX_PIPE_DIAMETER_IN + 1e-9).contains(&inches) {
                return Err(MapError::Diameter {
                    index,
                    inches,
                    min: MIN_PIPE_DIAMETER_IN,
                    max: MAX_PIPE_DIAMETER_IN,
                });
            }
            if let Some(p) = &s.depth {
                p.validate().map_err(|reason| MapError::Segment { index, reason })?;
            }
        }
        let mut seen = Vec::new();
        for (index, j) in self.junctions.iter().enumerate() {
            for side in [index, index + 1] {
                check_traversable(&j.kind.probe(), self.segments[side].diameter_m).map_err(|e| MapError::Junction {
                    index,
                    reason: e.to_string(),
                })?;
            }
            let Some(relay) = j.relay_node else {
                return Err(MapError::Junction {
                    index,
                    reason: "every junction needs a relay node".into(),
                });
            };
            if !relay.horizontal_cm.is_finite() {
                return Err(MapError::Junction {
                    index,
                    reason: "horizontal_cm must be finite".into(),
                });
            }
            if seen.contains(&relay.address) {
                return Err(MapError::DuplicateAddress(relay.address));
            }
            seen.push(relay.address);
        }
        Ok(())
    }

    /// Checks that the RNA array lists the relay nodes in traversal order and
    /// describes each junction correctly.
    pub fn validate_rna(&self, rna: &RnaArray) -> Result<(), MapError> {
        if rna.len() != self.junctions.len() {
            return Err(MapError::RnaLength {
                rna: rna.len(),
                junctions: self.junctions.len(),
            });
        }
        for (index, (entry, j)) in rna.entries().iter().zip(&self.junctions).enumerate() {
            let placed = j.relay_node.map(|r| r.address);
            if placed != Some(entry.address) {
                return Err(MapError::RnaMismatch {
                    index,
                    reason: format!("address {} but junction carries {placed:?}", entry.address),
                });
            }
            if !j.kind.matches(&entry.configuration) {
                return Err(MapError::RnaMismatch {
                    index,
                    reason: format!("{} does not describe a {:?}", entry.configuration.name(), j.kind),
                });
            }
            check_traversable(&entry.configuration, self.segments[index].diameter_m).map_err(|e| {
                MapError::RnaMismatch {
                    index,
                    reason: e.to_string(),
                }
            })?;
        }
        Ok(())
    }

    pub fn profile(&self, segment: usize) -> DepthProfile {
        self.segments[segment].depth.unwrap_or(self.depth)
    }

    /// Distance from the start of the map to junction `k`.
    pub fn junction_position(&self, k: usize) -> f64 {
        self.segments[..=k].iter().map(|s| s.length_m).sum()
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length_m).sum()
    }

    /// Link between the robot at arc length `x` on `segment` and the relay at
    /// junction `junction`. Only the segment leading into a junction carries
    /// its coverage window.
    pub fn link_geometry(&self, segment: usize, x: f64, junction: usize) -> LinkGeometry {
        let profile = self.profile(segment.min(self.segments.len() - 1));
        let horizontal = self.junctions[junction]
            .relay_node
            .map(|r| r.horizontal_cm)
            .unwrap_or(0.0);
        if segment == junction {
            let to_junction = self.segments[segment].length_m - x;
            LinkGeometry::new(profile.depth(to_junction), horizontal + 100.0 * to_junction.abs())
        } else {
            let along = (self.junction_position(junction) - self.segment_start(segment) - x).abs();
            LinkGeometry::new(profile.ambient_cm, horizontal + 100.0 * along)
        }
    }

    fn segment_start(&self, segment: usize) -> f64 {
        self.segments[..segment].iter().map(|s| s.length_m).sum()
    }
}

/// Distance ahead to the end of the robot's current segment, plus seeded
/// Gaussian noise of `sigma` metres (no draw when `sigma` is zero).
pub fn rangefinder_read<R: Rng + ?Sized>(state: &RobotState, map: &PipeMap, sigma: f64, rng: &mut R) -> f64 {
    let seg = state.heading.segment.min(map.segments.len() - 1);
    let truth = map.segments[seg].length_m - state.x;
    if sigma > 0.0 {
        truth + Normal::new(0.0, sigma).expect("sigma validated").sample(rng)
    } else {
        truth
    }
}
