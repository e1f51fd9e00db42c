//! One-file mission description (TOML or JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::map::{MapError, PipeMap};
use crate::control::{ControlConfig, ControlError};
use crate::plant::{PlantError, PlantSpec};
use crate::protocol::rna::RnaArray;
use crate::protocol::sensors::{SensorBank, SensorError};
use crate::rfchannel::{RfConfig, RfError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported config extension {0:?} (use .toml or .json)")]
    Extension(String),
    #[error("map: {0}")]
    Map(#[from] MapError),
    #[error("plant: {0}")]
    Plant(#[from] PlantError),
    #[error("control: {0}")]
    Control(#[from] ControlError),
    #[error("rf: {0}")]
    Rf(#[from] RfError),
    #[error("sensors: {0}")]
    Sensors(#[from] SensorError),
    #[error("rna: {0}")]
    Rna(#[from] crate::protocol::rna::RnaError),
    #[error("mission.{field}: {reason}")]
    Param { field: &'static str, reason: String },
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        ConfigError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RangefinderConfig {
    pub enabled: bool,
    /// Enter the stop phase once the obstacle ahead is closer than this (m).
    pub threshold_m: f64,
    pub noise_sigma_m: f64,
}

impl Default for RangefinderConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            threshold_m: 0.10,
            noise_sigma_m: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionParams {
    /// Cruise speed in P1 (m/s).
    pub cruise_speed: f64,
    pub initial_phi_deg: f64,
    pub initial_psi_deg: f64,
    pub advertise_interval_ms: u64,
    /// Speed below which the robot counts as stopped (m/s).
    pub rest_speed: f64,
    /// How long the speed must stay below `rest_speed` (s).
    pub rest_hold_s: f64,
    /// Longest wait for a frame before declaring deadlock (s).
    pub watchdog_s: f64,
    pub max_time_s: f64,
    pub snapshot_interval_s: f64,
    /// Tilt beyond which the robot is considered collapsed (deg).
    pub collapse_deg: f64,
    /// Zero-mean noise on the observed tilt angles (deg, 1 sigma).
    pub observer_noise_deg: f64,
    pub rangefinder: RangefinderConfig,
}

impl Default for MissionParams {
    fn default() -> Self {
        Self {
            cruise_speed: 0.1,
            initial_phi_deg: 0.0,
            initial_psi_deg: 0.0,
            advertise_interval_ms: 100,
            rest_speed: 0.005,
            rest_hold_s: 0.2,
            watchdog_s: 30.0,
            max_time_s: 3600.0,
            snapshot_interval_s: 0.1,
            collapse_deg: 60.0,
            observer_noise_deg: 0.0,
            rangefinder: RangefinderConfig::default(),
        }
    }
}

impl MissionParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("cruise_speed", self.cruise_speed),
            ("rest_speed", self.rest_speed),
            ("watchdog_s", self.watchdog_s),
            ("max_time_s", self.max_time_s),
            ("snapshot_interval_s", self.snapshot_interval_s),
            ("collapse_deg", self.collapse_deg),
            ("rangefinder.threshold_m", self.rangefinder.threshold_m),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Param {
                    field,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        let non_negative = [
            ("rest_hold_s", self.rest_hold_s),
            ("observer_noise_deg", self.observer_noise_deg),
            ("rangefinder.noise_sigma_m", self.rangefinder.noise_sigma_m),
        ];
        for (field, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::Param {
                    field,
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        if self.advertise_interval_ms == 0 {
            return Err(ConfigError::Param {
                field: "advertise_interval_ms",
                reason: "must be at least 1".into(),
            });
        }
        for (field, v) in [
            ("initial_phi_deg", self.initial_phi_deg),
            ("initial_psi_deg", self.initial_psi_deg),
        ] {
            if !(v.is_finite() && v.abs() < self.collapse_deg) {
                return Err(ConfigError::Param {
                    field,
                    reason: format!("must be below collapse_deg in magnitude, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Seeded repetitions for the premature-stop study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub runs: usize,
    pub first_seed: u64,
    pub jitter_sigma_db: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            runs: 100,
            first_seed: 0,
            jitter_sigma_db: 3.0,
        }
    }
}

impl SweepConfig {
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|i| self.first_seed + i).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionConfig {
    pub name: String,
    pub seed: u64,
    pub map: PipeMap,
    pub rna: RnaArray,
    pub plant: PlantSpec,
    pub control: ControlConfig,
    pub rf: RfConfig,
    pub sensors: SensorBank,
    pub mission: MissionParams,
    pub sweep: Option<SweepConfig>,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            name: "mission".into(),
            seed: 0,
            map: PipeMap::default(),
            rna: RnaArray::default(),
            plant: PlantSpec::default(),
            control: ControlConfig::default(),
            rf: RfConfig::default(),
            sensors: SensorBank::default(),
            mission: MissionParams::default(),
            sweep: None,
        }
    }
}

impl MissionConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(s)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(s)?)
    }

    /// Parses by extension without validating.
    pub fn parse_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml_str(&text),
            Some("json") => Self::from_json_str(&text),
            other => Err(ConfigError::Extension(other.unwrap_or("").to_string())),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let cfg = Self::parse_file(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.map.validate()?;
        self.rna.validate()?;
        self.map.validate_rna(&self.rna)?;
        self.plant.build()?;
        self.control.pid.validate().map_err(ControlError::Config)?;
        self.control.steering.validate()?;
        self.control.q_matrix()?;
        self.control.r_matrix()?;
        self.rf.validate()?;
        self.sensors.validate()?;
        self.mission.validate()?;
        if let Some(s) = &self.sweep {
            if s.runs == 0 {
                return Err(ConfigError::Param {
                    field: "sweep.runs",
                    reason: "need at least one run".into(),
                });
            }
            if !(s.jitter_sigma_db.is_finite() && s.jitter_sigma_db >= 0.0) {
                return Err(ConfigError::Param {
                    field: "sweep.jitter_sigma_db",
                    reason: "must be non-negative".into(),
                });
            }
        }
        Ok(())
    }
}
