//! Differential steering through bends and T-junctions.
//!
//! The trajectory generator spreads a body rotation rate over the three
//! wheels; the error check integrates the rotation actually produced by the
//! measured wheel rates and ends the manoeuvre once it is within tolerance.

use serde::{Deserialize, Serialize};

use super::pid::{Pid, PidGains};
use super::ControlError;
use crate::characterization::INCH;
use crate::plant::{Heading, RobotState};
use crate::protocol::rna::{Branch, Configuration};

pub const BEND_DIAMETER_RANGE_IN: (f64, f64) = (9.0, 22.0);
pub const TJUNCTION_DIAMETER_RANGE_IN: (f64, f64) = (9.0, 15.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationAxis {
    /// Turn in the horizontal plane.
    Yaw,
    /// Turn in the vertical plane.
    Pitch,
}

impl RotationAxis {
    /// Unit differential pattern across the wheels (sums to zero).
    pub fn pattern(self) -> [f64; 3] {
        let s3 = 3f64.sqrt() / 2.0;
        match self {
            RotationAxis::Yaw => [0.0, s3, -s3],
            RotationAxis::Pitch => [1.0, -0.5, -0.5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteeringParams {
    /// Forward speed held while turning (m/s).
    pub forward_speed: f64,
    /// Peak body rotation rate (rad/s).
    pub max_rate: f64,
    /// Rotation rate per radian of remaining error (1/s).
    pub approach_gain: f64,
    /// Floor on the commanded rate so the approach never stalls (rad/s).
    pub min_rate: f64,
    pub tolerance_deg: f64,
    pub timeout_s: f64,
    pub pid: PidGains,
}

impl Default for SteeringParams {
    fn default() -> Self {
        Self {
            forward_speed: 0.05,
            max_rate: 0.15,
            approach_gain: 2.0,
            min_rate: 0.02,
            tolerance_deg: 0.5,
            timeout_s: 60.0,
            pid: PidGains::default(),
        }
    }
}

impl SteeringParams {
    pub fn validate(&self) -> Result<(), ControlError> {
        let positive = [
            ("max_rate", self.max_rate),
            ("approach_gain", self.approach_gain),
            ("min_rate", self.min_rate),
            ("tolerance_deg", self.tolerance_deg),
            ("timeout_s", self.timeout_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ControlError::Config(format!(
                    "steering.{name} must be positive, got {v}"
                )));
            }
        }
        if self.min_rate > self.max_rate {
            return Err(ControlError::Config(
                "steering.min_rate exceeds steering.max_rate".into(),
            ));
        }
        if !self.forward_speed.is_finite() {
            return Err(ControlError::Config("steering.forward_speed must be finite".into()));
        }
        self.pid.validate().map_err(ControlError::Config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteeringPlan {
    pub axis: RotationAxis,
    /// Signed rotation to achieve (rad).
    pub target_rotation: f64,
    /// Discrete heading change applied once the plan completes.
    pub heading_delta_deg: i32,
    /// Radius at which the wheels touch the wall (m).
    pub contact_radius: f64,
    pub params: SteeringParams,
}

/// Checks a pipe diameter (m) against the range a configuration can be
/// traversed in.
pub fn check_traversable(config: &Configuration, diameter: f64) -> Result<(), ControlError> {
    let inches = diameter / INCH;
    let (lo, hi) = match config {
        Configuration::TJunction { .. } => TJUNCTION_DIAMETER_RANGE_IN,
        _ => BEND_DIAMETER_RANGE_IN,
    };
    if !(inches >= lo - 1e-9 && inches <= hi + 1e-9) {
        return Err(ControlError::OutOfRange {
            configuration: config.name().to_string(),
            diameter_in: inches,
            min_in: lo,
            max_in: hi,
        });
    }
    Ok(())
}

impl SteeringPlan {
    pub fn new(
        axis: RotationAxis,
        heading_delta_deg: i32,
        diameter: f64,
        params: SteeringParams,
    ) -> Result<Self, ControlError> {
        params.validate()?;
        if !(diameter > 0.0) {
            return Err(ControlError::Config(format!(
                "diameter must be positive, got {diameter}"
            )));
        }
        Ok(Self {
            axis,
            target_rotation: (heading_delta_deg as f64).to_radians(),
            heading_delta_deg,
            contact_radius: diameter / 2.0,
            params,
        })
    }

    /// Plan for traversing `config` in a pipe of `diameter` (m).
    pub fn for_configuration(
        config: &Configuration,
        diameter: f64,
        params: SteeringParams,
    ) -> Result<Self, ControlError> {
        check_traversable(config, diameter)?;
        let delta = match config {
            Configuration::Straight => 0,
            Configuration::Bend45 => 45,
            Configuration::Bend90 => 90,
            Configuration::Bend135 => 135,
            Configuration::TJunction { branch } => match branch {
                Branch::Left => 90,
                Branch::Right => -90,
                Branch::Through => 0,
            },
        };
        Self::new(RotationAxis::Yaw, delta, diameter, params)
    }

    pub fn tolerance(&self) -> f64 {
        self.params.tolerance_deg.to_radians()
    }

    /// Wheel rates (rad/s) realising forward speed plus body rotation `rate`.
    pub fn wheel_rate_profile(&self, rate: f64, wheel_radius: f64) -> [f64; 3] {
        let p = self.axis.pattern();
        p.map(|pi| (self.params.forward_speed + rate * self.contact_radius * pi) / wheel_radius)
    }

    /// Body rotation rate implied by measured wheel rates.
    pub fn rotation_rate(&self, wheel_rates: [f64; 3], wheel_radius: f64) -> f64 {
        let p = self.axis.pattern();
        let dot: f64 = p.iter().zip(wheel_rates).map(|(pi, w)| pi * w).sum();
        let norm2: f64 = p.iter().map(|pi| pi * pi).sum();
        wheel_radius * dot / (self.contact_radius * norm2)
    }

    pub fn heading_after(&self, heading: Heading) -> Heading {
        let mut next = heading;
        match self.axis {
            RotationAxis::Yaw => next.yaw_deg = (heading.yaw_deg + self.heading_delta_deg).rem_euclid(360),
            RotationAxis::Pitch => next.pitch_deg = (heading.pitch_deg + self.heading_delta_deg).rem_euclid(360),
        }
        next
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteerOutput {
    pub voltages: [f64; 3],
    pub done: bool,
}

/// Runs one steering plan to completion.
#[derive(Debug, Clone)]
pub struct Steerer {
    pub plan: SteeringPlan,
    pids: [Pid; 3],
    accumulated: f64,
    elapsed: f64,
}

impl Steerer {
    pub fn new(plan: SteeringPlan) -> Self {
        let pid = Pid::new(plan.params.pid);
        Self {
            plan,
            pids: [pid.clone(), pid.clone(), pid],
            accumulated: 0.0,
            elapsed: 0.0,
        }
    }

    pub fn accumulated(&self) -> f64 {
        self.accumulated
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    fn remaining(&self) -> f64 {
        self.plan.target_rotation - self.accumulated
    }

    pub fn is_done(&self) -> bool {
        self.remaining().abs() < self.plan.tolerance()
    }

    pub fn step(&mut self, state: &RobotState, wheel_radius: f64, dt: f64) -> Result<SteerOutput, ControlError> {
        if self.is_done() {
            return Ok(SteerOutput {
                voltages: [0.0; 3],
                done: true,
            });
        }
        let params = &self.plan.params;
        let remaining = self.remaining();
        let rate =
            remaining.signum() * (params.approach_gain * remaining.abs()).clamp(params.min_rate, params.max_rate);
        let profile = self.plan.wheel_rate_profile(rate, wheel_radius);
        let mut voltages = [0.0; 3];
        for i in 0..3 {
            voltages[i] = self.pids[i].step(profile[i] - state.wheel_rates[i], dt);
        }

        self.accumulated += self.plan.rotation_rate(state.wheel_rates, wheel_radius) * dt;
        self.elapsed += dt;
        if self.is_done() {
            return Ok(SteerOutput { voltages, done: true });
        }
        if self.elapsed > params.timeout_s {
            return Err(ControlError::SteeringTimeout {
                accumulated_deg: self.accumulated.to_degrees(),
                target_deg: self.plan.target_rotation.to_degrees(),
            });
        }
        Ok(SteerOutput { voltages, done: false })
    }
}
