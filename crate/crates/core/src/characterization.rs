//! Spring-stiffness and battery sizing for the three-arm, wall-pressed robot.
//!
//! The critical wheel is the one above the centre of mass: the robot's weight
//! pulls it away from the wall, so its spring sets the stiffness for all three
//! arms. For every pipe diameter in the size-adaptability range the arm settles
//! at a contact angle `theta` given by a nonlinear trigonometric relation; the
//! moment balance about the arm pivot then yields the stiffness `G(theta)` that
//! keeps the wheel in pure rolling. The selected stiffness is the maximum of
//! `G` over the range.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Metres per inch.
pub const INCH: f64 = 0.0254;
/// Smallest pipe diameter the arms adapt to, in inches.
pub const MIN_PIPE_DIAMETER_IN: f64 = 9.0;
/// Largest pipe diameter the arms adapt to, in inches.
pub const MAX_PIPE_DIAMETER_IN: f64 = 22.0;

/// Total drag on the robot at the extreme flow condition (N).
pub const EXTREME_DRAG_N: f64 = 26.1;
/// Wheel / pipe-wall static friction coefficient.
pub const WALL_FRICTION: f64 = 0.8;

const BRACKET_CELLS: usize = 128;
const ROOT_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CharacterizationError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("geometry unreachable: no contact angle for half-gap {half_gap} m")]
    Unreachable { half_gap: f64 },
    #[error("singular configuration at theta = {theta} rad: {reason}")]
    Singular { theta: f64, reason: &'static str },
    #[error("stiffness curve is empty")]
    EmptyCurve,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
}

pub type Result<T> = std::result::Result<T, CharacterizationError>;

/// Which sign the weight term takes in the moment balance.
///
/// The two printed forms of the balance disagree; `NormalMinusWeight` is the
/// form used for the stiffness formula and is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WeightSign {
    #[default]
    NormalMinusWeight,
    WeightMinusNormal,
}

/// Geometry of one arm and the mass share it supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmGeometry {
    /// Offset between the pivot and the spring anchor along the arm (m).
    pub arm_offset: f64,
    /// Arm length (m).
    pub arm_length: f64,
    /// Reach from the pivot to the wheel contact (m).
    pub tip_reach: f64,
    /// Mass share carried by the critical arm (kg).
    pub mass: f64,
    /// Gravitational acceleration (m/s^2).
    pub gravity: f64,
    /// Radial distance from the pipe axis to the arm pivot (m). The pipe
    /// half-gap seen by the arm is `diameter / 2 - pivot_offset`.
    pub pivot_offset: f64,
    pub weight_sign: WeightSign,
}

impl Default for ArmGeometry {
    fn default() -> Self {
        Self {
            arm_offset: 0.02,
            arm_length: 0.30,
            tip_reach: 0.195,
            mass: 0.1,
            gravity: 9.81,
            pivot_offset: 0.09,
            weight_sign: WeightSign::NormalMinusWeight,
        }
    }
}

impl ArmGeometry {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("arm_offset", self.arm_offset),
            ("arm_length", self.arm_length),
            ("tip_reach", self.tip_reach),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(CharacterizationError::InvalidGeometry(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(CharacterizationError::InvalidGeometry(format!(
                "mass must be non-negative, got {}",
                self.mass
            )));
        }
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(CharacterizationError::InvalidGeometry(format!(
                "gravity must be non-negative, got {}",
                self.gravity
            )));
        }
        if !self.pivot_offset.is_finite() {
            return Err(CharacterizationError::InvalidGeometry(
                "pivot_offset must be finite".into(),
            ));
        }
        // (t / a) cos(theta) must stay inside the arcsine domain for theta in [0, pi/2].
        if self.arm_offset > self.arm_length {
            return Err(CharacterizationError::InvalidGeometry(format!(
                "arm_offset {} exceeds arm_length {}",
                self.arm_offset, self.arm_length
            )));
        }
        Ok(())
    }

    /// Half-gap between the arm pivot and the pipe wall for a given diameter.
    pub fn half_gap(&self, diameter: f64) -> f64 {
        diameter / 2.0 - self.pivot_offset
    }

    fn offset_ratio(&self) -> f64 {
        self.arm_offset / self.arm_length
    }

    /// Angle between the arm and the pivot-to-contact line, from the triangle
    /// relation `beta = -theta + asin((t/a) cos theta) + pi/2`.
    pub fn beta(&self, theta: f64) -> f64 {
        -theta + (self.offset_ratio() * theta.cos()).asin() + FRAC_PI_2
    }

    fn weight_term(&self, normal_force: f64) -> f64 {
        let weight = self.mass * self.gravity;
        match self.weight_sign {
            WeightSign::NormalMinusWeight => normal_force - weight,
            WeightSign::WeightMinusNormal => weight - normal_force,
        }
    }
}

/// Flow and contact condition the spring is sized for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatingCondition {
    pub mu_s: f64,
    /// Traction each wheel must provide (N).
    pub f_s_max: f64,
    /// Total resistive force on the robot (N).
    pub drag_total: f64,
    pub robot_speed: f64,
    pub flow_speed: f64,
    pub line_pressure: f64,
}

impl Default for OperatingCondition {
    fn default() -> Self {
        Self::from_drag(EXTREME_DRAG_N, WALL_FRICTION)
    }
}

impl OperatingCondition {
    /// Condition with the drag shared equally by the three wheels, at the
    /// extreme flow scenario: robot 50 cm/s against a 70 cm/s flow at 100 kPa.
    pub fn from_drag(drag_total: f64, mu_s: f64) -> Self {
        Self {
            mu_s,
            f_s_max: drag_total / 3.0,
            drag_total,
            robot_speed: 0.5,
            flow_speed: 0.7,
            line_pressure: 100e3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_s > 0.0 && self.mu_s <= 2.0) {
            return Err(CharacterizationError::Domain(format!(
                "mu_s must lie in (0, 2], got {}",
                self.mu_s
            )));
        }
        if !(self.f_s_max.is_finite() && self.f_s_max >= 0.0) {
            return Err(CharacterizationError::Domain(format!(
                "f_s_max must be non-negative, got {}",
                self.f_s_max
            )));
        }
        Ok(())
    }

    pub fn normal_force(&self) -> Result<f64> {
        normal_force_for_traction(self.f_s_max, self.mu_s)
    }
}

/// Minimum wall normal force so that the traction demand stays within the
/// Coulomb friction limit: `F'_N = f_s_max / mu_s`.
pub fn normal_force_for_traction(f_s_max: f64, mu_s: f64) -> Result<f64> {
    if !(mu_s > 0.0) || !mu_s.is_finite() {
        return Err(CharacterizationError::Domain(format!(
            "friction coefficient must be positive, got {mu_s}"
        )));
    }
    if !(f_s_max >= 0.0) || !f_s_max.is_finite() {
        return Err(CharacterizationError::Domain(format!(
            "traction force must be non-negative, got {f_s_max}"
        )));
    }
    Ok(f_s_max / mu_s)
}

fn contact_residual(geometry: &ArmGeometry, lhs: f64, theta: f64) -> f64 {
    geometry.beta(theta) - lhs
}

/// Solves `asin(H/L) = -theta + asin((t/a) cos theta) + pi/2` for the arm
/// contact angle by a grid bracket scan followed by bisection on `[0, pi/2]`.
pub fn contact_angle(geometry: &ArmGeometry, half_gap: f64) -> Result<f64> {
    geometry.validate()?;
    let ratio = half_gap / geometry.tip_reach;
    if !half_gap.is_finite() || !(0.0..=1.0).contains(&ratio) {
        return Err(CharacterizationError::Unreachable { half_gap });
    }
    let lhs = ratio.asin();
    let f = |theta: f64| contact_residual(geometry, lhs, theta);

    let cell = FRAC_PI_2 / BRACKET_CELLS as f64;
    let mut bracket = None;
    let mut lo = 0.0;
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(0.0);
    }
    for k in 1..=BRACKET_CELLS {
        let hi = if k == BRACKET_CELLS { FRAC_PI_2 } else { k as f64 * cell };
        let f_hi = f(hi);
        if f_hi == 0.0 {
            return Ok(hi);
        }
        if f_lo.signum() != f_hi.signum() {
            bracket = Some((lo, hi, f_lo));
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    let (mut lo, mut hi, mut f_lo) = bracket.ok_or(CharacterizationError::Unreachable { half_gap })?;

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let theta = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    if f(theta).abs() >= ROOT_RESIDUAL_TOL {
        return Err(CharacterizationError::Unreachable { half_gap });
    }
    Ok(theta)
}

/// Linear-spring displacement `U(theta)`, with the reference length evaluated
/// at the current `theta` exactly as the closed form is printed:
/// `sqrt((t + cos beta)^2 + (a sin beta)^2) * (1 - cos theta)`.
pub fn spring_displacement(geometry: &ArmGeometry, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(CharacterizationError::Domain(format!(
            "theta must be non-negative, got {theta}"
        )));
    }
    let beta = geometry.beta(theta);
    let t = geometry.arm_offset;
    let a = geometry.arm_length;
    let reference = ((t + beta.cos()).powi(2) + (a * beta.sin()).powi(2)).sqrt();
    Ok(reference * (1.0 - theta.cos()))
}

/// Stiffness `G(theta)` that keeps the critical wheel in pure rolling at the
/// contact angle `theta`. The half-gap is recovered as `L sin(beta(theta))`.
pub fn required_stiffness(geometry: &ArmGeometry, cond: &OperatingCondition, theta: f64) -> Result<f64> {
    let displacement = spring_displacement(geometry, theta)?;
    if displacement <= 0.0 {
        return Err(CharacterizationError::Singular {
            theta,
            reason: "spring displacement is zero",
        });
    }
    let lever = geometry.arm_offset * theta.cos();
    if lever.abs() < 1e-12 {
        return Err(CharacterizationError::Singular {
            theta,
            reason: "spring lever arm vanishes",
        });
    }
    let normal_force = cond.normal_force()?;
    let half_gap = geometry.tip_reach * geometry.beta(theta).sin();
    let alpha = (geometry.offset_ratio() * theta.cos()).asin();
    let moment =
        geometry.weight_term(normal_force) * geometry.arm_length * (theta + alpha).cos() - cond.f_s_max * half_gap;
    Ok(moment / (lever * displacement))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessSample {
    pub diameter: f64,
    pub stiffness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiffnessCurve {
    pub samples: Vec<StiffnessSample>,
    pub selected_k: f64,
}

impl StiffnessCurve {
    pub fn from_samples(samples: Vec<StiffnessSample>) -> Result<Self> {
        let selected = select_stiffness(&samples)?;
        Ok(Self {
            samples,
            selected_k: selected.stiffness,
        })
    }
}

/// Sweeps the required stiffness over `diameters` (m).
pub fn stiffness_curve(geometry: &ArmGeometry, cond: &OperatingCondition, diameters: &[f64]) -> Result<StiffnessCurve> {
    cond.validate()?;
    let samples = diameters
        .iter()
        .map(|&diameter| {
            let theta = contact_angle(geometry, geometry.half_gap(diameter))?;
            let stiffness = required_stiffness(geometry, cond, theta)?;
            Ok(StiffnessSample { diameter, stiffness })
        })
        .collect::<Result<Vec<_>>>()?;
    StiffnessCurve::from_samples(samples)
}

/// Picks the sample with the largest required stiffness; ties go to the
/// larger diameter.
pub fn select_stiffness(samples: &[StiffnessSample]) -> Result<StiffnessSample> {
    samples
        .iter()
        .copied()
        .max_by(|x, y| {
            x.stiffness
                .total_cmp(&y.stiffness)
                .then(x.diameter.total_cmp(&y.diameter))
        })
        .ok_or(CharacterizationError::EmptyCurve)
}

/// Battery capacity (A h) for three motors of `power` W over `hours` at
/// `voltage` V: `C = 3 P h / V_n`.
pub fn battery_capacity(power: f64, hours: f64, voltage: f64) -> Result<f64> {
    for (name, v) in [("power", power), ("hours", hours), ("voltage", voltage)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CharacterizationError::Domain(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok(3.0 * power * hours / voltage)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatterySpec {
    pub power_w: f64,
    pub hours: f64,
    pub voltage: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        Self {
            power_w: 20.0,
            hours: 3.0,
            voltage: 12.0,
        }
    }
}

impl BatterySpec {
    pub fn capacity(&self) -> Result<f64> {
        battery_capacity(self.power_w, self.hours, self.voltage)
    }
}

/// Diameter sweep in inches, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiameterSweep {
    pub start_in: f64,
    pub stop_in: f64,
    pub step_in: f64,
}

impl Default for DiameterSweep {
    fn default() -> Self {
        Self {
            start_in: MIN_PIPE_DIAMETER_IN,
            stop_in: MAX_PIPE_DIAMETER_IN,
            step_in: 0.5,
        }
    }
}

impl DiameterSweep {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_in > 0.0) || !self.step_in.is_finite() {
            return Err(CharacterizationError::Domain(format!(
                "sweep step must be positive, got {}",
                self.step_in
            )));
        }
        if !(self.stop_in >= self.start_in) {
            return Err(CharacterizationError::Domain(format!(
                "sweep stop {} is below start {}",
                self.stop_in, self.start_in
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.stop_in - self.start_in) / self.step_in + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Diameters in metres.
    pub fn diameters(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| (self.start_in + k as f64 * self.step_in) * INCH)
            .collect()
    }
}

/// Everything the `characterize` command reads.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharacterizationConfig {
    pub geometry: ArmGeometry,
    pub condition: OperatingCondition,
    pub battery: BatterySpec,
    pub sweep: DiameterSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationSummary {
    pub selected_k: f64,
    pub selected_diameter_m: f64,
    pub normal_force_n: f64,
    pub normal_force_reported_n: f64,
    pub battery_capacity_ah: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationReport {
    pub curve: StiffnessCurve,
    pub summary: CharacterizationSummary,
}

pub fn characterize(cfg: &CharacterizationConfig) -> Result<CharacterizationReport> {
    cfg.geometry.validate()?;
    cfg.condition.validate()?;
    cfg.sweep.validate()?;
    let curve = stiffness_curve(&cfg.geometry, &cfg.condition, &cfg.sweep.diameters())?;
    let selected = select_stiffness(&curve.samples)?;
    let normal_force = cfg.condition.normal_force()?;
    Ok(CharacterizationReport {
        summary: CharacterizationSummary {
            selected_k: selected.stiffness,
            selected_diameter_m: selected.diameter,
            normal_force_n: normal_force,
            normal_force_reported_n: normal_force.round(),
            battery_capacity_ah: cfg.battery.capacity()?,
        },
        curve,
    })
}
