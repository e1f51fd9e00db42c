//! Robot body and gear-motor simulation.
//!
//! The body is a linear surrogate over `[x_dot, phi, psi, phi_dot, psi_dot]`
//! driven by the three wheel torques, with the ambient flow entering as a
//! constant disturbance on `x_dot`. Each gear motor is a first-order RL
//! circuit with back-EMF. Both are advanced by explicit Euler steps.

use nalgebra::{DMatrix, SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type BodyMatrix = SMatrix<f64, 5, 5>;
pub type InputMatrix = SMatrix<f64, 5, 3>;
pub type BodyVector = SVector<f64, 5>;

/// Index of each body state inside the surrogate state vector.
pub mod idx {
    pub const X_DOT: usize = 0;
    pub const PHI: usize = 1;
    pub const PSI: usize = 2;
    pub const PHI_DOT: usize = 3;
    pub const PSI_DOT: usize = 4;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("robot collapsed: phi = {phi:.4} rad, psi = {psi:.4} rad")]
    Collapsed { phi: f64, psi: f64 },
    #[error("non-finite value in plant state")]
    NonFinite,
    #[error("invalid plant configuration: {0}")]
    Config(String),
}

/// Discrete travel direction after each junction, in whole degrees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Heading {
    pub segment: usize,
    pub yaw_deg: i32,
    pub pitch_deg: i32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    /// Arc length along the current segment (m).
    pub x: f64,
    pub x_dot: f64,
    pub phi: f64,
    pub psi: f64,
    pub phi_dot: f64,
    pub psi_dot: f64,
    pub wheel_angles: [f64; 3],
    pub wheel_rates: [f64; 3],
    pub heading: Heading,
}

impl RobotState {
    pub fn with_tilt(phi: f64, psi: f64) -> Self {
        Self {
            phi,
            psi,
            ..Self::default()
        }
    }

    pub fn body_vector(&self) -> BodyVector {
        BodyVector::new(self.x_dot, self.phi, self.psi, self.phi_dot, self.psi_dot)
    }

    fn set_body_vector(&mut self, v: &BodyVector) {
        self.x_dot = v[idx::X_DOT];
        self.phi = v[idx::PHI];
        self.psi = v[idx::PSI];
        self.phi_dot = v[idx::PHI_DOT];
        self.psi_dot = v[idx::PSI_DOT];
    }

    /// `[phi, psi, phi_dot, psi_dot]`, the states the stabilizer regulates.
    pub fn stabilizing(&self) -> [f64; 4] {
        [self.phi, self.psi, self.phi_dot, self.psi_dot]
    }

    pub fn is_finite(&self) -> bool {
        self.body_vector().iter().all(|v| v.is_finite())
            && self.x.is_finite()
            && self.wheel_angles.iter().chain(&self.wheel_rates).all(|v| v.is_finite())
    }
}

/// A dense matrix as it appears in config files: explicit dimensions, data
/// in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixSpec {
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_dmatrix(&self) -> Result<DMatrix<f64>, PlantError> {
        if self.rows * self.cols != self.data.len() {
            return Err(PlantError::Config(format!(
                "matrix declared {}x{} but has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(PlantError::Config("matrix has non-finite entries".into()));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }

    fn to_fixed<const R: usize, const C: usize>(&self, name: &str) -> Result<SMatrix<f64, R, C>, PlantError> {
        if self.rows != R || self.cols != C {
            return Err(PlantError::Config(format!(
                "{name} must be {R}x{C}, got {}x{}",
                self.rows, self.cols
            )));
        }
        let m = self.to_dmatrix()?;
        Ok(SMatrix::<f64, R, C>::from_fn(|r, c| m[(r, c)]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotorParams {
    /// Terminal resistance (ohm).
    pub resistance: f64,
    /// Terminal inductance (H).
    pub inductance: f64,
    /// Torque / back-EMF constant, gear ratio folded in (N m / A).
    pub k_v: f64,
    /// Supply voltage bound (V).
    pub supply_voltage: f64,
}

impl Default for MotorParams {
    fn default() -> Self {
        Self {
            resistance: 2.0,
            inductance: 0.02,
            k_v: 0.3,
            supply_voltage: 12.0,
        }
    }
}

impl MotorParams {
    pub fn electrical_time_constant(&self) -> f64 {
        self.inductance / self.resistance
    }
}

/// Serialized form of [`PlantConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantSpec {
    pub a: MatrixSpec,
    pub b: MatrixSpec,
    pub flow_velocity: f64,
    pub motor: MotorParams,
    pub wheel_radius: f64,
    pub wheel_inertia: f64,
    pub wheel_damping: f64,
    pub dt: f64,
}

impl Default for PlantSpec {
    fn default() -> Self {
        let cfg = PlantConfig::default();
        Self {
            a: MatrixSpec::from_dmatrix(&DMatrix::from_fn(5, 5, |r, c| cfg.a[(r, c)])),
            b: MatrixSpec::from_dmatrix(&DMatrix::from_fn(5, 3, |r, c| cfg.b[(r, c)])),
            flow_velocity: cfg.flow_velocity,
            motor: cfg.motor,
            wheel_radius: cfg.wheel_radius,
            wheel_inertia: cfg.wheel_inertia,
            wheel_damping: cfg.wheel_damping,
            dt: cfg.dt,
        }
    }
}

impl PlantSpec {
    pub fn build(&self) -> Result<PlantConfig, PlantError> {
        let cfg = PlantConfig {
            a: self.a.to_fixed::<5, 5>("plant.a")?,
            b: self.b.to_fixed::<5, 3>("plant.b")?,
            flow_velocity: self.flow_velocity,
            motor: self.motor,
            wheel_radius: self.wheel_radius,
            wheel_inertia: self.wheel_inertia,
            wheel_damping: self.wheel_damping,
            dt: self.dt,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantConfig {
    pub a: BodyMatrix,
    pub b: InputMatrix,
    /// Ambient flow velocity (m/s); negative opposes forward travel.
    pub flow_velocity: f64,
    pub motor: MotorParams,
    pub wheel_radius: f64,
    /// Inertia resisting differential wheel motion (kg m^2).
    pub wheel_inertia: f64,
    /// Resistance of the wall contact to differential wheel slip (1/s).
    pub wheel_damping: f64,
    pub dt: f64,
}

impl Default for PlantConfig {
    /// Lightly damped tilt modes (natural frequency 4 rad/s, damping ratio
    /// 0.02) and a 5 kg body on 4 cm wheels.
    fn default() -> Self {
        let wn2 = 16.0;
        let damp = 2.0 * 0.02 * 4.0;
        let drive = 5.0;
        let tilt = 10.0;
        let s3 = 3f64.sqrt() / 2.0;
        #[rustfmt::skip]
        let a = BodyMatrix::from_row_slice(&[
            -0.5, 0.0,  0.0,  0.0,   0.0,
             0.0, 0.0,  0.0,  1.0,   0.0,
             0.0, 0.0,  0.0,  0.0,   1.0,
             0.0, -wn2, 0.0,  -damp, 0.0,
             0.0, 0.0,  -wn2, 0.0,   -damp,
        ]);
        #[rustfmt::skip]
        let b = InputMatrix::from_row_slice(&[
            drive, drive,             drive,
            0.0,   0.0,               0.0,
            0.0,   0.0,               0.0,
            tilt,  -0.5 * tilt,       -0.5 * tilt,
            0.0,   s3 * tilt,         -s3 * tilt,
        ]);
        Self {
            a,
            b,
            flow_velocity: 0.0,
            motor: MotorParams::default(),
            wheel_radius: 0.04,
            wheel_inertia: 0.002,
            wheel_damping: 100.0,
            dt: 1e-3,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<(), PlantError> {
        let positive = [
            ("dt", self.dt),
            ("wheel_radius", self.wheel_radius),
            ("wheel_inertia", self.wheel_inertia),
            ("motor.resistance", self.motor.resistance),
            ("motor.inductance", self.motor.inductance),
            ("motor.k_v", self.motor.k_v),
            ("motor.supply_voltage", self.motor.supply_voltage),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(PlantError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.wheel_damping.is_finite() && self.wheel_damping >= 0.0) {
            return Err(PlantError::Config("wheel_damping must be non-negative".into()));
        }
        if !self.flow_velocity.is_finite() {
            return Err(PlantError::Config("flow_velocity must be finite".into()));
        }
        if self.dt > 0.01 {
            return Err(PlantError::Config(format!("dt {} exceeds 10 ms", self.dt)));
        }
        Ok(())
    }

    /// 4x4 block of `a` acting on the stabilizing states.
    pub fn stabilizing_a(&self) -> DMatrix<f64> {
        DMatrix::from_fn(4, 4, |r, c| self.a[(r + 1, c + 1)])
    }

    /// 4x3 block of `b` mapping torques onto the stabilizing states.
    pub fn stabilizing_b(&self) -> DMatrix<f64> {
        DMatrix::from_fn(4, 3, |r, c| self.b[(r + 1, c)])
    }

    /// Constant drive on `x_dot` from the flow; with zero torque the open-loop
    /// velocity relaxes toward `flow_velocity`.
    pub fn flow_disturbance(&self) -> f64 {
        -self.a[(idx::X_DOT, idx::X_DOT)] * self.flow_velocity
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MotorState {
    /// Armature current (A).
    pub current: f64,
    /// Commanded voltage (V).
    pub voltage: f64,
}

impl MotorState {
    /// Sets the commanded voltage, clamped to the supply bound.
    pub fn command(&mut self, voltage: f64, supply: f64) {
        self.voltage = voltage.clamp(-supply, supply);
    }
}

/// One explicit Euler step of `di/dt = (v - k_v w - R i) / L`.
pub fn motor_step(state: MotorState, omega: f64, params: &MotorParams, dt: f64) -> MotorState {
    debug_assert!(dt > 0.0 && dt <= 0.01, "motor dt out of range: {dt}");
    let di = (state.voltage - params.k_v * omega - params.resistance * state.current) / params.inductance;
    MotorState {
        current: state.current + dt * di,
        voltage: state.voltage,
    }
}

pub fn torque_from_current(current: [f64; 3], k_v: f64) -> [f64; 3] {
    current.map(|i| k_v * i)
}

/// Advances the body surrogate, odometry and wheel kinematics by `dt`.
///
/// Wheel rates are the rolling rate `x_dot / r` plus a differential part
/// driven by each wheel's torque relative to the mean.
pub fn body_step(state: &RobotState, torque: [f64; 3], cfg: &PlantConfig, dt: f64) -> Result<RobotState, PlantError> {
    let s = state.body_vector();
    let u = SVector::<f64, 3>::from(torque);
    let mut ds = cfg.a * s + cfg.b * u;
    ds[idx::X_DOT] += cfg.flow_disturbance();
    let next_body = s + ds * dt;

    let r = cfg.wheel_radius;
    let mean_torque = torque.iter().sum::<f64>() / 3.0;
    let mut next = state.clone();
    next.x = state.x + dt * state.x_dot;
    next.set_body_vector(&next_body);
    for i in 0..3 {
        let diff = state.wheel_rates[i] - state.x_dot / r;
        let d_diff = (torque[i] - mean_torque) / cfg.wheel_inertia - cfg.wheel_damping * diff;
        let next_diff = diff + dt * d_diff;
        next.wheel_angles[i] = state.wheel_angles[i] + dt * state.wheel_rates[i];
        next.wheel_rates[i] = next.x_dot / r + next_diff;
    }

    if !next.is_finite() {
        return Err(PlantError::NonFinite);
    }
    if next.phi.abs() >= std::f64::consts::FRAC_PI_2 || next.psi.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(PlantError::Collapsed {
            phi: next.phi,
            psi: next.psi,
        });
    }
    Ok(next)
}

/// Robot body plus its three gear motors.
#[derive(Debug, Clone)]
pub struct Plant {
    pub cfg: PlantConfig,
    pub state: RobotState,
    pub motors: [MotorState; 3],
}

impl Plant {
    pub fn new(cfg: PlantConfig, state: RobotState) -> Self {
        Self {
            cfg,
            state,
            motors: [MotorState::default(); 3],
        }
    }

    /// Applies motor voltages for one `cfg.dt` step.
    pub fn step(&mut self, voltages: [f64; 3]) -> Result<(), PlantError> {
        let dt = self.cfg.dt;
        let supply = self.cfg.motor.supply_voltage;
        for (i, motor) in self.motors.iter_mut().enumerate() {
            motor.command(voltages[i], supply);
            *motor = motor_step(*motor, self.state.wheel_rates[i], &self.cfg.motor, dt);
            if !motor.current.is_finite() {
                return Err(PlantError::NonFinite);
            }
        }
        let torque = torque_from_current(self.motors.map(|m| m.current), self.cfg.motor.k_v);
        self.state = body_step(&self.state, torque, &self.cfg, dt)?;
        Ok(())
    }
}
