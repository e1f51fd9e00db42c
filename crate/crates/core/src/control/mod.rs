//! Multi-phase motion control: LQR stabilizer plus per-wheel PID velocity
//! loops for straight runs, and differential steering for junctions.

pub mod lqr;
pub mod pid;
pub mod steering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plant::{MatrixSpec, PlantConfig, RobotState};
pub use lqr::{synthesize_lqr, Eigenvalue, LqrGains};
pub use pid::{Pid, PidGains};
pub use steering::{RotationAxis, SteerOutput, Steerer, SteeringParams, SteeringPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("Riccati synthesis failed: {reason} (residual {residual:e})")]
    Synthesis { reason: String, residual: f64 },
    #[error("pair is not stabilizable: {0}")]
    NotStabilizable(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("closed loop is unstable: max real part {max_real}")]
    Unstable { max_real: f64 },
    #[error("steering timed out at {accumulated_deg:.2} deg of {target_deg:.2} deg")]
    SteeringTimeout { accumulated_deg: f64, target_deg: f64 },
    #[error("{configuration} not traversable at {diameter_in:.2} in (supported {min_in}-{max_in} in)")]
    OutOfRange {
        configuration: String,
        diameter_in: f64,
        min_in: f64,
        max_in: f64,
    },
    #[error("invalid control configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlPhase {
    Idle,
    StraightCruise,
    HoldStabilize,
    Steer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    /// Diagonal of Q over `[phi, psi, phi_dot, psi_dot]`; ignored when `q` is set.
    pub q_diag: [f64; 4],
    /// Diagonal of R over the three torques; ignored when `r` is set.
    pub r_diag: [f64; 3],
    pub q: Option<MatrixSpec>,
    pub r: Option<MatrixSpec>,
    pub pid: PidGains,
    pub steering: SteeringParams,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            q_diag: [10.0, 10.0, 1.0, 1.0],
            r_diag: [1.0, 1.0, 1.0],
            q: None,
            r: None,
            pid: PidGains::default(),
            steering: SteeringParams::default(),
        }
    }
}

impl ControlConfig {
    pub fn q_matrix(&self) -> Result<DMatrix<f64>, ControlError> {
        match &self.q {
            Some(spec) => spec
                .to_dmatrix()
                .map_err(|e| ControlError::InvalidWeights(e.to_string())),
            None => Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&self.q_diag))),
        }
    }

    pub fn r_matrix(&self) -> Result<DMatrix<f64>, ControlError> {
        match &self.r {
            Some(spec) => spec
                .to_dmatrix()
                .map_err(|e| ControlError::InvalidWeights(e.to_string())),
            None => Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&self.r_diag))),
        }
    }
}

/// Everything the straight-path controller needs, synthesized once per plant.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    pub lqr: LqrGains,
    pub pid: PidGains,
    /// Converts torque corrections to motor voltage (`R_m / k_v`).
    pub volts_per_torque: f64,
    pub wheel_radius: f64,
    pub supply_voltage: f64,
}

impl ControllerGains {
    pub fn synthesize(cfg: &ControlConfig, plant: &PlantConfig) -> Result<Self, ControlError> {
        cfg.pid.validate().map_err(ControlError::Config)?;
        cfg.steering.validate()?;
        let lqr = synthesize_lqr(
            &plant.stabilizing_a(),
            &plant.stabilizing_b(),
            &cfg.q_matrix()?,
            &cfg.r_matrix()?,
        )?;
        Ok(Self {
            lqr,
            pid: cfg.pid,
            volts_per_torque: plant.motor.resistance / plant.motor.k_v,
            wheel_radius: plant.wheel_radius,
            supply_voltage: plant.motor.supply_voltage,
        })
    }

    /// Torque corrections `K [phi, psi, phi_dot, psi_dot]`.
    pub fn stabilizer_torque(&self, state: &RobotState) -> [f64; 3] {
        let s = state.stabilizing();
        let k = &self.lqr.k;
        std::array::from_fn(|i| (0..4).map(|j| k[(i, j)] * s[j]).sum())
    }
}

/// LQR stabilizer combined with three wheel-velocity PID loops.
#[derive(Debug, Clone)]
pub struct LqrPidController {
    pub gains: ControllerGains,
    pids: [Pid; 3],
}

impl LqrPidController {
    pub fn new(gains: ControllerGains) -> Self {
        let pid = Pid::new(gains.pid);
        Self {
            gains,
            pids: [pid.clone(), pid.clone(), pid],
        }
    }

    pub fn reset(&mut self) {
        self.pids.iter_mut().for_each(Pid::reset);
    }

    /// Motor voltages tracking `v_desired` (m/s) while regulating the
    /// stabilizing states to zero.
    pub fn step(&mut self, state: &RobotState, v_desired: f64, dt: f64) -> [f64; 3] {
        let g = &self.gains;
        let target_rate = v_desired / g.wheel_radius;
        let correction = g.stabilizer_torque(state);
        std::array::from_fn(|i| {
            let velocity = self.pids[i].step(target_rate - state.wheel_rates[i], dt);
            (velocity - g.volts_per_torque * correction[i]).clamp(-g.supply_voltage, g.supply_voltage)
        })
    }
}

/// Machine-readable summary of a synthesized controller.
#[derive(Debug, Clone, Serialize)]
pub struct TuneReport {
    pub k_lqr: Vec<Vec<f64>>,
    pub riccati_residual: f64,
    pub closed_loop_eigenvalues: Vec<Eigenvalue>,
    pub spectral_abscissa: f64,
    pub hurwitz_stable: bool,
    pub pid: PidGains,
    pub volts_per_torque: f64,
}

impl TuneReport {
    pub fn new(gains: &ControllerGains, plant: &PlantConfig) -> Self {
        let k = &gains.lqr.k;
        let a_cl = plant.stabilizing_a() - plant.stabilizing_b() * k;
        Self {
            k_lqr: (0..k.nrows())
                .map(|r| (0..k.ncols()).map(|c| k[(r, c)]).collect())
                .collect(),
            riccati_residual: gains.lqr.residual,
            closed_loop_eigenvalues: gains.lqr.closed_loop.clone(),
            spectral_abscissa: gains.lqr.spectral_abscissa(),
            hurwitz_stable: lqr::hurwitz_stable(&a_cl),
            pid: gains.pid,
            volts_per_torque: gains.volts_per_torque,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_fixed_point() {
        let plant = PlantConfig::default();
        let gains = ControllerGains::synthesize(&ControlConfig::default(), &plant).unwrap();
        let mut c = LqrPidController::new(gains);
        assert_eq!(c.step(&RobotState::default(), 0.0, 1e-3), [0.0; 3]);
    }

    #[test]
    fn output_is_clamped() {
        let plant = PlantConfig::default();
        let gains = ControllerGains::synthesize(&ControlConfig::default(), &plant).unwrap();
        let mut c = LqrPidController::new(gains);
        let s = RobotState::with_tilt(1.2, -1.2);
        for v in c.step(&s, 50.0, 1e-3) {
            assert!(v.abs() <= 12.0);
        }
    }
}
