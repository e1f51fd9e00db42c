use serde::{Deserialize, Serialize};

/// Per-wheel velocity loop gains. The loop works on wheel rate (rad/s) and
/// outputs motor voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the integral contribution (V).
    pub integral_clamp: f64,
    /// Bound on the total output (V).
    pub output_clamp: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 0.5,
            ki: 8.7,
            kd: 0.0,
            integral_clamp: 8.0,
            output_clamp: 12.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !v.is_finite() {
                return Err(format!("pid.{name} must be finite"));
            }
        }
        if !(self.integral_clamp >= 0.0) || !(self.output_clamp > 0.0) {
            return Err("pid clamps must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pid {
    pub gains: PidGains,
    accumulated: f64,
    prev_error: Option<f64>,
}

impl Pid {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            accumulated: 0.0,
            prev_error: None,
        }
    }

    pub fn reset(&mut self) {
        self.accumulated = 0.0;
        self.prev_error = None;
    }

    /// Current integral contribution `ki * integral(e)`.
    pub fn integral_term(&self) -> f64 {
        self.gains.ki * self.accumulated
    }

    pub fn step(&mut self, error: f64, dt: f64) -> f64 {
        let g = &self.gains;
        self.accumulated += error * dt;
        if g.ki != 0.0 {
            // Clamp the accumulator so the integral term stays within its bound.
            let bound = g.integral_clamp / g.ki.abs();
            self.accumulated = self.accumulated.clamp(-bound, bound);
        } else {
            self.accumulated = 0.0;
        }
        let derivative = match self.prev_error {
            Some(prev) if dt > 0.0 => (error - prev) / dt,
            _ => 0.0,
        };
        self.prev_error = Some(error);
        let out = g.kp * error + g.ki * self.accumulated + g.kd * derivative;
        out.clamp(-g.output_clamp, g.output_clamp)
    }
}
