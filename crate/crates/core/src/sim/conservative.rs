//! Conservative fallback braking: two PID stages and a final full brake.
//!
//! `Pid1` pulls the speed down to `v_con` quickly, `Pid2` holds it there, and
//! once the stop marker is passed the controller brakes at `alpha_max` until
//! the train stands still. Mode changes are one-way.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

pub const PID1_GAINS: PidGains = PidGains {
    kp: 0.8423,
    ki: 0.0648,
    kd: 0.4082,
};

pub const PID2_GAINS: PidGains = PidGains {
    kp: 0.0377,
    ki: 0.0002,
    kd: 0.2205,
};

/// Positional PID on `e = v − v_con` with rectangular integration,
/// backward-difference derivative and conditional-integration anti-windup.
/// Output is a deceleration in `[alpha_max, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pid {
    pub gains: PidGains,
    pub integral: f64,
    pub prev_error: Option<f64>,
}

impl Pid {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            prev_error: None,
        }
    }

    pub fn update(&mut self, error: f64, dt: f64, alpha_max: f64) -> f64 {
        let derivative = self.prev_error.map_or(0.0, |prev| (error - prev) / dt);
        self.prev_error = Some(error);
        let integral = self.integral + error * dt;
        let raw = -(self.gains.kp * error + self.gains.ki * integral + self.gains.kd * derivative);
        let out = raw.clamp(alpha_max, 0.0);
        if out == raw {
            self.integral = integral;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConservativeMode {
    Pid1,
    Pid2,
    MaxBrake,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservativeState {
    pub pid1: Pid,
    pub pid2: Pid,
    pub v_con: f64,
    pub mode: ConservativeMode,
    alpha_max: f64,
}

impl ConservativeState {
    pub fn new(v_con: f64, alpha_max: f64) -> Self {
        Self::with_gains(v_con, alpha_max, PID1_GAINS, PID2_GAINS)
    }

    pub fn with_gains(v_con: f64, alpha_max: f64, pid1: PidGains, pid2: PidGains) -> Self {
        Self {
            pid1: Pid::new(pid1),
            pid2: Pid::new(pid2),
            v_con,
            mode: ConservativeMode::Pid1,
            alpha_max,
        }
    }

    pub fn step(&mut self, v: f64, marker_seen: bool, dt: f64) -> f64 {
        if marker_seen {
            self.mode = ConservativeMode::MaxBrake;
        } else if self.mode == ConservativeMode::Pid1 && v <= self.v_con {
            self.mode = ConservativeMode::Pid2;
        }
        let error = v - self.v_con;
        match self.mode {
            ConservativeMode::Pid1 => self.pid1.update(error, dt, self.alpha_max),
            ConservativeMode::Pid2 => self.pid2.update(error, dt, self.alpha_max),
            ConservativeMode::MaxBrake => self.alpha_max,
        }
    }
}
