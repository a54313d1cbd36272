//! Brake plant: dead time followed by a first-order lag.
//!
//! The demanded deceleration enters a FIFO of `round(td/dt)` samples, then
//! drives a forward-Euler lag with time constant `tp`. The realised
//! deceleration is limited to `[alpha_max, 0]`: demands beyond the brake's
//! capability saturate the actuator, they are not clipped beforehand.

use std::collections::VecDeque;

use super::TrainParams;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub alpha_actual: f64,
    pub delay_line: VecDeque<f64>,
    pub v: f64,
    pub p: f64,
}

impl PlantState {
    pub fn new(params: &TrainParams) -> Self {
        Self {
            alpha_actual: 0.0,
            delay_line: std::iter::repeat_n(0.0, params.delay_steps()).collect(),
            v: params.v0,
            p: params.p0,
        }
    }

    pub fn step(&mut self, demand: f64, params: &TrainParams) {
        self.delay_line.push_back(demand);
        let delayed = self
            .delay_line
            .pop_front()
            .expect("delay line holds the pushed sample");
        let a = if params.tp > 0.0 {
            self.alpha_actual + params.dt * (delayed - self.alpha_actual) / params.tp
        } else {
            delayed
        };
        self.alpha_actual = a.clamp(params.alpha_max, 0.0);
        self.v = (self.v + self.alpha_actual * params.dt).max(0.0);
        self.p += self.v * params.dt;
    }

    pub fn stopped(&self) -> bool {
        self.v <= 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> TrainParams {
        TrainParams::default()
    }

    #[test]
    fn steady_state_tracks_constant_command() {
        let p = TrainParams { v0: 1e6, ..params() };
        let mut plant = PlantState::new(&p);
        // ≫ td + 5 tp
        for _ in 0..1000 {
            plant.step(-0.7, &p);
        }
        assert!((plant.alpha_actual + 0.7).abs() < 0.007);
    }

    #[test]
    fn nothing_happens_during_dead_time() {
        let p = params();
        let mut plant = PlantState::new(&p);
        for k in 0..p.delay_steps() {
            plant.step(-1.0, &p);
            assert_eq!(plant.alpha_actual, 0.0, "step {k}");
        }
        plant.step(-1.0, &p);
        assert!(plant.alpha_actual < 0.0);
    }

    #[test]
    fn step_response_matches_first_order_lag() {
        let p = TrainParams { v0: 1e6, ..params() };
        let mut plant = PlantState::new(&p);
        let steps = ((p.td + p.tp) / p.dt).round() as usize;
        for _ in 0..steps {
            plant.step(-0.5, &p);
        }
        // closed form at t = td + tp: 1 - e^-1
        let expected = -0.5 * (1.0 - (-1.0f64).exp());
        assert!(
            ((plant.alpha_actual - expected) / expected).abs() < 0.02,
            "{} vs {}",
            plant.alpha_actual,
            expected
        );
    }

    #[test]
    fn demand_beyond_capability_saturates_actual() {
        let p = params();
        let mut plant = PlantState::new(&p);
        for _ in 0..(p.delay_steps() + 5) {
            plant.step(-50.0, &p);
        }
        assert_eq!(plant.alpha_actual, p.alpha_max);
    }

    #[test]
    fn velocity_never_negative() {
        let p = TrainParams { v0: 0.05, td: 0.0, ..params() };
        let mut plant = PlantState::new(&p);
        for _ in 0..200 {
            plant.step(-1.0, &p);
            assert!(plant.v >= 0.0);
        }
        assert!(plant.stopped());
    }

    #[test]
    fn zero_lag_passes_delayed_command_through() {
        let p = TrainParams { tp: 0.0, td: 0.0, ..params() };
        let mut plant = PlantState::new(&p);
        plant.step(-0.25, &p);
        assert_eq!(plant.alpha_actual, -0.25);
        assert!((plant.v - (10.0 - 0.0025)).abs() < 1e-12);
    }
}
