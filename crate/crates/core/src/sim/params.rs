use serde::{Deserialize, Serialize};

use super::SimError;

/// Train and integration parameters. Positions are metres relative to the
/// stop point (negative before it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub p0: f64,
    pub v0: f64,
    /// Maximum braking rate, negative.
    pub alpha_max: f64,
    /// Allowable stop error.
    pub gamma: f64,
    /// Brake dead time.
    pub td: f64,
    /// Brake lag time constant.
    pub tp: f64,
    pub dt: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            p0: -100.0,
            v0: 10.0,
            alpha_max: -1.0,
            gamma: 0.3,
            td: 0.6,
            tp: 0.4,
            dt: 0.01,
        }
    }
}

impl TrainParams {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::InvalidConfig(what.to_string()));
        if !(self.alpha_max < 0.0) {
            return bad("alpha_max must be negative");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.td >= 0.0 && self.tp >= 0.0) {
            return bad("td and tp must be non-negative");
        }
        if !(self.v0 >= 0.0) || !self.p0.is_finite() {
            return bad("v0 must be non-negative and p0 finite");
        }
        Ok(())
    }

    /// Dead time expressed in integration steps.
    pub fn delay_steps(&self) -> usize {
        (self.td / self.dt).round() as usize
    }
}
