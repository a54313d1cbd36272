//! Heuristic online learning braking controller.
//!
//! At every balise the controller computes the deceleration that would stop
//! the train exactly at the reported distance, then corrects it by the error
//! between the deceleration it commanded over the previous segment and the
//! one it actually observed. The learning gain `eta` shrinks by 5% when that
//! error exceeds 0.05 m/s² and grows by 5% otherwise. The command is held
//! constant between balises.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Deviation above which the learning gain is reduced.
pub const ETA_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoaFault {
    /// Reported location is the stop point itself.
    DegenerateReference,
    /// Two successive balises report the same distance to the stop point.
    DivisionByZero,
}

impl fmt::Display for HoaFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HoaFault::DegenerateReference => f.write_str("degenerate_reference"),
            HoaFault::DivisionByZero => f.write_str("division_by_zero"),
        }
    }
}

/// Reaction to a [`HoaFault`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DbzStrategy {
    /// Brake at `alpha_max` until the train stops.
    #[default]
    FullBrake,
    /// Keep the current command and treat the balise as the new reference.
    Ignore,
}

/// `v² / (2·loc)`.
pub fn expected_decel(v: f64, loc_reported: f64) -> Result<f64, HoaFault> {
    if loc_reported == 0.0 {
        return Err(HoaFault::DegenerateReference);
    }
    Ok(v * v / (2.0 * loc_reported))
}

/// `(v_next² − v_i²) / 2D` with `D = |loc_i| − |loc_next|`.
pub fn realized_decel(v_i: f64, v_next: f64, loc_i: f64, loc_next: f64) -> Result<f64, HoaFault> {
    let d = loc_i.abs() - loc_next.abs();
    if d == 0.0 {
        return Err(HoaFault::DivisionByZero);
    }
    Ok((v_next * v_next - v_i * v_i) / (2.0 * d))
}

pub fn update_eta(eta: f64, deviation: f64) -> f64 {
    if deviation.abs() > ETA_THRESHOLD {
        0.95 * eta
    } else {
        1.05 * eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaliseResponse {
    /// Brake demand held until the next balise.
    pub demand: f64,
    pub fault: Option<HoaFault>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoaState {
    pub eta: f64,
    /// Controller deceleration, saturated to `[alpha_max, 0]`.
    pub alpha_c: f64,
    pub alpha_e: f64,
    pub alpha_r: f64,
    pub prev_v: Option<f64>,
    pub prev_loc_reported: Option<f64>,
    pub dbz_strategy: DbzStrategy,
    alpha_max: f64,
    demand: f64,
    full_brake: bool,
}

impl HoaState {
    pub fn new(eta0: f64, alpha_max: f64, dbz_strategy: DbzStrategy) -> Self {
        assert!(eta0 > 0.0, "learning gain must be positive");
        Self {
            eta: eta0,
            alpha_c: 0.0,
            alpha_e: 0.0,
            alpha_r: 0.0,
            prev_v: None,
            prev_loc_reported: None,
            dbz_strategy,
            alpha_max,
            demand: 0.0,
            full_brake: false,
        }
    }

    /// Current brake demand. Unsaturated below `alpha_max`; never positive.
    pub fn demand(&self) -> f64 {
        self.demand
    }

    pub fn in_full_brake(&self) -> bool {
        self.full_brake
    }

    fn saturate(&self, a: f64) -> f64 {
        a.clamp(self.alpha_max, 0.0)
    }

    fn fault(&mut self, fault: HoaFault, v: f64, loc_reported: f64) -> BaliseResponse {
        match self.dbz_strategy {
            DbzStrategy::FullBrake => {
                self.full_brake = true;
                self.demand = self.alpha_max;
            }
            DbzStrategy::Ignore => {
                self.prev_v = Some(v);
                self.prev_loc_reported = Some(loc_reported);
            }
        }
        BaliseResponse {
            demand: self.demand,
            fault: Some(fault),
        }
    }

    /// Processes one balise passage at speed `v` with reported location
    /// `loc_reported`.
    pub fn on_balise(&mut self, v: f64, loc_reported: f64) -> BaliseResponse {
        if self.full_brake {
            return BaliseResponse {
                demand: self.demand,
                fault: None,
            };
        }
        let alpha_e = match expected_decel(v, loc_reported) {
            Ok(a) => a,
            Err(f) => return self.fault(f, v, loc_reported),
        };
        let raw = match (self.prev_v, self.prev_loc_reported) {
            (Some(prev_v), Some(prev_loc)) => {
                let alpha_r = match realized_decel(prev_v, v, prev_loc, loc_reported) {
                    Ok(a) => a,
                    Err(f) => return self.fault(f, v, loc_reported),
                };
                let deviation = alpha_r - self.alpha_c;
                let raw = alpha_e - self.eta * deviation;
                self.eta = update_eta(self.eta, deviation);
                self.alpha_r = alpha_r;
                raw
            }
            _ => alpha_e,
        };
        self.alpha_e = alpha_e;
        self.alpha_c = self.saturate(raw);
        self.demand = raw.min(0.0);
        self.prev_v = Some(v);
        self.prev_loc_reported = Some(loc_reported);
        BaliseResponse {
            demand: self.demand,
            fault: None,
        }
    }
}
