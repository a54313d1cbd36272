//! Train stop control simulation.
//!
//! A single train approaches a stop point at position 0 over a line of
//! balises. Each balise passage yields a reported location which drives the
//! braking controller; attacks alter what the balises transmit. The plant
//! models the brake as a dead time followed by a first-order lag.

mod anomaly;
mod conservative;
mod deployment;
mod hoa;
mod params;
mod plant;
mod scenario;

use thiserror::Error;

pub use anomaly::{
    balise_missing, derive_trustworthy_info, missing_balise, AnomalyState, AuthOutcome,
    EncounterRecord, PositionEstimate, TrustDecision, TrustKind,
};
pub use conservative::{ConservativeMode, ConservativeState, Pid, PidGains, PID1_GAINS, PID2_GAINS};
pub use deployment::{
    Attack, AttackState, AuthMode, Balise, BaliseKind, Deployment, Reader, Reading, TrackEntry,
    TrackMap,
};
pub use hoa::{
    expected_decel, realized_decel, update_eta, BaliseResponse, DbzStrategy, HoaFault, HoaState,
    ETA_THRESHOLD,
};
pub use params::TrainParams;
pub use plant::PlantState;
pub use scenario::{
    run_scenario, ControllerKind, ControllerMode, Event, ScenarioConfig, SimResult, SimSummary,
    TrajectoryRow, COPIES_PER_PASSAGE, CSV_HEADER, DEFAULT_DELTA0, DEFAULT_ETA0, DEFAULT_GROWTH_K,
    DEFAULT_MAX_TIME_S, DEFAULT_V_CON,
};

use crate::auth::KeystoreError;
use crate::telegram::CodecError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Keystore(#[from] KeystoreError),
    #[error("train still moving after {max_time_s} s (p = {p:.3} m, v = {v:.3} m/s)")]
    Timeout { max_time_s: f64, p: f64, v: f64 },
}
