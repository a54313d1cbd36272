//! Scenario configuration and the closed-loop run.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::anomaly::{
    derive_trustworthy_info, missing_balise, AnomalyState, AuthOutcome, PositionEstimate,
    TrustKind,
};
use super::conservative::{ConservativeMode, ConservativeState};
use super::deployment::{
    Attack, AuthMode, BaliseKind, Deployment, Reading, TrackEntry, TrackMap,
};
use super::hoa::{DbzStrategy, HoaState};
use super::plant::PlantState;
use super::{SimError, TrainParams};
use crate::auth::Keystore;
use crate::telegram::{Codec, TelegramFormat};

/// Initial HOA learning gain.
pub const DEFAULT_ETA0: f64 = 0.85;
/// Conservative holding speed.
pub const DEFAULT_V_CON: f64 = 0.35;
pub const DEFAULT_DELTA0: f64 = 5.0;
/// Odometry uncertainty growth per metre travelled.
pub const DEFAULT_GROWTH_K: f64 = 0.02;
pub const DEFAULT_MAX_TIME_S: f64 = 600.0;
/// Telegram repetitions received per passage.
pub const COPIES_PER_PASSAGE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// HOA alone; every accepted telegram is used as is.
    #[default]
    Hoa,
    /// HOA with plausibility checks and conservative fallback.
    Resilient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub train: TrainParams,
    /// Inline track map. Ignored when `track_map` is set.
    pub balises: Option<Vec<TrackEntry>>,
    /// Track-map file.
    pub track_map: Option<PathBuf>,
    pub attacks: Vec<Attack>,
    pub controller: ControllerKind,
    pub dbz_strategy: DbzStrategy,
    /// Initial position estimate; defaults to `train.p0`.
    pub p_est0: Option<f64>,
    pub delta0: f64,
    pub growth_k: f64,
    pub auth_mode: AuthMode,
    pub format: TelegramFormat,
    /// Drives legacy `sb` values, reader phase and, without `keystore`, the master key.
    pub seed: u64,
    pub keystore: Option<PathBuf>,
    pub max_time_s: f64,
    pub eta0: f64,
    pub v_con: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: String::new(),
            train: TrainParams::default(),
            balises: None,
            track_map: None,
            attacks: Vec::new(),
            controller: ControllerKind::default(),
            dbz_strategy: DbzStrategy::default(),
            p_est0: None,
            delta0: DEFAULT_DELTA0,
            growth_k: DEFAULT_GROWTH_K,
            auth_mode: AuthMode::default(),
            format: TelegramFormat::Long,
            seed: 0,
            keystore: None,
            max_time_s: DEFAULT_MAX_TIME_S,
            eta0: DEFAULT_ETA0,
            v_con: DEFAULT_V_CON,
        }
    }
}

impl ScenarioConfig {
    /// Reads a JSON config. Relative file references are resolved against
    /// the config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut config: Self = serde_json::from_str(&text)
            .map_err(|e| SimError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.track_map, &mut config.keystore].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if config.name.is_empty() {
            if let Some(stem) = path.file_stem() {
                config.name = stem.to_string_lossy().into_owned();
            }
        }
        Ok(config)
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SimError> {
        self.train.validate()?;
        let bad = |what: &str| Err(SimError::InvalidConfig(what.to_string()));
        if !(self.eta0 > 0.0) {
            return bad("eta0 must be positive");
        }
        if !(self.v_con > 0.0) {
            return bad("v_con must be positive");
        }
        if !(self.delta0 >= 0.0 && self.growth_k >= 0.0) {
            return bad("delta0 and growth_k must be non-negative");
        }
        if !(self.max_time_s > 0.0) {
            return bad("max_time_s must be positive");
        }
        Ok(())
    }

    pub fn resolve_track(&self) -> Result<TrackMap, SimError> {
        match (&self.track_map, &self.balises) {
            (Some(path), _) => TrackMap::load(path),
            (None, Some(entries)) => TrackMap::new(entries.clone()),
            (None, None) => Ok(TrackMap::default()),
        }
    }

    pub fn resolve_keystore(&self) -> Result<Keystore, SimError> {
        match &self.keystore {
            Some(path) => Ok(Keystore::load(path)?),
            None => Ok(Keystore::generate(Some(self.seed))),
        }
    }
}

/// Controller in charge at a given step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMode {
    Default,
    Pid1,
    Pid2,
    MaxBrake,
}

impl ControllerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerMode::Default => "default",
            ControllerMode::Pid1 => "pid1",
            ControllerMode::Pid2 => "pid2",
            ControllerMode::MaxBrake => "max_brake",
        }
    }
}

impl From<ConservativeMode> for ControllerMode {
    fn from(m: ConservativeMode) -> Self {
        match m {
            ConservativeMode::Pid1 => ControllerMode::Pid1,
            ConservativeMode::Pid2 => ControllerMode::Pid2,
            ConservativeMode::MaxBrake => ControllerMode::MaxBrake,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    /// Balise passage; `balise` is the 1-based track index.
    Balise { balise: usize, reported: Option<f64> },
    AuthFailure { balise: usize },
    NoTelegram { balise: usize },
    Accepted { balise: usize, loc: f64 },
    Recovered { balise: usize, loc: f64 },
    Disambiguated { balise: usize, loc: f64 },
    Recorded { balise: usize },
    Rejected { balise: usize },
    DivisionByZero { balise: usize },
    DegenerateReference { balise: usize },
    BaliseMissing { balise: usize },
    SwitchToConservative,
    StopMarker,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Balise { balise, reported: Some(loc) } => write!(f, "balise{balise}@{loc}"),
            Event::Balise { balise, reported: None } => write!(f, "balise{balise}"),
            Event::AuthFailure { balise } => write!(f, "auth_fail{balise}"),
            Event::NoTelegram { balise } => write!(f, "no_telegram{balise}"),
            Event::Accepted { balise, loc } => write!(f, "trusted{balise}@{loc}"),
            Event::Recovered { balise, loc } => write!(f, "recovered{balise}@{loc}"),
            Event::Disambiguated { balise, loc } => write!(f, "disambiguated{balise}@{loc}"),
            Event::Recorded { balise } => write!(f, "recorded{balise}"),
            Event::Rejected { balise } => write!(f, "rejected{balise}"),
            Event::DivisionByZero { balise } => write!(f, "division_by_zero{balise}"),
            Event::DegenerateReference { balise } => write!(f, "degenerate_reference{balise}"),
            Event::BaliseMissing { balise } => write!(f, "balise_missing{balise}"),
            Event::SwitchToConservative => f.write_str("switch_conservative"),
            Event::StopMarker => f.write_str("stop_marker"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub p: f64,
    pub v: f64,
    pub alpha_cmd: f64,
    pub alpha_actual: f64,
    pub mode: ControllerMode,
    pub events: Vec<Event>,
}

pub const CSV_HEADER: [&str; 7] = ["t", "p", "v", "alpha_cmd", "alpha_actual", "mode", "event"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub stop_error_m: f64,
    pub stop_time_s: f64,
    pub mode_switches: usize,
    pub auth_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub stop_error: f64,
    pub stop_time: f64,
    pub trajectory: Vec<TrajectoryRow>,
    pub auth_failures: usize,
    pub balise_missing_events: usize,
    pub mode_switches: usize,
}

impl SimResult {
    pub fn summary(&self) -> SimSummary {
        SimSummary {
            stop_error_m: self.stop_error,
            stop_time_s: self.stop_time,
            mode_switches: self.mode_switches,
            auth_failures: self.auth_failures,
        }
    }

    pub fn events(&self) -> impl Iterator<Item = (f64, &Event)> {
        self.trajectory
            .iter()
            .flat_map(|r| r.events.iter().map(move |e| (r.t, e)))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in &self.trajectory {
            let events = r
                .events
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(";");
            out.write_record([
                ((r.t * 1e9).round() / 1e9).to_string(),
                r.p.to_string(),
                r.v.to_string(),
                r.alpha_cmd.to_string(),
                r.alpha_actual.to_string(),
                r.mode.as_str().to_string(),
                events,
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

struct Resilient {
    est: PositionEstimate,
    anomaly: AnomalyState,
    conservative: Option<ConservativeState>,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let track = config.resolve_track()?;
    let keystore = config.resolve_keystore()?;
    let params = config.train;
    let codec = Codec::shared();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut deployment = Deployment::program(
        codec,
        &track,
        config.format,
        config.auth_mode,
        keystore,
        &mut rng,
    )?;
    for attack in &config.attacks {
        deployment.apply_attack(codec, attack)?;
    }
    let reader = deployment.reader(codec);

    let mut plant = PlantState::new(&params);
    let mut hoa = HoaState::new(config.eta0, params.alpha_max, config.dbz_strategy);
    let mut resilient = (config.controller == ControllerKind::Resilient).then(|| Resilient {
        est: PositionEstimate::new(
            config.p_est0.unwrap_or(params.p0),
            config.delta0,
            config.growth_k,
        ),
        anomaly: AnomalyState::new(track.fixed_locations(), 0.0),
        conservative: None,
    });

    let mut trajectory = Vec::new();
    let mut auth_failures = 0;
    let mut balise_missing_events = 0;
    let mut mode_switches = 0;
    let mut marker_seen = false;
    let mut next = 0;
    let mut last_mode = ControllerMode::Default;

    for k in 0usize.. {
        let t = k as f64 * params.dt;
        if t > config.max_time_s {
            return Err(SimError::Timeout {
                max_time_s: config.max_time_s,
                p: plant.p,
                v: plant.v,
            });
        }
        let mut events = Vec::new();

        while next < deployment.balises.len() && deployment.balises[next].loc <= plant.p {
            let i = next;
            next += 1;
            let balise = &deployment.balises[i];
            let offset = rng.gen_range(0..config.format.n());
            let reading = reader.read(balise, i, offset, COPIES_PER_PASSAGE);
            let reported = match &reading {
                Reading::Accepted(u) => Some(u.reported_location_m()),
                Reading::AuthFailed => {
                    auth_failures += 1;
                    events.push(Event::AuthFailure { balise: i + 1 });
                    None
                }
                Reading::Silent => {
                    events.push(Event::NoTelegram { balise: i + 1 });
                    None
                }
            };
            events.push(Event::Balise { balise: i + 1, reported });

            if balise.kind == BaliseKind::Controlled {
                if reported.is_some() {
                    marker_seen = true;
                    events.push(Event::StopMarker);
                }
                continue;
            }

            let input = match resilient.as_mut() {
                None => reported,
                Some(r) if r.conservative.is_some() => None,
                Some(r) => {
                    let auth = if reported.is_some() { AuthOutcome::Pass } else { AuthOutcome::Fail };
                    let d = derive_trustworthy_info(auth, reported, &mut r.est, &mut r.anomaly);
                    let balise = i + 1;
                    events.push(match (d.kind, d.location) {
                        (TrustKind::Accepted, Some(loc)) => Event::Accepted { balise, loc },
                        (TrustKind::Recovered, Some(loc)) => Event::Recovered { balise, loc },
                        (TrustKind::Disambiguated, Some(loc)) => Event::Disambiguated { balise, loc },
                        (TrustKind::Recorded, _) => Event::Recorded { balise },
                        _ => Event::Rejected { balise },
                    });
                    d.location
                }
            };
            if let Some(loc) = input {
                let response = hoa.on_balise(plant.v, loc);
                match response.fault {
                    Some(super::HoaFault::DivisionByZero) => {
                        events.push(Event::DivisionByZero { balise: i + 1 })
                    }
                    Some(super::HoaFault::DegenerateReference) => {
                        events.push(Event::DegenerateReference { balise: i + 1 })
                    }
                    None => {}
                }
            }
        }

        if let Some(r) = resilient.as_mut() {
            if r.conservative.is_none() {
                if let Some(i) = missing_balise(&r.est, &r.anomaly) {
                    balise_missing_events += 1;
                    events.push(Event::BaliseMissing { balise: i + 1 });
                    events.push(Event::SwitchToConservative);
                    r.conservative = Some(ConservativeState::new(config.v_con, params.alpha_max));
                }
            }
        }

        let (alpha_cmd, mode) = match resilient.as_mut().and_then(|r| r.conservative.as_mut()) {
            Some(c) => {
                let a = c.step(plant.v, marker_seen, params.dt);
                (a, c.mode.into())
            }
            None if marker_seen => (params.alpha_max, ControllerMode::Default),
            None => (hoa.demand(), ControllerMode::Default),
        };
        if mode != last_mode {
            mode_switches += 1;
            last_mode = mode;
        }

        trajectory.push(TrajectoryRow {
            t,
            p: plant.p,
            v: plant.v,
            alpha_cmd,
            alpha_actual: plant.alpha_actual,
            mode,
            events,
        });

        let p_before = plant.p;
        plant.step(alpha_cmd, &params);
        if let Some(r) = resilient.as_mut() {
            r.est.advance(plant.p - p_before);
        }

        if plant.stopped() {
            let stop_time = (k + 1) as f64 * params.dt;
            trajectory.push(TrajectoryRow {
                t: stop_time,
                p: plant.p,
                v: plant.v,
                alpha_cmd,
                alpha_actual: plant.alpha_actual,
                mode,
                events: Vec::new(),
            });
            return Ok(SimResult {
                stop_error: plant.p,
                stop_time,
                trajectory,
                auth_failures,
                balise_missing_events,
                mode_switches,
            });
        }
    }
    unreachable!("the step loop only exits by returning")
}
