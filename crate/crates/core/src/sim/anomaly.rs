//! Position plausibility checks for the resilient controller.
//!
//! The train keeps an odometric position estimate `p_est` whose uncertainty
//! `delta` grows linearly with the distance travelled since the last trusted
//! fix. Telegrams are compared against it; inconsistent ones are replaced by
//! the matching track-map location when that is unambiguous.

/// Odometric position with a growing error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionEstimate {
    pub p_est: f64,
    pub delta: f64,
    delta0: f64,
    growth_k: f64,
    distance_since_fix: f64,
    fixed: bool,
}

impl PositionEstimate {
    pub fn new(p_est0: f64, delta0: f64, growth_k: f64) -> Self {
        Self {
            p_est: p_est0,
            delta: delta0,
            delta0,
            growth_k,
            distance_since_fix: 0.0,
            fixed: false,
        }
    }

    pub fn growth_k(&self) -> f64 {
        self.growth_k
    }

    /// Adds odometer travel `ds`.
    pub fn advance(&mut self, ds: f64) {
        self.p_est += ds;
        self.distance_since_fix += ds.abs();
        self.refresh();
    }

    /// Snaps the estimate to a trusted location.
    pub fn fix(&mut self, loc: f64) {
        self.p_est = loc;
        self.fixed = true;
        self.distance_since_fix = 0.0;
        self.refresh();
    }

    fn refresh(&mut self) {
        let base = if self.fixed { 0.0 } else { self.delta0 };
        self.delta = base + self.growth_k * self.distance_since_fix;
    }
}

/// Telegram encountered without a unique track-map match.
#[derive(Debug, Clone, PartialEq)]
pub struct EncounterRecord {
    /// Odometric position at the encounter.
    pub local: f64,
    /// Track-map locations within `delta` of it.
    pub candidates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyState {
    /// Track-map locations of the fixed balises, ascending.
    pub known: Vec<f64>,
    /// Stop point, used as the location following the last fixed balise.
    pub stop_loc: f64,
    pub received: Vec<bool>,
    pub records: Vec<EncounterRecord>,
}

impl AnomalyState {
    pub fn new(known: Vec<f64>, stop_loc: f64) -> Self {
        let received = vec![false; known.len()];
        Self {
            known,
            stop_loc,
            received,
            records: Vec::new(),
        }
    }

    fn next_loc(&self, i: usize) -> f64 {
        self.known.get(i + 1).copied().unwrap_or(self.stop_loc)
    }

    fn within(&self, p: f64, delta: f64) -> Vec<usize> {
        (0..self.known.len())
            .filter(|&i| (self.known[i] - p).abs() < delta)
            .collect()
    }

    fn mark_nearest(&mut self, loc: f64, delta: f64) {
        let nearest = (0..self.known.len())
            .filter(|&i| (self.known[i] - loc).abs() < delta.max(1e-9))
            .min_by(|&a, &b| {
                (self.known[a] - loc)
                    .abs()
                    .total_cmp(&(self.known[b] - loc).abs())
            });
        if let Some(i) = nearest {
            self.received[i] = true;
        }
    }
}

/// Index of the first unreceived balise the estimate says should already
/// have been passed, if any.
///
/// For unreceived balise `i` the check fires when
/// `|p_est| < |loc_i| − delta` or `|p_est| < |loc_{i+1}| + delta`.
pub fn missing_balise(est: &PositionEstimate, anomaly: &AnomalyState) -> Option<usize> {
    let p = est.p_est.abs();
    (0..anomaly.known.len()).find(|&i| {
        !anomaly.received[i]
            && (p < anomaly.known[i].abs() - est.delta
                || p < anomaly.next_loc(i).abs() + est.delta)
    })
}

pub fn balise_missing(est: &PositionEstimate, anomaly: &AnomalyState) -> bool {
    missing_balise(est, anomaly).is_some()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthOutcome {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrustKind {
    /// Telegram passed and agrees with the estimate.
    Accepted,
    /// Exactly one track-map balise lies within `delta` of the estimate.
    Recovered,
    /// Ambiguity resolved through the distance between two encounters.
    Disambiguated,
    /// Ambiguous; kept for later disambiguation.
    Recorded,
    /// No track-map balise is plausible here.
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustDecision {
    /// Location to feed the braking controller, if any.
    pub location: Option<f64>,
    pub kind: TrustKind,
}

impl TrustDecision {
    fn none(kind: TrustKind) -> Self {
        Self {
            location: None,
            kind,
        }
    }
}

/// Decides which location, if any, a balise encounter contributes.
/// A returned location also resets the estimate to it.
pub fn derive_trustworthy_info(
    auth: AuthOutcome,
    loc_reported: Option<f64>,
    est: &mut PositionEstimate,
    anomaly: &mut AnomalyState,
) -> TrustDecision {
    let delta = est.delta;
    if let (AuthOutcome::Pass, Some(loc)) = (auth, loc_reported) {
        if (est.p_est - loc).abs() < delta {
            anomaly.mark_nearest(loc, delta);
            est.fix(loc);
            return TrustDecision {
                location: Some(loc),
                kind: TrustKind::Accepted,
            };
        }
    }
    let candidates = anomaly.within(est.p_est, delta);
    match candidates.len() {
        0 => TrustDecision::none(TrustKind::Rejected),
        1 => {
            let i = candidates[0];
            let loc = anomaly.known[i];
            anomaly.received[i] = true;
            est.fix(loc);
            TrustDecision {
                location: Some(loc),
                kind: TrustKind::Recovered,
            }
        }
        _ => {
            anomaly.records.push(EncounterRecord {
                local: est.p_est,
                candidates: candidates.iter().map(|&i| anomaly.known[i]).collect(),
            });
            match disambiguate(&anomaly.records, est.growth_k()) {
                Some(loc) => {
                    anomaly.records.clear();
                    anomaly.mark_nearest(loc, delta);
                    est.fix(loc);
                    TrustDecision {
                        location: Some(loc),
                        kind: TrustKind::Disambiguated,
                    }
                }
                None => TrustDecision::none(TrustKind::Recorded),
            }
        }
    }
}

/// Matches the odometric distance between the newest record and each older
/// one against track-map distances between their candidates. Succeeds only
/// when exactly one candidate pair fits.
fn disambiguate(records: &[EncounterRecord], growth_k: f64) -> Option<f64> {
    let (newest, older) = records.split_last()?;
    for old in older {
        let d = newest.local - old.local;
        let tol = (growth_k * d.abs()).max(1e-6);
        let mut fits = old.candidates.iter().flat_map(|&l| {
            newest
                .candidates
                .iter()
                .filter(move |&&m| ((m - l) - d).abs() <= tol)
                .copied()
        });
        if let (Some(m), None) = (fits.next(), fits.next()) {
            return Some(m);
        }
    }
    None
}
