//! Reproducible Monte Carlo estimation.
//!
//! Trial `k` of a run draws all of its randomness from seeds derived from
//! `(master_seed, k)`, so counts do not depend on the number of workers and
//! runs at different parameter values are coupled trial by trial.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::exploration::{
    b_event, d_event, explore, CouplingParams, ExplorationError, PlaneVertex, StepDirection,
};
use crate::model::{Environment, LatticeBox, ModelError, ModelParams, SiteField};
use crate::oracle::{seen_words, sees_word, OracleError, OracleLimits, SeenQuery};
use crate::oriented::{
    evaluate_events, event_indicator, l_part, m_s, sample_region, window_all_active, Event,
    EventOptions, OrientedError, ProofBoxes, Site,
};
use crate::rng::{hash_words, Sponge};
use crate::scalar::Scalar;
use crate::words::{Word, WordError};

pub const INTERVAL_NAME: &str = "wilson-0.95";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("workers must be at least 1")]
    NoWorkers,
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Exploration(#[from] ExplorationError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Oriented(#[from] OrientedError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Independent randomness streams of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    Bond,
    Site,
    Oriented,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Bond => 0xB0,
            Stream::Site => 0x51,
            Stream::Oriented => 0x0E,
        }
    }
}

pub fn derive_seed(master: u64, trial: u64, stream: Stream) -> u64 {
    hash_words(master ^ 0x5EED_5EED_5EED_5EED, &[trial, stream.tag()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub bond: u64,
    pub site: u64,
    pub oriented: u64,
}

impl TrialSeeds {
    /// A fixed `quenched` bond seed replaces the bond stream.
    pub fn for_trial(master: u64, trial: u64, quenched: Option<u64>) -> Self {
        TrialSeeds {
            bond: quenched.unwrap_or_else(|| derive_seed(master, trial, Stream::Bond)),
            site: derive_seed(master, trial, Stream::Site),
            oriented: derive_seed(master, trial, Stream::Oriented),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Every word of length `len` is seen from the origin.
    WordsSeen { len: usize },
    SingleWord { word: Word },
    /// The first child of the origin in `direction` is black for the
    /// two-letter word `letters`.
    BlackStep { direction: StepDirection, letters: [u8; 2] },
    BEvent { m: u64, eta: Word },
    /// `B_m(sigma_{4m}(eta))` holds and `B_{4m}(eta)` fails.
    BPropPair { m: u64, eta: Word },
    DEvent { m: usize },
    OrientedEvent { m: i64, which: Event },
    /// `M_S < 4m`; `S` defaults to `L_{4m,2}`.
    MsCount { m: i64, sources: Option<Vec<Site>> },
    /// Sites `0..w` all active after `t` chain steps from a full window.
    DominationWindow { rho: f64, w: usize, t: usize },
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::WordsSeen { .. } => "words_seen",
            ExperimentKind::SingleWord { .. } => "single_word",
            ExperimentKind::BlackStep { .. } => "black_step",
            ExperimentKind::BEvent { .. } => "b_event",
            ExperimentKind::BPropPair { .. } => "b_prop_pair",
            ExperimentKind::DEvent { .. } => "d_event",
            ExperimentKind::OrientedEvent { .. } => "oriented_event",
            ExperimentKind::MsCount { .. } => "ms_count",
            ExperimentKind::DominationWindow { .. } => "domination_window",
        }
    }

    fn is_oriented(&self) -> bool {
        matches!(
            self,
            ExperimentKind::OrientedEvent { .. }
                | ExperimentKind::MsCount { .. }
                | ExperimentKind::DominationWindow { .. }
        )
    }

    fn needs_coupling(&self) -> bool {
        matches!(
            self,
            ExperimentKind::BlackStep { .. }
                | ExperimentKind::BEvent { .. }
                | ExperimentKind::BPropPair { .. }
                | ExperimentKind::DEvent { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingParams>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub lattice_box: Option<LatticeBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quenched_bond_seed: Option<u64>,
    #[serde(default)]
    pub oriented: EventOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_oracle_bits: Option<u128>,
}

impl ExperimentSpec {
    /// A spec over the long-range model.
    pub fn model(kind: ExperimentKind, params: ModelParams<f64>, lattice_box: LatticeBox) -> Self {
        ExperimentSpec {
            kind,
            params: Some(params),
            coupling: None,
            lattice_box: Some(lattice_box),
            gamma: None,
            quenched_bond_seed: None,
            oriented: EventOptions::default(),
            max_oracle_bits: None,
        }
    }

    /// A spec over oriented site percolation.
    pub fn oriented(kind: ExperimentKind, gamma: f64) -> Self {
        ExperimentSpec {
            kind,
            params: None,
            coupling: None,
            lattice_box: None,
            gamma: Some(gamma),
            quenched_bond_seed: None,
            oriented: EventOptions::default(),
            max_oracle_bits: None,
        }
    }

    pub fn ms_count(gamma: f64, m: i64, sources: Option<Vec<Site>>) -> Self {
        Self::oriented(ExperimentKind::MsCount { m, sources }, gamma)
    }

    pub fn with_coupling(mut self, cp: CouplingParams) -> Self {
        self.coupling = Some(cp);
        self
    }

    pub fn with_quenched_bond_seed(mut self, seed: u64) -> Self {
        self.quenched_bond_seed = Some(seed);
        self
    }

    pub fn label(&self) -> &'static str {
        self.kind.name()
    }

    /// Checks that every input the kind needs is present and consistent.
    pub fn validate(&self) -> Result<(), McError> {
        let spec_err = |s: &str| Err(McError::Spec(s.to_string()));
        if self.kind.is_oriented() {
            let Some(g) = self.gamma else {
                return spec_err("oriented experiments need gamma");
            };
            if !(0.0..=1.0).contains(&g) {
                return Err(OrientedError::Gamma(g).into());
            }
        } else {
            let Some(params) = &self.params else {
                return spec_err("model experiments need params");
            };
            params.validate()?;
            let Some(bx) = &self.lattice_box else {
                return spec_err("model experiments need a box");
            };
            if bx.dim() != params.d {
                return Err(ModelError::Dimension {
                    got: bx.dim(),
                    dim: params.d,
                }
                .into());
            }
        }
        if self.kind.needs_coupling() {
            let Some(cp) = &self.coupling else {
                return spec_err("exploration experiments need coupling parameters");
            };
            cp.validate()?;
            if self.params.as_ref().map(|p| p.d) != Some(3) {
                return Err(ExplorationError::Dimension(self.params.as_ref().map_or(0, |p| p.d)).into());
            }
        }
        match &self.kind {
            ExperimentKind::WordsSeen { len } => {
                if *len > OracleLimits::default().max_len {
                    return Err(OracleError::WordTooLong {
                        len: *len,
                        max: OracleLimits::default().max_len,
                    }
                    .into());
                }
            }
            ExperimentKind::SingleWord { .. } => {}
            ExperimentKind::BlackStep { letters, .. } => {
                if letters.iter().any(|b| *b > 1) {
                    return spec_err("letters must be 0 or 1");
                }
                self.check_box_covers(2)?;
            }
            ExperimentKind::BEvent { m, .. } | ExperimentKind::BPropPair { m, .. } => {
                if *m == 0 {
                    return spec_err("m must be positive");
                }
                let top = if matches!(self.kind, ExperimentKind::BPropPair { .. }) { 16 } else { 4 };
                self.check_box_covers(top * m)?;
            }
            ExperimentKind::DEvent { m } => {
                if *m == 0 || *m > crate::exploration::MAX_D_EVENT_M {
                    return Err(ExplorationError::EnumerationGuard {
                        m: *m,
                        max: crate::exploration::MAX_D_EVENT_M,
                    }
                    .into());
                }
                self.check_box_covers(4 * *m as u64)?;
            }
            ExperimentKind::OrientedEvent { m, .. } => {
                if *m < 1 {
                    return spec_err("m must be positive");
                }
            }
            ExperimentKind::MsCount { m, sources } => {
                if *m < 1 {
                    return spec_err("m must be positive");
                }
                if let Some(s) = sources {
                    if let Some(bad) = s.iter().find(|v| v.0 < 0 || v.1 < 0 || v.0 + v.1 != 4 * m - 1) {
                        return Err(OrientedError::OffDiagonal(*bad, 4 * m - 1).into());
                    }
                }
            }
            ExperimentKind::DominationWindow { rho, w, .. } => {
                if !(0.0..=1.0).contains(rho) {
                    return spec_err("rho must be a probability");
                }
                if *w == 0 {
                    return spec_err("w must be positive");
                }
            }
        }
        Ok(())
    }

    fn check_box_covers(&self, max_diag: u64) -> Result<(), McError> {
        let bx = self.lattice_box.as_ref().expect("validated");
        if bx.widths.iter().any(|w| w + 1 < max_diag) {
            return Err(ExplorationError::BoxTooSmall {
                widths: bx.widths.clone(),
                max_diag,
            }
            .into());
        }
        Ok(())
    }

    /// Stable 64-bit digest of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        let mut sponge = Sponge::new(0xD1_6E57);
        for chunk in json.as_bytes().chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            sponge.absorb(u64::from_le_bytes(buf));
        }
        sponge.absorb(json.len() as u64);
        format!("{:016x}", sponge.finish())
    }

    fn env_and_sites(&self, seeds: &TrialSeeds) -> Result<(Environment<f64>, SiteField<f64>), McError> {
        let params = self.params.clone().expect("validated");
        let bx = self.lattice_box.clone().expect("validated");
        let p = params.p;
        let env = Environment::new(params, seeds.bond, bx.clone())?;
        let sites = SiteField::new(p, seeds.site, bx)?;
        Ok((env, sites))
    }

    fn oracle_limits(&self) -> OracleLimits {
        let mut limits = OracleLimits::default();
        if let Some(b) = self.max_oracle_bits {
            limits.max_bits = b;
        }
        limits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Success,
    Failure,
    /// A resource guard stopped the trial.
    Refused,
}

impl From<bool> for TrialOutcome {
    fn from(b: bool) -> Self {
        if b {
            TrialOutcome::Success
        } else {
            TrialOutcome::Failure
        }
    }
}

fn refusal(e: &McError) -> bool {
    matches!(
        e,
        McError::Oracle(OracleError::Budget { .. } | OracleError::PathGuard { .. })
            | McError::Exploration(ExplorationError::Oracle(
                OracleError::Budget { .. } | OracleError::PathGuard { .. }
            ))
    )
}

fn explored(spec: &ExperimentSpec, seeds: &TrialSeeds, word: &Word, max_diag: u64) -> Result<Option<crate::exploration::ExplorationResult>, McError> {
    let (env, sites) = spec.env_and_sites(seeds)?;
    let cp = spec.coupling.expect("validated").with_max_diag(max_diag);
    let word = word.zero_padded(cp.letters_needed());
    let res = explore(&env, &sites, &word, &cp)?;
    Ok(if res.height_truncated() > 0 { None } else { Some(res) })
}

/// Runs trial `trial` of `spec` under `master`.
pub fn run_trial(spec: &ExperimentSpec, master: u64, trial: u64) -> Result<TrialOutcome, McError> {
    let seeds = TrialSeeds::for_trial(master, trial, spec.quenched_bond_seed);
    let outcome = run_seeded(spec, &seeds);
    match outcome {
        Err(e) if refusal(&e) => Ok(TrialOutcome::Refused),
        other => other,
    }
}

fn run_seeded(spec: &ExperimentSpec, seeds: &TrialSeeds) -> Result<TrialOutcome, McError> {
    use ExperimentKind as K;
    Ok(match &spec.kind {
        K::WordsSeen { len } => {
            let (env, sites) = spec.env_and_sites(seeds)?;
            let q = SeenQuery::from_origin(&env, &sites, *len)?;
            seen_words(&q, &spec.oracle_limits())?.is_full().into()
        }
        K::SingleWord { word } => {
            let (env, sites) = spec.env_and_sites(seeds)?;
            let q = SeenQuery::from_origin(&env, &sites, word.len())?;
            sees_word(&q, word)?.into()
        }
        K::BlackStep { direction, letters } => {
            let word = Word::new(letters.to_vec())?;
            let target: PlaneVertex = match direction {
                StepDirection::East => (1, 0),
                StepDirection::North => (0, 1),
            };
            match explored(spec, seeds, &word, 2)? {
                Some(res) => res.is_black(target).into(),
                None => TrialOutcome::Refused,
            }
        }
        K::BEvent { m, eta } => match explored(spec, seeds, eta, 4 * m)? {
            Some(res) => b_event(&res, *m)?.into(),
            None => TrialOutcome::Refused,
        },
        K::BPropPair { m, eta } => match explored(spec, seeds, eta, 16 * m)? {
            Some(res) => (b_event(&res, *m)? && !b_event(&res, 4 * m)?).into(),
            None => TrialOutcome::Refused,
        },
        K::DEvent { m } => {
            let (env, sites) = spec.env_and_sites(seeds)?;
            d_event(&env, &sites, *m, &spec.coupling.expect("validated"))?.into()
        }
        K::OrientedEvent { m, which } => {
            let gamma = spec.gamma.expect("validated");
            let boxes = ProofBoxes { m: *m };
            let region = match which {
                Event::E4 => boxes.full_region(spec.oriented.w_left_for(*m)),
                _ => boxes.quadrant_region(),
            };
            let config = sample_region(gamma, region, seeds.oriented)?;
            event_indicator(&config, *m, &l_part(4 * m, 2), *which, &spec.oriented)?.into()
        }
        K::MsCount { m, sources } => {
            let gamma = spec.gamma.expect("validated");
            let config = sample_region(gamma, ProofBoxes { m: *m }.quadrant_region(), seeds.oriented)?;
            let s = sources.clone().unwrap_or_else(|| l_part(4 * m, 2));
            ((m_s(&config, *m, &s, spec.oriented.source_rule)? as i64) < 4 * m).into()
        }
        K::DominationWindow { w, t, .. } => {
            window_all_active(spec.gamma.expect("validated"), *w, *t, seeds.oriented).into()
        }
    })
}

/// Aggregated counts of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub trials: u64,
    pub successes: u64,
    pub refused: u64,
}

impl Counts {
    fn of(o: TrialOutcome) -> Self {
        Counts {
            trials: 1,
            successes: (o == TrialOutcome::Success) as u64,
            refused: (o == TrialOutcome::Refused) as u64,
        }
    }

    fn merge(self, o: Counts) -> Counts {
        Counts {
            trials: self.trials + o.trials,
            successes: self.successes + o.successes,
            refused: self.refused + o.refused,
        }
    }

    /// Trials that produced a verdict.
    pub fn decided(&self) -> u64 {
        self.trials - self.refused
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub experiment: String,
    pub spec: ExperimentSpec,
    pub spec_digest: String,
    pub trials: u64,
    pub successes: u64,
    pub refused: u64,
    /// Success fraction among decided trials.
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub interval: String,
    pub master_seed: u64,
    pub workers: usize,
    pub wall_time_ms: u64,
}

impl EstimateRecord {
    /// Equality of everything except timing and worker count.
    pub fn same_counts(&self, other: &EstimateRecord) -> bool {
        self.spec_digest == other.spec_digest
            && self.trials == other.trials
            && self.successes == other.successes
            && self.refused == other.refused
            && self.master_seed == other.master_seed
    }

    pub fn refused_fraction(&self) -> f64 {
        self.refused as f64 / self.trials as f64
    }

    pub fn sigma(&self) -> f64 {
        let n = (self.trials - self.refused).max(1) as f64;
        (self.p_hat * (1.0 - self.p_hat) / n).sqrt()
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, McError> {
    if workers == 0 {
        return Err(McError::NoWorkers);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| McError::Pool(e.to_string()))
}

/// Per-trial outcomes in trial order.
pub fn outcomes(spec: &ExperimentSpec, trials: u64, master: u64, workers: usize) -> Result<Vec<TrialOutcome>, McError> {
    spec.validate()?;
    if trials == 0 {
        return Err(McError::NoTrials);
    }
    pool(workers)?.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|k| run_trial(spec, master, k))
            .collect()
    })
}

pub fn run(spec: &ExperimentSpec, trials: u64, master: u64, workers: usize) -> Result<EstimateRecord, McError> {
    spec.validate()?;
    if trials == 0 {
        return Err(McError::NoTrials);
    }
    let start = Instant::now();
    let counts = pool(workers)?.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|k| run_trial(spec, master, k).map(Counts::of))
            .try_reduce(Counts::default, |a, b| Ok(a.merge(b)))
    })?;
    let decided = counts.decided();
    let (p_hat, (ci_lo, ci_hi)) = if decided == 0 {
        (0.0, (0.0, 1.0))
    } else {
        (
            counts.successes as f64 / decided as f64,
            wilson_ci(counts.successes, decided, 0.95),
        )
    };
    Ok(EstimateRecord {
        experiment: spec.label().to_string(),
        spec: spec.clone(),
        spec_digest: spec.digest(),
        trials,
        successes: counts.successes,
        refused: counts.refused,
        p_hat,
        ci_lo,
        ci_hi,
        interval: INTERVAL_NAME.to_string(),
        master_seed: master,
        workers,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}

/// Wilson score interval at confidence `level`.
pub fn wilson_ci<T: Scalar>(successes: u64, trials: u64, level: T) -> (T, T) {
    assert!(trials >= 1 && successes <= trials, "need 0 <= successes <= trials, trials >= 1");
    let z = Normal::standard().inverse_cdf(0.5 + level.as_f64() / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (T::of(lo), T::of(hi))
}

/// Empirical correlation of the black indicators of two plane vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatusCorrelation {
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
    /// Pearson correlation; `None` when either indicator is constant.
    pub correlation: Option<f64>,
    pub trials: u64,
}

/// Measures how far black determinations at two vertices are from
/// independent, over trials seeded like [`run`].
pub fn status_correlation(
    params: &ModelParams<f64>,
    bx: &LatticeBox,
    cp: &CouplingParams,
    word: &Word,
    a: PlaneVertex,
    b: PlaneVertex,
    trials: u64,
    master: u64,
    workers: usize,
) -> Result<StatusCorrelation, McError> {
    if trials == 0 {
        return Err(McError::NoTrials);
    }
    let max_diag = a.0.max(b.0) + a.1.max(b.1) + 1;
    let cp = cp.with_max_diag(cp.max_diag.max(max_diag));
    let word = word.zero_padded(cp.letters_needed());
    let spec = ExperimentSpec::model(ExperimentKind::SingleWord { word: word.clone() }, params.clone(), bx.clone());
    let pairs: Vec<(bool, bool)> = pool(workers)?.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|k| {
                let seeds = TrialSeeds::for_trial(master, k, None);
                let (env, sites) = spec.env_and_sites(&seeds)?;
                let res = explore(&env, &sites, &word, &cp)?;
                Ok((res.is_black(a), res.is_black(b)))
            })
            .collect::<Result<_, McError>>()
    })?;
    let n = trials as f64;
    let p_a = pairs.iter().filter(|p| p.0).count() as f64 / n;
    let p_b = pairs.iter().filter(|p| p.1).count() as f64 / n;
    let p_ab = pairs.iter().filter(|p| p.0 && p.1).count() as f64 / n;
    let var = p_a * (1.0 - p_a) * p_b * (1.0 - p_b);
    Ok(StatusCorrelation {
        p_a,
        p_b,
        p_ab,
        correlation: (var > 0.0).then(|| (p_ab - p_a * p_b) / var.sqrt()),
        trials,
    })
}

/// Per-configuration check of the proof's geometric implication: returns the
/// number of configurations where E1-E4 all hold yet `M_S < 4m`.
pub fn geometry_counterexamples(
    gamma: f64,
    m: i64,
    trials: u64,
    master: u64,
    workers: usize,
    opts: &EventOptions,
) -> Result<GeometryTally, McError> {
    if trials == 0 {
        return Err(McError::NoTrials);
    }
    let boxes = ProofBoxes { m };
    let region = boxes.full_region(opts.w_left_for(m));
    let sources = l_part(4 * m, 2);
    pool(workers)?.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|k| {
                let config = sample_region(gamma, region, derive_seed(master, k, Stream::Oriented))?;
                let rep = evaluate_events(&config, m, &sources, opts)?;
                let all = rep.all();
                let first_three = rep.events[..3].iter().all(|b| *b);
                Ok(GeometryTally {
                    trials: 1,
                    all_events: all as u64,
                    counterexamples: (all && (rep.m_s as i64) < 4 * m) as u64,
                    q_middle_below: (all && (rep.q_middle as i64) < 4 * m) as u64,
                    first_three: first_three as u64,
                    identity_violations: (first_three && rep.m_s != rep.q_middle) as u64,
                })
            })
            .try_reduce(GeometryTally::default, |a, b| Ok(a.merge(b)))
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GeometryTally {
    pub trials: u64,
    pub all_events: u64,
    /// Configurations with E1-E4 and `M_S < 4m`.
    pub counterexamples: u64,
    /// Configurations with E1-E4 whose line count restricted to the middle
    /// half is below `4m`.
    pub q_middle_below: u64,
    /// Configurations with E1-E3.
    pub first_three: u64,
    /// Configurations with E1-E3 where `M_S` differs from the line count
    /// restricted to the middle half.
    pub identity_violations: u64,
}

impl GeometryTally {
    fn merge(self, o: GeometryTally) -> GeometryTally {
        GeometryTally {
            trials: self.trials + o.trials,
            all_events: self.all_events + o.all_events,
            counterexamples: self.counterexamples + o.counterexamples,
            q_middle_below: self.q_middle_below + o.q_middle_below,
            first_three: self.first_three + o.first_three,
            identity_violations: self.identity_violations + o.identity_violations,
        }
    }
}
