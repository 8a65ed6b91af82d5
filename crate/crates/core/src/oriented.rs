//! Nearest-neighbour oriented site percolation on finite rectangles of `Z^2`.
//!
//! Site `(x, y)` is occupied when `uniform(seed, [0, x, y]) < gamma`, with
//! coordinates cast to `u64` in two's complement; configurations sampled
//! from the same seed are therefore nested in `gamma`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mc::{derive_seed, Stream};
use crate::rng::{uniform_words, TAG_SITE};
use crate::scalar::{is_probability, Scalar};

pub type Site = (i64, i64);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrientedError {
    #[error("gamma = {0} is not a probability")]
    Gamma(f64),
    #[error("empty region")]
    EmptyRegion,
    #[error("region {have:?} too small: need x and y in [{lo}, {hi}]")]
    RegionTooSmall { have: Region, lo: i64, hi: i64 },
    #[error("source {0:?} is not on the diagonal v1 + v2 = {1}")]
    OffDiagonal(Site, i64),
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Inclusive rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: i64,
    pub x_max: i64,
    pub y_min: i64,
    pub y_max: i64,
}

impl Region {
    pub fn square(lo: i64, hi: i64) -> Self {
        Region {
            x_min: lo,
            x_max: hi,
            y_min: lo,
            y_max: hi,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.x_min > self.x_max || self.y_min > self.y_max
    }

    pub fn width(&self) -> usize {
        (self.x_max - self.x_min + 1).max(0) as usize
    }

    pub fn height(&self) -> usize {
        (self.y_max - self.y_min + 1).max(0) as usize
    }

    pub fn contains(&self, s: Site) -> bool {
        s.0 >= self.x_min && s.0 <= self.x_max && s.1 >= self.y_min && s.1 <= self.y_max
    }

    pub fn covers(&self, other: &Region) -> bool {
        self.x_min <= other.x_min
            && self.x_max >= other.x_max
            && self.y_min <= other.y_min
            && self.y_max >= other.y_max
    }

    #[inline]
    fn offset(&self, s: Site) -> usize {
        (s.1 - self.y_min) as usize * self.width() + (s.0 - self.x_min) as usize
    }
}

#[inline]
pub fn site_occupied(seed: u64, gamma: f64, s: Site) -> bool {
    uniform_words(seed, &[TAG_SITE, s.0 as u64, s.1 as u64]) < gamma
}

/// Occupancy bitmap over a region.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedConfig {
    region: Region,
    gamma: f64,
    seed: u64,
    occupied: Vec<bool>,
}

impl OrientedConfig {
    pub fn region(&self) -> Region {
        self.region
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sites outside the region count as vacant.
    pub fn is_occupied(&self, s: Site) -> bool {
        self.region.contains(s) && self.occupied[self.region.offset(s)]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|b| **b).count()
    }
}

/// I.i.d. Bernoulli(`gamma`) occupancy on `region`.
pub fn sample_region<T: Scalar>(gamma: T, region: Region, seed: u64) -> Result<OrientedConfig, OrientedError> {
    if !is_probability(gamma) {
        return Err(OrientedError::Gamma(gamma.as_f64()));
    }
    if region.is_empty() {
        return Err(OrientedError::EmptyRegion);
    }
    let g = gamma.as_f64();
    let mut occupied = Vec::with_capacity(region.width() * region.height());
    for y in region.y_min..=region.y_max {
        for x in region.x_min..=region.x_max {
            occupied.push(site_occupied(seed, g, (x, y)));
        }
    }
    Ok(OrientedConfig {
        region,
        gamma: g,
        seed,
        occupied,
    })
}

/// Whether sources must themselves be occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceRule {
    /// Sources are starting points; occupancy is required from the first step on.
    #[default]
    Given,
    RequireOccupied,
}

/// Dense set of sites reachable inside a region.
#[derive(Debug, Clone, PartialEq)]
pub struct Reach {
    region: Region,
    hit: Vec<bool>,
}

impl Reach {
    pub fn contains(&self, s: Site) -> bool {
        self.region.contains(s) && self.hit[self.region.offset(s)]
    }

    pub fn len(&self) -> usize {
        self.hit.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.hit.iter().any(|b| *b)
    }

    pub fn sites(&self) -> Vec<Site> {
        let mut out = Vec::new();
        for y in self.region.y_min..=self.region.y_max {
            for x in self.region.x_min..=self.region.x_max {
                if self.hit[self.region.offset((x, y))] {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn count_in<'a>(&self, sites: impl IntoIterator<Item = &'a Site>) -> usize {
        sites.into_iter().filter(|s| self.contains(**s)).count()
    }
}

/// Sites reachable from `sources` by `+e_1`/`+e_2` steps through occupied
/// sites of the region that satisfy `constraint` (sources themselves are
/// exempt from the constraint).
pub fn reachable(
    config: &OrientedConfig,
    sources: &[Site],
    constraint: Option<&dyn Fn(Site) -> bool>,
    rule: SourceRule,
) -> Reach {
    let region = config.region;
    let mut hit = vec![false; region.width() * region.height()];
    let source_set: HashSet<Site> = sources
        .iter()
        .copied()
        .filter(|s| region.contains(*s))
        .collect();
    if source_set.is_empty() {
        return Reach { region, hit };
    }
    let y_start = source_set.iter().map(|s| s.1).min().expect("nonempty");
    let x_start = source_set.iter().map(|s| s.0).min().expect("nonempty");
    let w = region.width();
    for y in y_start..=region.y_max {
        for x in x_start..=region.x_max {
            let s = (x, y);
            let i = region.offset(s);
            let occupied = config.occupied[i];
            let is_source = source_set.contains(&s)
                && (rule == SourceRule::Given || occupied);
            let from_pred = occupied
                && ((x > region.x_min && hit[i - 1]) || (y > region.y_min && hit[i - w]))
                && constraint.is_none_or(|c| c(s));
            hit[i] = is_source || from_pred;
        }
    }
    Reach { region, hit }
}

/// Sites of `L_{m}` (coordinate sum `m-1`, nonnegative) with `lo*m <= 4 v1 < hi*m`.
fn diagonal_part(m: i64, lo: i64, hi: i64) -> Vec<Site> {
    (0..m)
        .filter(|v1| 4 * v1 >= lo * m && 4 * v1 < hi * m)
        .map(|v1| (v1, m - 1 - v1))
        .collect()
}

/// Convenience views of the diagonals used by the lemma.
pub fn l_part(m: i64, part: usize) -> Vec<Site> {
    match part {
        0 => diagonal_part(m, 0, 4),
        1 => diagonal_part(m, 0, 1),
        2 => diagonal_part(m, 1, 3),
        3 => diagonal_part(m, 3, 4),
        _ => panic!("diagonal part {part} out of range"),
    }
}

/// The boxes of the proof for scale `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProofBoxes {
    pub m: i64,
}

impl ProofBoxes {
    /// `3m <= v < 4m`, `4m <= u+v < 16m`.
    pub fn in_t1(&self, s: Site) -> bool {
        let m = self.m;
        s.0 >= 0 && s.1 >= 3 * m && s.1 < 4 * m && s.0 + s.1 >= 4 * m && s.0 + s.1 < 16 * m
    }

    /// `3m <= u < 4m`, `4m <= u+v < 16m`.
    pub fn in_t2(&self, s: Site) -> bool {
        let m = self.m;
        s.1 >= 0 && s.0 >= 3 * m && s.0 < 4 * m && s.0 + s.1 >= 4 * m && s.0 + s.1 < 16 * m
    }

    /// The line `v_2 = -v_1 + 4m - 1` for `v_1 in [-w_left, 4m - 1 + w_left]`.
    pub fn script_line(&self, w_left: i64) -> Vec<Site> {
        let c = 4 * self.m - 1;
        (-w_left..=c + w_left).map(|v1| (v1, c - v1)).collect()
    }

    /// Region needed for `M_S` and the events E1-E3.
    pub fn quadrant_region(&self) -> Region {
        Region::square(0, 16 * self.m - 1)
    }

    /// Region needed for E4 with the given clipping width.
    pub fn full_region(&self, w_left: i64) -> Region {
        Region::square(-w_left, 16 * self.m - 1 + w_left)
    }
}

fn require_region(config: &OrientedConfig, need: Region) -> Result<(), OrientedError> {
    if config.region.covers(&need) {
        Ok(())
    } else {
        Err(OrientedError::RegionTooSmall {
            have: config.region,
            lo: need.x_min,
            hi: need.x_max,
        })
    }
}

fn check_sources(m: i64, sources: &[Site]) -> Result<(), OrientedError> {
    for s in sources {
        if s.0 < 0 || s.1 < 0 || s.0 + s.1 != 4 * m - 1 {
            return Err(OrientedError::OffDiagonal(*s, 4 * m - 1));
        }
    }
    Ok(())
}

/// `M_S = |{x in L_{16m,2} : S -> x}|`.
pub fn m_s(config: &OrientedConfig, m: i64, sources: &[Site], rule: SourceRule) -> Result<usize, OrientedError> {
    if m < 1 {
        return Err(OrientedError::Argument("m must be positive".into()));
    }
    check_sources(m, sources)?;
    require_region(config, ProofBoxes { m }.quadrant_region())?;
    let reach = reachable(config, sources, None, rule);
    Ok(reach.count_in(&l_part(16 * m, 2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    E1,
    E2,
    E3,
    E4,
}

impl Event {
    pub const ALL: [Event; 4] = [Event::E1, Event::E2, Event::E3, Event::E4];

    pub fn name(&self) -> &'static str {
        match self {
            Event::E1 => "E1",
            Event::E2 => "E2",
            Event::E3 => "E3",
            Event::E4 => "E4",
        }
    }
}

impl std::str::FromStr for Event {
    type Err = OrientedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "E1" => Ok(Event::E1),
            "E2" => Ok(Event::E2),
            "E3" => Ok(Event::E3),
            "E4" => Ok(Event::E4),
            _ => Err(OrientedError::Argument(format!("unknown event {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventOptions {
    /// Clipping width of the infinite line in E4 (default `8m` when `None`).
    pub w_left: Option<i64>,
    pub source_rule: SourceRule,
}

impl Default for EventOptions {
    fn default() -> Self {
        EventOptions {
            w_left: None,
            source_rule: SourceRule::Given,
        }
    }
}

impl EventOptions {
    pub fn w_left_for(&self, m: i64) -> i64 {
        self.w_left.unwrap_or(8 * m)
    }
}

/// All quantities of the proof on one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EventReport {
    pub events: [bool; 4],
    pub m_s: usize,
    /// Sites of `L_{16m}` reached from the clipped line.
    pub q_total: usize,
    /// The same count restricted to `L_{16m,2}`.
    pub q_middle: usize,
    pub w_left: i64,
}

impl EventReport {
    pub fn holds(&self, e: Event) -> bool {
        self.events[e as usize]
    }

    pub fn all(&self) -> bool {
        self.events.iter().all(|b| *b)
    }
}

fn event_e1(config: &OrientedConfig, boxes: ProofBoxes, rule: SourceRule, target: &[Site]) -> bool {
    let t1 = |s: Site| boxes.in_t1(s);
    let reach = reachable(config, &l_part(4 * boxes.m, 1), Some(&t1), rule);
    reach.count_in(target) > 0
}

fn event_e3(config: &OrientedConfig, boxes: ProofBoxes, rule: SourceRule, target: &[Site]) -> bool {
    let t2 = |s: Site| boxes.in_t2(s);
    let reach = reachable(config, &l_part(4 * boxes.m, 3), Some(&t2), rule);
    reach.count_in(target) > 0
}

/// Evaluates E1-E4, `M_S` and both line counts.
pub fn evaluate_events(
    config: &OrientedConfig,
    m: i64,
    sources: &[Site],
    opts: &EventOptions,
) -> Result<EventReport, OrientedError> {
    if m < 1 {
        return Err(OrientedError::Argument("m must be positive".into()));
    }
    check_sources(m, sources)?;
    let boxes = ProofBoxes { m };
    let w_left = opts.w_left_for(m);
    require_region(config, boxes.full_region(w_left))?;
    let rule = opts.source_rule;
    let target = l_part(16 * m, 0);
    let middle = l_part(16 * m, 2);

    let from_s = reachable(config, sources, None, rule);
    let m_s = from_s.count_in(&middle);
    let e2 = from_s.count_in(&target) > 0;
    let e1 = event_e1(config, boxes, rule, &target);
    let e3 = event_e3(config, boxes, rule, &target);
    let from_line = reachable(config, &boxes.script_line(w_left), None, rule);
    let q_total = from_line.count_in(&target);
    let q_middle = from_line.count_in(&middle);
    Ok(EventReport {
        events: [e1, e2, e3, q_total as i64 >= 4 * m],
        m_s,
        q_total,
        q_middle,
        w_left,
    })
}

/// Indicator of a single event.
pub fn event_indicator(
    config: &OrientedConfig,
    m: i64,
    sources: &[Site],
    which: Event,
    opts: &EventOptions,
) -> Result<bool, OrientedError> {
    if m < 1 {
        return Err(OrientedError::Argument("m must be positive".into()));
    }
    check_sources(m, sources)?;
    let boxes = ProofBoxes { m };
    let rule = opts.source_rule;
    let target = l_part(16 * m, 0);
    match which {
        Event::E1 | Event::E2 | Event::E3 => {
            require_region(config, boxes.quadrant_region())?;
            Ok(match which {
                Event::E1 => event_e1(config, boxes, rule, &target),
                Event::E2 => reachable(config, sources, None, rule).count_in(&target) > 0,
                _ => event_e3(config, boxes, rule, &target),
            })
        }
        Event::E4 => {
            let w_left = opts.w_left_for(m);
            require_region(config, boxes.full_region(w_left))?;
            let reach = reachable(config, &boxes.script_line(w_left), None, rule);
            Ok(reach.count_in(&target) as i64 >= 4 * m)
        }
    }
}

/// Active first coordinates on the diagonal `x + y = t`, restricted to the
/// window `[lo, lo + active.len())`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    pub t: i64,
    pub lo: i64,
    pub active: Vec<bool>,
}

impl ChainState {
    pub fn full(lo: i64, width: usize, t: i64) -> Self {
        ChainState {
            t,
            lo,
            active: vec![true; width],
        }
    }

    pub fn empty(lo: i64, width: usize, t: i64) -> Self {
        ChainState {
            t,
            lo,
            active: vec![false; width],
        }
    }

    pub fn is_active(&self, x: i64) -> bool {
        x >= self.lo
            && ((x - self.lo) as usize) < self.active.len()
            && self.active[(x - self.lo) as usize]
    }

    pub fn count(&self) -> usize {
        self.active.iter().filter(|b| **b).count()
    }
}

/// One step of the diagonal chain: `x` is active at `t+1` iff `(x, t+1-x)` is
/// occupied and `x` or `x-1` was active at `t`. Outside the window is vacant.
pub fn chain_step<T: Scalar>(state: &ChainState, gamma: T, seed: u64) -> ChainState {
    let g = gamma.as_f64();
    let t = state.t + 1;
    let active = (0..state.active.len())
        .map(|k| {
            let x = state.lo + k as i64;
            (state.active[k] || (k > 0 && state.active[k - 1])) && site_occupied(seed, g, (x, t - x))
        })
        .collect();
    ChainState {
        t,
        lo: state.lo,
        active,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominationCheck {
    pub estimate: f64,
    pub sigma: f64,
    /// `rho^w`
    pub target: f64,
    pub passes: bool,
    pub trials: u64,
}

/// Estimates `P(sites 0..w all active at t_burn)` for the chain started from a
/// fully active window and compares it with `rho^w` (a necessary condition
/// for domination of the product measure of density `rho`).
pub fn domination_window_check<T: Scalar>(
    gamma: T,
    rho: T,
    w: usize,
    t_burn: usize,
    trials: u64,
    seed: u64,
) -> Result<DominationCheck, OrientedError> {
    if !is_probability(gamma) {
        return Err(OrientedError::Gamma(gamma.as_f64()));
    }
    if !is_probability(rho) {
        return Err(OrientedError::Argument(format!("rho = {rho} is not a probability")));
    }
    if w == 0 || trials == 0 {
        return Err(OrientedError::Argument("w and trials must be positive".into()));
    }
    let hits = (0..trials)
        .filter(|k| window_all_active(gamma, w, t_burn, derive_seed(seed, *k, Stream::Oriented)))
        .count() as u64;
    let estimate = hits as f64 / trials as f64;
    let sigma = (estimate * (1.0 - estimate) / trials as f64).sqrt();
    let target = rho.as_f64().powi(w as i32);
    Ok(DominationCheck {
        estimate,
        sigma,
        target,
        passes: estimate >= target - 3.0 * sigma,
        trials,
    })
}

/// One trial of the window check. The window `[-t_burn, w)` contains the
/// backward light cone of the targets, so boundary effects never reach them.
pub fn window_all_active<T: Scalar>(gamma: T, w: usize, t_burn: usize, seed: u64) -> bool {
    let lo = -(t_burn as i64);
    let mut state = ChainState::full(lo, t_burn + w, 0);
    for _ in 0..t_burn {
        state = chain_step(&state, gamma, seed);
    }
    (0..w as i64).all(|x| state.is_active(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayPoint {
    pub m: i64,
    pub estimate: f64,
    pub ci: (f64, f64),
    pub successes: u64,
    pub trials: u64,
}

/// Monte Carlo estimates of `P(M_S < 4m)` with `S = L_{4m,2}`.
pub fn decay_experiment(
    gamma: f64,
    m_list: &[i64],
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<DecayPoint>, crate::mc::McError> {
    m_list
        .iter()
        .map(|&m| {
            let spec = crate::mc::ExperimentSpec::ms_count(gamma, m, None);
            let rec = crate::mc::run(&spec, trials, seed, workers)?;
            Ok(DecayPoint {
                m,
                estimate: rec.p_hat,
                ci: (rec.ci_lo, rec.ci_hi),
                successes: rec.successes,
                trials: rec.trials,
            })
        })
        .collect()
}
