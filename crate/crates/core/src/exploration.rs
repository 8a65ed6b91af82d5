//! Black-point exploration on the plane `Z^2_+`, embedded in the 3-d
//! long-range lattice with heights `psi`.
//!
//! The exploration visits plane vertices in increasing coordinate sum
//! (ties by increasing first coordinate). A vertex `x` is a candidate once
//! one of its oriented parents `y = x - (1,0)` or `y = x - (0,1)` is black.
//! With `s = y_1 + y_2`, the vertex is black when, for some `i` of the trial
//! range, the vertical edge `(y, psi(y)) -> (y, psi(y)+i)` and the
//! horizontal edge `(y, psi(y)+i) -> (x, psi(y)+i)` are open and the two
//! sites carry letters `xi_{2s+1}` and `xi_{2s+2}`. East children use
//! `i in 1..=N`, north children `i in N+1..=N+M`; the smallest successful
//! `i` fixes `psi(x)`.

use std::collections::{BTreeSet, HashMap};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Environment, ModelError, ModelParams, SiteField};
use crate::oracle::{sees_word, OracleError, SeenQuery};
use crate::scalar::Scalar;
use crate::words::{enumerate_xi, Word, WordError};

pub type PlaneVertex = (u64, u64);
pub type SpaceVertex = [u64; 3];

/// Largest `m` for which [`d_event`] enumerates `Xi_{4m}`.
pub const MAX_D_EVENT_M: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExplorationError {
    #[error("the coupling runs in dimension 3, environment has dimension {0}")]
    Dimension(usize),
    #[error("word of length {len} too short: exploring to diagonal {max_diag} needs {needed} letters")]
    WordTooShort {
        len: usize,
        max_diag: u64,
        needed: usize,
    },
    #[error("box widths {widths:?} do not cover diagonals below {max_diag}")]
    BoxTooSmall { widths: Vec<u64>, max_diag: u64 },
    #[error("exploration reached diagonal {explored} but diagonal {needed} is required")]
    NotExplored { explored: u64, needed: u64 },
    #[error("vertex {0:?} is not black")]
    NotBlack(PlaneVertex),
    #[error("invalid coupling parameters: {0}")]
    Params(String),
    #[error("D_m enumeration refused for m = {m} (limit {max})")]
    EnumerationGuard { m: usize, max: usize },
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ParentPreference {
    /// Prefer `y = x - (1,0)` when both parents are black.
    #[default]
    East,
    North,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingParams {
    /// `N`: east children try heights `1..=N`.
    pub east_trials: u64,
    /// `M`: north children try heights `N+1..=N+M`.
    pub north_trials: u64,
    /// Vertices with coordinate sum below this are determined.
    pub max_diag: u64,
    #[serde(default)]
    pub parent_preference: ParentPreference,
}

impl CouplingParams {
    pub fn new(east_trials: u64, north_trials: u64, max_diag: u64) -> Result<Self, ExplorationError> {
        let cp = CouplingParams {
            east_trials,
            north_trials,
            max_diag,
            parent_preference: ParentPreference::East,
        };
        cp.validate()?;
        Ok(cp)
    }

    pub fn validate(&self) -> Result<(), ExplorationError> {
        if self.east_trials == 0 || self.north_trials == 0 {
            return Err(ExplorationError::Params("N and M must be positive".into()));
        }
        if self.max_diag == 0 {
            return Err(ExplorationError::Params("max_diag must be positive".into()));
        }
        Ok(())
    }

    pub fn with_max_diag(self, max_diag: u64) -> Self {
        CouplingParams { max_diag, ..self }
    }

    pub fn range(&self, direction: StepDirection) -> RangeInclusive<u64> {
        match direction {
            StepDirection::East => 1..=self.east_trials,
            StepDirection::North => self.east_trials + 1..=self.east_trials + self.north_trials,
        }
    }

    /// Letters an exploration up to `max_diag` reads.
    pub fn letters_needed(&self) -> usize {
        2 * (self.max_diag as usize).saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepDirection {
    /// `x = y + (1,0)`
    East,
    /// `x = y + (0,1)`
    North,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Black,
    White,
    Undetermined,
}

/// One determination of the exploration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub n: u64,
    pub x: PlaneVertex,
    pub y: PlaneVertex,
    pub direction: StepDirection,
    /// Successful height offset, or `None` on failure.
    pub i: Option<u64>,
    pub psi: Option<u64>,
    /// Trials skipped because the height left the box.
    pub height_truncated: u64,
}

#[derive(Serialize)]
struct StepRecord<'a> {
    n: u64,
    x: PlaneVertex,
    y: PlaneVertex,
    direction: StepDirection,
    i_or_fail: serde_json::Value,
    psi: Option<u64>,
    #[serde(skip_serializing_if = "is_zero")]
    height_truncated: &'a u64,
}

fn is_zero(x: &&u64) -> bool {
    **x == 0
}

/// Settings recorded with every exploration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExplorationMeta {
    pub east_range: (u64, u64),
    pub north_range: (u64, u64),
    pub parent_preference: ParentPreference,
    pub psi_rule: &'static str,
}

#[derive(Debug, Clone)]
pub struct ExplorationResult {
    status: HashMap<PlaneVertex, Status>,
    psi: HashMap<PlaneVertex, u64>,
    parent: HashMap<PlaneVertex, PlaneVertex>,
    steps: Vec<Step>,
    max_diag: u64,
    height_truncated: u64,
    meta: ExplorationMeta,
}

impl ExplorationResult {
    pub fn status(&self, v: PlaneVertex) -> Status {
        self.status.get(&v).copied().unwrap_or(Status::Undetermined)
    }

    pub fn is_black(&self, v: PlaneVertex) -> bool {
        self.status(v) == Status::Black
    }

    pub fn psi(&self, v: PlaneVertex) -> Option<u64> {
        self.psi.get(&v).copied()
    }

    pub fn parent(&self, v: PlaneVertex) -> Option<PlaneVertex> {
        self.parent.get(&v).copied()
    }

    /// The black set `A(xi)`.
    pub fn black(&self) -> BTreeSet<PlaneVertex> {
        self.collect(Status::Black)
    }

    /// The white set `B`.
    pub fn white(&self) -> BTreeSet<PlaneVertex> {
        self.collect(Status::White)
    }

    fn collect(&self, which: Status) -> BTreeSet<PlaneVertex> {
        self.status
            .iter()
            .filter(|(_, s)| **s == which)
            .map(|(v, _)| *v)
            .collect()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn max_diag(&self) -> u64 {
        self.max_diag
    }

    pub fn height_truncated(&self) -> u64 {
        self.height_truncated
    }

    pub fn meta(&self) -> &ExplorationMeta {
        &self.meta
    }

    /// Step log as JSON lines.
    pub fn step_log_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let rec = StepRecord {
                n: s.n,
                x: s.x,
                y: s.y,
                direction: s.direction,
                i_or_fail: match s.i {
                    Some(i) => serde_json::Value::from(i),
                    None => serde_json::Value::from("fail"),
                },
                psi: s.psi,
                height_truncated: &s.height_truncated,
            };
            out.push_str(&serde_json::to_string(&rec).expect("step record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Runs the exploration for `word` until the frontier empties or every
/// vertex with coordinate sum below `cp.max_diag` is determined.
pub fn explore<T: Scalar>(
    env: &Environment<T>,
    sites: &SiteField<T>,
    word: &Word,
    cp: &CouplingParams,
) -> Result<ExplorationResult, ExplorationError> {
    cp.validate()?;
    if env.dim() != 3 {
        return Err(ExplorationError::Dimension(env.dim()));
    }
    let needed = cp.letters_needed();
    if word.len() < needed {
        return Err(ExplorationError::WordTooShort {
            len: word.len(),
            max_diag: cp.max_diag,
            needed,
        });
    }
    let widths = &env.lattice_box().widths;
    if widths.iter().any(|w| *w + 1 < cp.max_diag) {
        return Err(ExplorationError::BoxTooSmall {
            widths: widths.clone(),
            max_diag: cp.max_diag,
        });
    }
    let height = env.lattice_box().height;
    let letters = word.letters();

    let origin = (0, 0);
    let mut res = ExplorationResult {
        status: HashMap::from([(origin, Status::Black)]),
        psi: HashMap::from([(origin, 0)]),
        parent: HashMap::new(),
        steps: Vec::new(),
        max_diag: cp.max_diag,
        height_truncated: 0,
        meta: ExplorationMeta {
            east_range: (1, cp.east_trials),
            north_range: (cp.east_trials + 1, cp.east_trials + cp.north_trials),
            parent_preference: cp.parent_preference,
            psi_rule: "minimal successful offset",
        },
    };

    let mut n = 0u64;
    for t in 1..cp.max_diag {
        let mut any_black = false;
        for x1 in 0..=t {
            let x = (x1, t - x1);
            let east_parent = (x1 > 0).then(|| (x1 - 1, t - x1));
            let north_parent = (t - x1 > 0).then(|| (x1, t - x1 - 1));
            let black_parent = |p: Option<PlaneVertex>| p.filter(|v| res.is_black(*v));
            let choice = match cp.parent_preference {
                ParentPreference::East => black_parent(east_parent)
                    .map(|y| (y, StepDirection::East))
                    .or_else(|| black_parent(north_parent).map(|y| (y, StepDirection::North))),
                ParentPreference::North => black_parent(north_parent)
                    .map(|y| (y, StepDirection::North))
                    .or_else(|| black_parent(east_parent).map(|y| (y, StepDirection::East))),
            };
            let Some((y, direction)) = choice else {
                continue;
            };
            let psi_y = res.psi[&y];
            let s = (y.0 + y.1) as usize;
            let (first, second) = (letters[2 * s], letters[2 * s + 1]);
            let horizontal_dir = match direction {
                StepDirection::East => 1,
                StepDirection::North => 2,
            };
            let mut truncated = 0u64;
            let mut success = None;
            for i in cp.range(direction) {
                let h = psi_y + i;
                if h > height {
                    truncated += 1;
                    continue;
                }
                if env.vertical_open(&[y.0, y.1, psi_y], i)
                    && env.horizontal_open(&[y.0, y.1, h], horizontal_dir)
                    && sites.label(&[y.0, y.1, h]) == first
                    && sites.label(&[x.0, x.1, h]) == second
                {
                    success = Some(i);
                    break;
                }
            }
            res.height_truncated += truncated;
            let psi_x = success.map(|i| psi_y + i);
            match psi_x {
                Some(h) => {
                    any_black = true;
                    res.status.insert(x, Status::Black);
                    res.psi.insert(x, h);
                    res.parent.insert(x, y);
                }
                None => {
                    res.status.insert(x, Status::White);
                }
            }
            res.steps.push(Step {
                n,
                x,
                y,
                direction,
                i: success,
                psi: psi_x,
                height_truncated: truncated,
            });
            n += 1;
        }
        if !any_black {
            break;
        }
    }
    Ok(res)
}

/// Exact probability that a fresh determination succeeds:
/// `1 - prod_{i in range} [1 - eps p_i^K P(X = a) P(X = b)]`.
pub fn step_black_probability<T: Scalar>(
    params: &ModelParams<T>,
    range: RangeInclusive<u64>,
    letters: (u8, u8),
) -> T {
    let letter_prob = |b: u8| if b == 1 { params.p } else { T::one() - params.p };
    let weight = params.eps * letter_prob(letters.0) * letter_prob(letters.1);
    let miss = range.fold(T::one(), |acc, i| {
        acc * (T::one() - weight * params.truncated_pn(i))
    });
    T::one() - miss
}

/// Lower bound obtained by replacing both letter probabilities with
/// `min(p, 1-p)`.
pub fn step_black_lower_bound<T: Scalar>(params: &ModelParams<T>, range: RangeInclusive<u64>) -> T {
    let q = params.p.min(T::one() - params.p);
    let weight = params.eps * q * q;
    T::one()
        - range.fold(T::one(), |acc, i| {
            acc * (T::one() - weight * params.truncated_pn(i))
        })
}

/// The diagonal `L_m = {v : v_1 + v_2 = m - 1}` and its three parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalSets {
    pub m: u64,
    pub line: Vec<PlaneVertex>,
    /// `0 <= v_1 < m/4`
    pub first: Vec<PlaneVertex>,
    /// `m/4 <= v_1 < 3m/4`
    pub middle: Vec<PlaneVertex>,
    /// `3m/4 <= v_1 < m`
    pub last: Vec<PlaneVertex>,
}

impl DiagonalSets {
    pub fn new(m: u64) -> Self {
        assert!(m >= 1, "diagonal index must be positive");
        let line: Vec<PlaneVertex> = (0..m).map(|v1| (v1, m - 1 - v1)).collect();
        let part = |lo: u64, hi: u64| -> Vec<PlaneVertex> {
            // lo*m/4 <= v1 < hi*m/4, compared as 4 v1 against multiples of m
            line.iter()
                .copied()
                .filter(|(v1, _)| 4 * v1 >= lo * m && 4 * v1 < hi * m)
                .collect()
        };
        DiagonalSets {
            m,
            first: part(0, 1),
            middle: part(1, 3),
            last: part(3, 4),
            line,
        }
    }

    pub fn contains_middle(m: u64, v: PlaneVertex) -> bool {
        v.0 + v.1 + 1 == m && 4 * v.0 >= m && 4 * v.0 < 3 * m
    }
}

/// `Gamma_m = A(xi) ∩ L_{4m,2}`.
pub fn gamma_set(res: &ExplorationResult, m: u64) -> Result<BTreeSet<PlaneVertex>, ExplorationError> {
    if m == 0 {
        return Err(ExplorationError::Params("m must be positive".into()));
    }
    if res.max_diag < 4 * m {
        return Err(ExplorationError::NotExplored {
            explored: res.max_diag,
            needed: 4 * m,
        });
    }
    Ok(DiagonalSets::new(4 * m)
        .middle
        .into_iter()
        .filter(|v| res.is_black(*v))
        .collect())
}

/// `B_m = { |Gamma_m| >= m }`.
pub fn b_event(res: &ExplorationResult, m: u64) -> Result<bool, ExplorationError> {
    Ok(gamma_set(res, m)?.len() as u64 >= m)
}

/// `D_m`: `B_m(eta)` for every `eta` in `Xi_{4m}` (exhaustive, `m <= 2`).
pub fn d_event<T: Scalar>(
    env: &Environment<T>,
    sites: &SiteField<T>,
    m: usize,
    cp: &CouplingParams,
) -> Result<bool, ExplorationError> {
    if m == 0 || m > MAX_D_EVENT_M {
        return Err(ExplorationError::EnumerationGuard {
            m,
            max: MAX_D_EVENT_M,
        });
    }
    let cp = cp.with_max_diag(4 * m as u64);
    for eta in enumerate_xi(4 * m)? {
        let res = explore(env, sites, &eta, &cp)?;
        if !b_event(&res, m as u64)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The 3-d path certified by the black vertex `x`: from the origin, one
/// vertical and one horizontal edge per plane step.
pub fn witness_path(res: &ExplorationResult, x: PlaneVertex) -> Result<Vec<SpaceVertex>, ExplorationError> {
    if !res.is_black(x) {
        return Err(ExplorationError::NotBlack(x));
    }
    let mut chain = vec![x];
    let mut cur = x;
    while let Some(y) = res.parent(cur) {
        chain.push(y);
        cur = y;
    }
    chain.reverse();
    let mut path = vec![[0, 0, 0]];
    for pair in chain.windows(2) {
        let (y, x) = (pair[0], pair[1]);
        let h = res.psi[&x];
        path.push([y.0, y.1, h]);
        path.push([x.0, x.1, h]);
    }
    Ok(path)
}

/// Replays a witness path against the environment: every edge open, every
/// letter matching the corresponding prefix of `word`.
pub fn verify_witness<T: Scalar>(
    env: &Environment<T>,
    sites: &SiteField<T>,
    word: &Word,
    path: &[SpaceVertex],
) -> bool {
    for (k, pair) in path.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let open = if a[0] == b[0] && a[1] == b[1] && b[2] > a[2] {
            env.vertical_open(&a, b[2] - a[2])
        } else if a[2] == b[2] && b[0] == a[0] + 1 && b[1] == a[1] {
            env.horizontal_open(&a, 1)
        } else if a[2] == b[2] && b[1] == a[1] + 1 && b[0] == a[0] {
            env.horizontal_open(&a, 2)
        } else {
            false
        };
        if !open || k >= word.len() || sites.label(&b) != word.letters()[k] {
            return false;
        }
    }
    true
}

/// Cross-checks a black vertex with the seen-word oracle: the prefix of
/// length `2(x_1 + x_2)` must be seen from the origin.
pub fn oracle_confirms<T: Scalar>(
    env: &Environment<T>,
    sites: &SiteField<T>,
    word: &Word,
    x: PlaneVertex,
) -> Result<bool, ExplorationError> {
    let len = 2 * (x.0 + x.1) as usize;
    let prefix = word.prefix(len)?;
    let q = SeenQuery::from_origin(env, sites, len)?;
    Ok(sees_word(&q, &prefix)?)
}
