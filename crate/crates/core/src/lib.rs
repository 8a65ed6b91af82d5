//! Percolation of words on long-range lattices.
//!
//! The crate provides a lazily sampled long-range environment on boxes of
//! `Z^d_+`, exact seen-word oracles, the black-point exploration coupling,
//! oriented site percolation experiments, closed-form bounds and a
//! reproducible Monte Carlo engine. Numeric code is generic over
//! [`Scalar`]; the aliases below fix `f64`.

pub mod bounds;
pub mod exploration;
pub mod mc;
pub mod model;
pub mod oracle;
pub mod oriented;
pub mod rng;
pub mod scalar;
pub mod words;

pub use bounds::{
    chernoff, contour_bound_shape, exact_binom_tail, exact_binom_tail_rational, fit_decay,
    q_of_gamma, union_budget, BoundsError, Budget, DecayFit,
};
pub use exploration::{
    b_event, d_event, explore, gamma_set, step_black_probability, witness_path, CouplingParams,
    ExplorationError, ExplorationResult, StepDirection,
};
pub use mc::{derive_seed, run, wilson_ci, EstimateRecord, ExperimentKind, ExperimentSpec, McError, Stream};
pub use model::{Edge, Environment, LatticeBox, ModelError, ModelParams, PnFamily, SiteField, Vertex};
pub use oracle::{brute_force_seen, seen_words, sees_word, OracleError, OracleLimits, SeenQuery};
pub use oriented::{
    evaluate_events, event_indicator, m_s, reachable, sample_region, Event, EventOptions,
    OrientedConfig, OrientedError, Region, SourceRule,
};
pub use rng::uniform_at;
pub use scalar::Scalar;
pub use words::{enumerate_xi, extend, sigma, Word, WordError, WordSet};

pub type Real = f64;
pub type Rational = num_rational::BigRational;

pub type Params = ModelParams<Real>;
pub type Pn = PnFamily<Real>;
pub type Env = Environment<Real>;
pub type Sites = SiteField<Real>;
pub type Fit = DecayFit<Real>;
pub type Params32 = ModelParams<f32>;
pub type Env32 = Environment<f32>;
