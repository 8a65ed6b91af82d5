//! Command implementations behind the `wordperc` binary.

pub mod config;
pub mod emit;

use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;
use wordperc::bounds::{
    chernoff, contour_bound_shape, exact_binom_tail, fit_decay, q_of_gamma, union_budget, BoundsError, Budget,
};
use wordperc::exploration::{explore, CouplingParams, ExplorationError, ParentPreference, StepDirection};
use wordperc::mc::{derive_seed, run, EstimateRecord, ExperimentKind, ExperimentSpec, McError, Stream};
use wordperc::model::{Environment, LatticeBox, ModelError, ModelParams, PnFamily, SiteField};
use wordperc::oracle::{seen_words, OracleError, OracleLimits, SeenQuery};
use wordperc::oriented::{Event, EventOptions, OrientedError, SourceRule};
use wordperc::words::{Word, WordError};

pub use config::{parse_config, ConfigError, RunConfig};
pub use emit::{emit, Format, OutputRecord};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "WORDPERC_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("resource refusal: {0}")]
    Resource(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Resource(_) => EXIT_RESOURCE,
            CliError::Io(_) => EXIT_IO,
            CliError::Failed(_) => EXIT_FAILURE,
        }
    }
}

fn is_resource(e: &OracleError) -> bool {
    matches!(
        e,
        OracleError::Budget { .. } | OracleError::PathGuard { .. } | OracleError::WordTooLong { .. }
    )
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        if is_resource(&e) {
            CliError::Resource(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::Oracle(o) => o.into(),
            McError::Exploration(ExplorationError::Oracle(o)) => o.into(),
            McError::Exploration(ExplorationError::EnumerationGuard { .. }) => CliError::Resource(e.to_string()),
            McError::Pool(_) => CliError::Failed(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

macro_rules! usage_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Usage(e.to_string())
            }
        }
    )*};
}
usage_from!(ModelError, WordError, OrientedError, BoundsError);

impl From<ExplorationError> for CliError {
    fn from(e: ExplorationError) -> Self {
        McError::from(e).into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Estimate,
    Sweep,
    Oracle,
    Explore,
    Oriented,
    Bounds,
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
    .into()
}

fn parse_key<T: FromStr>(cfg: &RunConfig, key: &str, what: &str) -> Result<T, CliError> {
    let raw = cfg.require(key)?;
    raw.parse().map_err(|_| invalid(key, format!("expected {what}, got {raw:?}")))
}

pub fn workers(cfg: &RunConfig) -> Result<usize, CliError> {
    if let Some(w) = cfg.u64("workers")? {
        return if w == 0 {
            Err(invalid("workers", "must be at least 1"))
        } else {
            Ok(w as usize)
        };
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return v
            .parse::<usize>()
            .ok()
            .filter(|w| *w > 0)
            .ok_or_else(|| CliError::Usage(format!("{WORKERS_ENV}={v:?} is not a positive integer")));
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn model_params(cfg: &RunConfig) -> Result<ModelParams<f64>, CliError> {
    let pn = match cfg.raw("pn").unwrap_or("harmonic") {
        "harmonic" => PnFamily::Harmonic {
            c: cfg.f64("pn_c")?.unwrap_or(1.0),
        },
        "constant" => PnFamily::Constant {
            q: cfg.req_f64("pn_q")?,
        },
        "custom" => PnFamily::Custom {
            values: cfg
                .f64_list("pn_values")
                .ok_or_else(|| ConfigError::Missing("pn_values".into()))?,
        },
        other => return Err(invalid("pn", format!("unknown family {other:?}"))),
    };
    let d = cfg.u64("d")?.unwrap_or(3) as usize;
    Ok(ModelParams::new(
        d,
        cfg.req_f64("p")?,
        cfg.req_f64("eps")?,
        cfg.req_u64("K")?,
        pn,
    )?)
}

pub fn lattice_box(cfg: &RunConfig, d: usize) -> Result<LatticeBox, CliError> {
    let widths = cfg
        .u64_list("widths")
        .ok_or_else(|| ConfigError::Missing("widths".into()))?;
    if widths.len() + 1 != d {
        return Err(invalid("widths", format!("need {} widths for d = {d}", d - 1)));
    }
    Ok(match cfg.raw("height").unwrap_or("lazy") {
        "lazy" => LatticeBox::lazy(widths)?,
        h => LatticeBox::new(widths, h.parse().map_err(|_| invalid("height", "expected an integer or `lazy`"))?)?,
    })
}

pub fn coupling(cfg: &RunConfig) -> Result<CouplingParams, CliError> {
    let mut cp = CouplingParams::new(
        cfg.req_u64("N")?,
        cfg.req_u64("M")?,
        cfg.u64("max_diag")?.unwrap_or(1).max(1),
    )?;
    cp.parent_preference = match cfg.raw("parent").unwrap_or("east") {
        "east" => ParentPreference::East,
        "north" => ParentPreference::North,
        other => return Err(invalid("parent", format!("expected east or north, got {other:?}"))),
    };
    Ok(cp)
}

fn word(cfg: &RunConfig, key: &str) -> Result<Word, CliError> {
    parse_key(cfg, key, "a 0/1 word")
}

fn sources(cfg: &RunConfig) -> Result<Option<Vec<(i64, i64)>>, CliError> {
    let Some(raw) = cfg.raw("sources") else {
        return Ok(None);
    };
    raw.split(',')
        .map(|pair| {
            let (x, y) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| invalid("sources", format!("expected x:y, got {pair:?}")))?;
            let parse = |s: &str| s.trim().parse::<i64>().map_err(|_| invalid("sources", format!("bad coordinate {s:?}")));
            Ok((parse(x)?, parse(y)?))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn direction(cfg: &RunConfig) -> Result<StepDirection, CliError> {
    match cfg.raw("direction").unwrap_or("east") {
        "east" => Ok(StepDirection::East),
        "north" => Ok(StepDirection::North),
        other => Err(invalid("direction", format!("expected east or north, got {other:?}"))),
    }
}

fn event_options(cfg: &RunConfig) -> Result<EventOptions, CliError> {
    Ok(EventOptions {
        w_left: cfg.u64("w_left")?.map(|w| w as i64),
        source_rule: match cfg.raw("source_rule").unwrap_or("given") {
            "given" => SourceRule::Given,
            "require_occupied" => SourceRule::RequireOccupied,
            other => return Err(invalid("source_rule", format!("unknown rule {other:?}"))),
        },
    })
}

fn integer_t(cfg: &RunConfig) -> Result<usize, CliError> {
    let t = cfg.req_f64("t")?;
    if t < 0.0 || t.fract() != 0.0 {
        return Err(invalid("t", "burn-in steps must be a nonnegative integer"));
    }
    Ok(t as usize)
}

/// Builds the experiment named by the `experiment` key.
pub fn experiment_spec(cfg: &RunConfig) -> Result<ExperimentSpec, CliError> {
    let name = cfg.require("experiment")?;
    let m_u = |cfg: &RunConfig| -> Result<u64, CliError> {
        let m = cfg.single_i64("m")?;
        u64::try_from(m).map_err(|_| invalid("m", "must be positive"))
    };
    let kind = match name {
        "words_seen" => ExperimentKind::WordsSeen {
            len: cfg.req_u64("L")? as usize,
        },
        "single_word" => ExperimentKind::SingleWord { word: word(cfg, "word")? },
        "black_step" => {
            let letters = word(cfg, "letters")?;
            if letters.len() != 2 {
                return Err(invalid("letters", "expected exactly two letters"));
            }
            ExperimentKind::BlackStep {
                direction: direction(cfg)?,
                letters: [letters.letters()[0], letters.letters()[1]],
            }
        }
        "b_event" => ExperimentKind::BEvent {
            m: m_u(cfg)?,
            eta: word(cfg, "eta")?,
        },
        "b_prop_pair" => ExperimentKind::BPropPair {
            m: m_u(cfg)?,
            eta: word(cfg, "eta")?,
        },
        "d_event" => ExperimentKind::DEvent { m: m_u(cfg)? as usize },
        "oriented_event" => ExperimentKind::OrientedEvent {
            m: cfg.single_i64("m")?,
            which: parse_key(cfg, "which", "an event E1..E4")?,
        },
        "ms_count" => ExperimentKind::MsCount {
            m: cfg.single_i64("m")?,
            sources: sources(cfg)?,
        },
        "domination_window" => ExperimentKind::DominationWindow {
            rho: cfg.req_f64("rho")?,
            w: cfg.req_u64("w")? as usize,
            t: integer_t(cfg)?,
        },
        other => return Err(invalid("experiment", format!("unknown experiment {other:?}"))),
    };
    let mut spec = match kind {
        ExperimentKind::OrientedEvent { .. } | ExperimentKind::MsCount { .. } | ExperimentKind::DominationWindow { .. } => {
            let mut s = ExperimentSpec::oriented(kind, cfg.req_f64("gamma")?);
            s.oriented = event_options(cfg)?;
            s
        }
        kind => {
            let params = model_params(cfg)?;
            let bx = lattice_box(cfg, params.d)?;
            let needs_cp = matches!(
                kind,
                ExperimentKind::BlackStep { .. }
                    | ExperimentKind::BEvent { .. }
                    | ExperimentKind::BPropPair { .. }
                    | ExperimentKind::DEvent { .. }
            );
            let mut s = ExperimentSpec::model(kind, params, bx);
            if needs_cp {
                s = s.with_coupling(coupling(cfg)?);
            }
            s.max_oracle_bits = cfg.u64("max_oracle_bits")?.map(u128::from);
            s
        }
    };
    spec.quenched_bond_seed = cfg.u64("quenched_bond_seed")?;
    spec.validate()?;
    Ok(spec)
}

fn output_path(cfg: &RunConfig) -> Option<PathBuf> {
    cfg.raw("output").map(PathBuf::from)
}

fn format(cfg: &RunConfig, default: Format) -> Result<Format, CliError> {
    match cfg.raw("format") {
        None => Ok(default),
        Some(f) => f.parse().map_err(|m: String| invalid("format", m)),
    }
}

fn estimate_once(cfg: &RunConfig) -> Result<EstimateRecord, CliError> {
    let spec = experiment_spec(cfg)?;
    let trials = cfg.u64("trials")?.unwrap_or(1000);
    let seed = cfg.u64("seed")?.unwrap_or(0);
    Ok(run(&spec, trials, seed, workers(cfg)?)?)
}

/// Fills in the defaults that affect results so the echoed configuration
/// reproduces the run.
fn resolve(cfg: &RunConfig) -> RunConfig {
    let mut cfg = cfg.clone();
    cfg.set_default("trials", "1000");
    cfg.set_default("seed", "0");
    cfg
}

pub fn cmd_estimate(cfg: &RunConfig) -> Result<(), CliError> {
    let cfg = resolve(cfg);
    let rec = estimate_once(&cfg)?;
    let echo = echo_config(&cfg);
    let out = OutputRecord {
        record: rec,
        config: echo.clone(),
        sweep_key: None,
        sweep_value: None,
    };
    emit(&[out], format(&cfg, Format::Jsonl)?, &echo, output_path(&cfg).as_deref())
}

/// The configuration without output-only keys, as one line.
pub fn echo_config(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    for k in ["output", "format", "workers"] {
        c.remove(k);
    }
    c.to_inline()
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let cfg = resolve(cfg);
    let key = cfg.require("sweep_key")?.to_string();
    if config::kind_of(&key).is_none() || key.starts_with("sweep_") {
        return Err(invalid("sweep_key", format!("cannot sweep {key:?}")));
    }
    let values = cfg
        .text_list("sweep_values")
        .ok_or_else(|| ConfigError::Missing("sweep_values".into()))?;
    let mut records = Vec::new();
    for v in &values {
        let mut point = cfg.clone();
        point.remove("sweep_key");
        point.remove("sweep_values");
        point.remove("target");
        point.set(&key, v, config::Origin::Flag)?;
        let rec = estimate_once(&point)?;
        records.push(OutputRecord {
            record: rec,
            config: echo_config(&point),
            sweep_key: Some(key.clone()),
            sweep_value: Some(v.clone()),
        });
    }
    if let Some(target) = cfg.f64("target")? {
        let hit = records.iter().find(|r| r.record.ci_lo >= target);
        match hit {
            Some(r) => eprintln!(
                "target {target}: first reached at {key} = {} (lower confidence bound {:.4})",
                r.sweep_value.as_deref().unwrap_or(""),
                r.record.ci_lo
            ),
            None => eprintln!("target {target}: not reached over the sweep"),
        }
    }
    emit(&records, format(&cfg, Format::Csv)?, &echo_config(&cfg), output_path(&cfg).as_deref())
}

fn header_comment(cfg: &RunConfig) -> String {
    format!("# {}\n", echo_config(cfg))
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<(), CliError> {
    let params = model_params(cfg)?;
    let bx = lattice_box(cfg, params.d)?;
    let seed = cfg.u64("seed")?.unwrap_or(0);
    let bond = cfg.u64("quenched_bond_seed")?.unwrap_or_else(|| derive_seed(seed, 0, Stream::Bond));
    let p = params.p;
    let d = params.d;
    let env = Environment::new(params, bond, bx.clone())?;
    let sites = SiteField::new(p, derive_seed(seed, 0, Stream::Site), bx)?;
    let len = cfg.req_u64("L")? as usize;
    let origin = cfg.u64_list("origin").unwrap_or_else(|| vec![0; d]);
    let q = SeenQuery::new(&env, &sites, &origin, len)?;
    let mut limits = OracleLimits::default();
    if let Some(b) = cfg.u64("max_oracle_bits")? {
        limits.max_bits = u128::from(b);
    }
    let set = seen_words(&q, &limits)?;
    let mut out = header_comment(cfg);
    out.push_str("L,count,universe,all_seen");
    if cfg.bool("show_hex") {
        out.push_str(",hex");
    }
    out.push('\n');
    out.push_str(&format!("{len},{},{},{}", set.count(), set.universe(), set.is_full()));
    if cfg.bool("show_hex") {
        out.push(',');
        out.push_str(&set.to_hex());
    }
    out.push('\n');
    emit::write_output(&out, output_path(cfg).as_deref())
}

pub fn cmd_explore(cfg: &RunConfig) -> Result<(), CliError> {
    let params = model_params(cfg)?;
    let bx = lattice_box(cfg, params.d)?;
    let cp = coupling(cfg)?;
    let seed = cfg.u64("seed")?.unwrap_or(0);
    let p = params.p;
    let env = Environment::new(params, cfg.u64("quenched_bond_seed")?.unwrap_or_else(|| derive_seed(seed, 0, Stream::Bond)), bx.clone())?;
    let sites = SiteField::new(p, derive_seed(seed, 0, Stream::Site), bx)?;
    let w = word(cfg, "word")?.zero_padded(cp.letters_needed());
    let res = explore(&env, &sites, &w, &cp)?;
    let meta = serde_json::to_string(res.meta()).expect("meta serializes");
    eprintln!(
        "black vertices: {}, white: {}, steps: {}, settings: {meta}",
        res.black().len(),
        res.white().len(),
        res.steps().len()
    );
    emit::write_output(&res.step_log_jsonl(), output_path(cfg).as_deref())
}

pub const ORIENTED_HEADER: &str = "m,gamma,event,trials,successes,p_hat,ci_lo,ci_hi";

pub fn cmd_oriented(cfg: &RunConfig) -> Result<(), CliError> {
    let cfg = resolve(&cfg.clone());
    let gamma = cfg.req_f64("gamma")?;
    let ms = cfg.i64_list("m").ok_or_else(|| ConfigError::Missing("m".into()))?;
    let events = cfg
        .text_list("events")
        .unwrap_or_else(|| ["E1", "E2", "E3", "E4", "MS"].map(String::from).to_vec());
    let trials = cfg.req_u64("trials")?;
    let seed = cfg.req_u64("seed")?;
    let opts = event_options(&cfg)?;
    let workers = workers(&cfg)?;
    let mut out = header_comment(&cfg);
    out.push_str(ORIENTED_HEADER);
    out.push('\n');
    let mut ms_points = Vec::new();
    for &m in &ms {
        for ev in &events {
            let kind = if ev.eq_ignore_ascii_case("MS") {
                ExperimentKind::MsCount { m, sources: sources(&cfg)? }
            } else {
                ExperimentKind::OrientedEvent {
                    m,
                    which: ev.parse::<Event>().map_err(|e| invalid("events", e.to_string()))?,
                }
            };
            let mut spec = ExperimentSpec::oriented(kind, gamma);
            spec.oriented = opts;
            let rec = run(&spec, trials, seed, workers)?;
            if ev.eq_ignore_ascii_case("MS") {
                ms_points.push((m as f64, rec.p_hat));
            }
            out.push_str(&format!(
                "{m},{gamma},{},{},{},{},{},{}\n",
                ev.to_ascii_uppercase(),
                rec.trials,
                rec.successes,
                rec.p_hat,
                rec.ci_lo,
                rec.ci_hi
            ));
        }
    }
    if ms_points.len() >= 2 {
        match fit_decay(&ms_points) {
            Ok(fit) => eprintln!("fit of P(M_S < 4m): a_hat = {:.6}, r2 = {:.4}, dropped m = {:?}", fit.a_hat, fit.r2, fit.dropped),
            Err(e) => eprintln!("fit of P(M_S < 4m): {e}"),
        }
    }
    emit::write_output(&out, output_path(&cfg).as_deref())
}

pub const BOUNDS_HEADER: &str = "bound,arguments,value";

pub fn cmd_bounds(cfg: &RunConfig) -> Result<(), CliError> {
    let bound = cfg.require("bound")?;
    let mut rows: Vec<(String, String)> = Vec::new();
    let m_list = || -> Result<Vec<u32>, CliError> {
        cfg.i64_list("m")
            .ok_or_else(|| ConfigError::Missing("m".into()))?
            .into_iter()
            .map(|m| u32::try_from(m).ok().filter(|m| *m > 0).ok_or_else(|| invalid("m", "must be positive")))
            .collect()
    };
    match bound {
        "chernoff" => {
            let (beta, t) = (cfg.req_f64("beta")?, cfg.req_f64("t")?);
            for m in m_list()? {
                rows.push((format!("beta={beta} t={t} m={m}"), chernoff(beta, t, m).to_string()));
            }
        }
        "binom_tail" => {
            let (n, beta, k) = (cfg.req_u64("n")?, cfg.req_f64("beta")?, cfg.req_u64("k")?);
            rows.push((format!("n={n} beta={beta} k={k}"), exact_binom_tail(n, beta, k)?.to_string()));
        }
        "q_of_gamma" => {
            let gamma = cfg.req_f64("gamma")?;
            rows.push((format!("gamma={gamma}"), q_of_gamma(gamma)?.to_string()));
        }
        "contour" => {
            let (c, q) = (cfg.req_f64("c")?, cfg.req_f64("q")?);
            for m in m_list()? {
                rows.push((format!("c={c} q={q} m={m}"), contour_bound_shape(c, q, m)?.to_string()));
            }
        }
        "union_budget" => {
            let a = cfg.req_f64("a")?;
            let v = match union_budget(a)? {
                Budget::Finite(x) => x.to_string(),
                Budget::Divergent => "divergent".to_string(),
            };
            rows.push((format!("a={a}"), v));
        }
        "fit_decay" => {
            let ms = cfg.i64_list("m").ok_or_else(|| ConfigError::Missing("m".into()))?;
            let est = cfg
                .f64_list("estimates")
                .ok_or_else(|| ConfigError::Missing("estimates".into()))?;
            if ms.len() != est.len() {
                return Err(invalid("estimates", "needs one estimate per m"));
            }
            let points: Vec<(f64, f64)> = ms.iter().map(|m| *m as f64).zip(est).collect();
            let fit = fit_decay(&points)?;
            rows.push(("a_hat".into(), fit.a_hat.to_string()));
            rows.push(("r2".into(), fit.r2.to_string()));
            rows.push((
                "dropped".into(),
                fit.dropped.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" "),
            ));
        }
        other => return Err(invalid("bound", format!("unknown bound {other:?}"))),
    }
    let mut out = String::from(BOUNDS_HEADER);
    out.push('\n');
    for (args, v) in rows {
        out.push_str(&format!("{bound},{},{v}\n", emit::csv_field(&args)));
    }
    emit::write_output(&out, output_path(cfg).as_deref())
}

/// Runs `command` on a configuration text plus overrides.
pub fn execute(command: Command, config_text: &str, overrides: &[String]) -> Result<(), CliError> {
    let cfg = parse_config(config_text, overrides)?;
    match command {
        Command::Estimate => cmd_estimate(&cfg),
        Command::Sweep => cmd_sweep(&cfg),
        Command::Oracle => cmd_oracle(&cfg),
        Command::Explore => cmd_explore(&cfg),
        Command::Oriented => cmd_oriented(&cfg),
        Command::Bounds => cmd_bounds(&cfg),
    }
}

/// Reads the optional configuration file and runs `command`; returns the
/// process exit code after reporting any error on stderr.
pub fn main_with(command: Command, config: Option<&std::path::Path>, overrides: &[String]) -> i32 {
    let text = match config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: I/O error: {}: {e}", p.display());
                return EXIT_IO;
            }
        },
        None => String::new(),
    };
    match execute(command, &text, overrides) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
