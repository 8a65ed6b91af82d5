//! `key = value` run configuration with flag overrides.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Where a value came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag => f.write_str("command line"),
            Origin::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{origin}: unknown key \"{key}\"")]
    UnknownKey { key: String, origin: Origin },
    #[error("{origin}: expected `key = value`, got {text:?}")]
    Syntax { text: String, origin: Origin },
    #[error("{origin}: key \"{key}\": cannot parse {value:?} as {expected}")]
    Malformed {
        key: String,
        value: String,
        expected: &'static str,
        origin: Origin,
    },
    #[error("{origin}: key \"{key}\": {value} is outside [0, 1]")]
    OutOfRange { key: String, value: String, origin: Origin },
    #[error("missing required key \"{0}\"")]
    Missing(String),
    #[error("key \"{key}\": {message}")]
    Invalid { key: String, message: String },
}

/// Value types accepted by keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Probability,
    PositiveReal,
    Real,
    UInt,
    Int,
    Text,
    UIntList,
    IntList,
    RealList,
    TextList,
    Bool,
}

impl Kind {
    fn expected(self) -> &'static str {
        match self {
            Kind::Probability => "a probability",
            Kind::PositiveReal => "a positive real",
            Kind::Real => "a real number",
            Kind::UInt => "a nonnegative integer",
            Kind::Int => "an integer",
            Kind::Text => "text",
            Kind::UIntList => "a comma-separated list of nonnegative integers",
            Kind::IntList => "a comma-separated list of integers",
            Kind::RealList => "a comma-separated list of reals",
            Kind::TextList => "a comma-separated list",
            Kind::Bool => "true or false",
        }
    }
}

/// Every accepted key with its type and meaning.
pub const KEYS: &[(&str, Kind, &str)] = &[
    ("experiment", Kind::Text, "experiment kind for estimate/sweep"),
    ("trials", Kind::UInt, "number of Monte Carlo trials"),
    ("seed", Kind::UInt, "master seed"),
    ("workers", Kind::UInt, "worker threads"),
    ("output", Kind::Text, "output path (stdout when absent)"),
    ("format", Kind::Text, "csv, jsonl or svg"),
    ("d", Kind::UInt, "lattice dimension"),
    ("p", Kind::Probability, "site letter density"),
    ("eps", Kind::Probability, "horizontal edge density"),
    ("K", Kind::UInt, "truncation of vertical edge lengths"),
    ("pn", Kind::Text, "harmonic, constant or custom"),
    ("pn_c", Kind::PositiveReal, "harmonic constant c"),
    ("pn_q", Kind::Probability, "constant family value q"),
    ("pn_values", Kind::RealList, "custom family values"),
    ("widths", Kind::UIntList, "box widths of the horizontal coordinates"),
    ("height", Kind::Text, "box height, or `lazy`"),
    ("N", Kind::UInt, "east trial heights"),
    ("M", Kind::UInt, "north trial heights"),
    ("max_diag", Kind::UInt, "exploration depth in coordinate sum"),
    ("parent", Kind::Text, "east or north parent preference"),
    ("L", Kind::UInt, "word length"),
    ("word", Kind::Text, "0/1 word"),
    ("direction", Kind::Text, "east or north"),
    ("letters", Kind::Text, "two letters for black_step, e.g. 01"),
    ("m", Kind::IntList, "scale m (a list for the oriented command)"),
    ("eta", Kind::Text, "0/1 word for b_event and b_prop_pair"),
    ("which", Kind::Text, "oriented event E1..E4"),
    ("events", Kind::TextList, "oriented events to estimate (E1..E4, MS)"),
    ("sources", Kind::Text, "M_S sources as x:y pairs separated by commas"),
    ("gamma", Kind::Probability, "oriented site density"),
    ("rho", Kind::Probability, "product density of the domination check"),
    ("w", Kind::UInt, "window size of the domination check"),
    ("t", Kind::Real, "Chernoff exponent, or burn-in steps of the domination check"),
    ("w_left", Kind::UInt, "clipping width of the E4 line"),
    ("source_rule", Kind::Text, "given or require_occupied"),
    ("quenched_bond_seed", Kind::UInt, "fixed bond seed"),
    ("max_oracle_bits", Kind::UInt, "oracle memory budget in bits"),
    ("sweep_key", Kind::Text, "key varied by sweep"),
    ("sweep_values", Kind::TextList, "values taken by the sweep key"),
    ("target", Kind::Probability, "target confidence 1 - alpha for sweep reports"),
    ("origin", Kind::UIntList, "oracle origin"),
    ("show_hex", Kind::Bool, "print the full seen-word bitmap"),
    ("bound", Kind::Text, "chernoff, binom_tail, q_of_gamma, contour, union_budget or fit_decay"),
    ("beta", Kind::Probability, "Chernoff / binomial parameter"),
    ("n", Kind::UInt, "binomial size"),
    ("k", Kind::UInt, "binomial threshold"),
    ("c", Kind::PositiveReal, "contour constant"),
    ("q", Kind::Probability, "contour q"),
    ("a", Kind::PositiveReal, "decay rate for the union budget"),
    ("estimates", Kind::RealList, "estimates for fit_decay, paired with m"),
];

pub fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|k| k.0 == key).map(|k| k.1)
}

/// A validated value as written plus where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub raw: String,
    pub origin: Origin,
}

/// Resolved flat configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, Entry>,
}

fn split_list(raw: &str) -> Vec<&str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn check_value(key: &str, raw: &str, origin: Origin) -> Result<(), ConfigError> {
    let kind = kind_of(key).ok_or_else(|| ConfigError::UnknownKey {
        key: key.to_string(),
        origin,
    })?;
    let malformed = || ConfigError::Malformed {
        key: key.to_string(),
        value: raw.to_string(),
        expected: kind.expected(),
        origin,
    };
    let real = |s: &str| s.parse::<f64>().ok().filter(|x| x.is_finite());
    match kind {
        Kind::Probability => {
            let x = real(raw).ok_or_else(malformed)?;
            if !(0.0..=1.0).contains(&x) {
                return Err(ConfigError::OutOfRange {
                    key: key.to_string(),
                    value: raw.to_string(),
                    origin,
                });
            }
        }
        Kind::PositiveReal => {
            if !real(raw).is_some_and(|x| x > 0.0) {
                return Err(malformed());
            }
        }
        Kind::Real => {
            real(raw).ok_or_else(malformed)?;
        }
        Kind::UInt => {
            raw.parse::<u64>().map_err(|_| malformed())?;
        }
        Kind::Int => {
            raw.parse::<i64>().map_err(|_| malformed())?;
        }
        Kind::Text => {
            if raw.is_empty() {
                return Err(malformed());
            }
        }
        Kind::UIntList => {
            let items = split_list(raw);
            if items.is_empty() || items.iter().any(|s| s.parse::<u64>().is_err()) {
                return Err(malformed());
            }
        }
        Kind::IntList => {
            let items = split_list(raw);
            if items.is_empty() || items.iter().any(|s| s.parse::<i64>().is_err()) {
                return Err(malformed());
            }
        }
        Kind::RealList => {
            let items = split_list(raw);
            if items.is_empty() || items.iter().any(|s| real(s).is_none()) {
                return Err(malformed());
            }
        }
        Kind::TextList => {
            if split_list(raw).is_empty() {
                return Err(malformed());
            }
        }
        Kind::Bool => {
            raw.parse::<bool>().map_err(|_| malformed())?;
        }
    }
    Ok(())
}

/// Parses a configuration file and applies `--key=value` overrides.
///
/// Lines are `key = value`; `#` starts a comment; `;` separates
/// statements on one line.
pub fn parse_config(text: &str, flags: &[String]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    for (i, line) in text.lines().enumerate() {
        let origin = Origin::Line(i + 1);
        let line = line.split('#').next().unwrap_or("");
        for stmt in line.split(';') {
            let stmt = stmt.trim();
            if stmt.is_empty() {
                continue;
            }
            let (key, value) = stmt.split_once('=').ok_or_else(|| ConfigError::Syntax {
                text: stmt.to_string(),
                origin,
            })?;
            cfg.set(key.trim(), value.trim(), origin)?;
        }
    }
    for flag in flags {
        let body = flag.strip_prefix("--").ok_or_else(|| ConfigError::Syntax {
            text: flag.clone(),
            origin: Origin::Flag,
        })?;
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
            text: flag.clone(),
            origin: Origin::Flag,
        })?;
        cfg.set(key.trim(), value.trim(), Origin::Flag)?;
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, raw: &str, origin: Origin) -> Result<(), ConfigError> {
        check_value(key, raw, origin)?;
        self.entries.insert(
            key.to_string(),
            Entry {
                raw: raw.to_string(),
                origin,
            },
        );
        Ok(())
    }

    /// Sets `key` only when absent.
    pub fn set_default(&mut self, key: &str, raw: &str) {
        if !self.entries.contains_key(key) {
            self.set(key, raw, Origin::Default).expect("valid default");
        }
    }

    pub fn remove(&mut self, key: &str) {
        self.entries.remove(key);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.raw.as_str())
    }

    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.raw(key).ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        Ok(self.raw(key).map(|s| s.parse().expect("validated")))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        Ok(self.raw(key).map(|s| s.parse().expect("validated")))
    }

    pub fn bool(&self, key: &str) -> bool {
        self.raw(key).is_some_and(|s| s == "true")
    }

    pub fn req_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.f64(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    pub fn req_u64(&self, key: &str) -> Result<u64, ConfigError> {
        self.u64(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    pub fn u64_list(&self, key: &str) -> Option<Vec<u64>> {
        self.raw(key)
            .map(|s| split_list(s).iter().map(|v| v.parse().expect("validated")).collect())
    }

    pub fn i64_list(&self, key: &str) -> Option<Vec<i64>> {
        self.raw(key)
            .map(|s| split_list(s).iter().map(|v| v.parse().expect("validated")).collect())
    }

    pub fn f64_list(&self, key: &str) -> Option<Vec<f64>> {
        self.raw(key)
            .map(|s| split_list(s).iter().map(|v| v.parse().expect("validated")).collect())
    }

    pub fn text_list(&self, key: &str) -> Option<Vec<String>> {
        self.raw(key)
            .map(|s| split_list(s).into_iter().map(String::from).collect())
    }

    /// A single integer from a list-valued key.
    pub fn single_i64(&self, key: &str) -> Result<i64, ConfigError> {
        match self.i64_list(key).as_deref() {
            Some([v]) => Ok(*v),
            Some(_) => Err(ConfigError::Invalid {
                key: key.to_string(),
                message: "expected a single value".into(),
            }),
            None => Err(ConfigError::Missing(key.to_string())),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// The resolved configuration as `key = value` lines, parseable by
    /// [`parse_config`].
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, e)| format!("{k} = {}\n", e.raw))
            .collect()
    }

    /// Single-line form with `;` separators.
    pub fn to_inline(&self) -> String {
        self.entries
            .iter()
            .map(|(k, e)| format!("{k} = {}", e.raw))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_probability() {
        let cfg = parse_config("p = 0.5\n", &[]).unwrap();
        assert_eq!(cfg.f64("p").unwrap(), Some(0.5));
    }

    #[test]
    fn range_error_names_key_and_line() {
        let err = parse_config("# header\np = 1.5\n", &[]).unwrap_err();
        assert_eq!(
            err,
            ConfigError::OutOfRange {
                key: "p".into(),
                value: "1.5".into(),
                origin: Origin::Line(2)
            }
        );
        let msg = err.to_string();
        assert!(msg.contains("\"p\"") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn flags_override_file() {
        let cfg = parse_config("K = 3\n", &["--K=7".to_string()]).unwrap();
        assert_eq!(cfg.u64("K").unwrap(), Some(7));
        assert_eq!(cfg.entry("K").unwrap().origin, Origin::Flag);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(matches!(
            parse_config("colour = red", &[]),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(matches!(
            parse_config("K = -1", &[]),
            Err(ConfigError::Malformed { .. })
        ));
        assert!(matches!(
            parse_config("just text", &[]),
            Err(ConfigError::Syntax { .. })
        ));
        assert!(matches!(
            parse_config("", &["K=3".to_string()]),
            Err(ConfigError::Syntax { .. })
        ));
        assert!(matches!(
            parse_config("", &["--eps=2".to_string()]),
            Err(ConfigError::OutOfRange {
                origin: Origin::Flag,
                ..
            })
        ));
    }

    #[test]
    fn comments_lists_and_round_trip() {
        let text = "p = 0.25 # density\nwidths = 4, 5\nm = 1,2,3 ; gamma = 0.9\n";
        let cfg = parse_config(text, &[]).unwrap();
        assert_eq!(cfg.u64_list("widths"), Some(vec![4, 5]));
        assert_eq!(cfg.i64_list("m"), Some(vec![1, 2, 3]));
        assert_eq!(cfg.f64("gamma").unwrap(), Some(0.9));
        let again = parse_config(&cfg.to_text(), &[]).unwrap();
        assert_eq!(again.to_text(), cfg.to_text());
        let inline = parse_config(&cfg.to_inline(), &[]).unwrap();
        assert_eq!(inline.to_text(), cfg.to_text());
    }
}
