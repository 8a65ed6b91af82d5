//! Output formats: CSV, JSON lines and a minimal SVG chart.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wordperc::mc::{EstimateRecord, ExperimentKind, ExperimentSpec};
use wordperc::model::PnFamily;

use crate::CliError;

/// One estimate together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub record: EstimateRecord,
    /// Resolved configuration, `;`-separated `key = value` statements.
    pub config: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_value: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format {other:?} (csv, jsonl, svg)")),
        }
    }
}

pub const CSV_HEADER: &str = "experiment,d,p,eps,K,pn,box,N,M,gamma,args,quenched_bond_seed,trials,successes,refused,p_hat,ci_lo,ci_hi,seed,config";

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn pn_label(pn: &PnFamily<f64>) -> String {
    match pn {
        PnFamily::Harmonic { c } => format!("harmonic({c})"),
        PnFamily::Constant { q } => format!("constant({q})"),
        PnFamily::Custom { values } => format!(
            "custom({})",
            values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        ),
    }
}

/// Kind-specific arguments as `name=value` pairs.
pub fn kind_args(kind: &ExperimentKind) -> String {
    use ExperimentKind as K;
    match kind {
        K::WordsSeen { len } => format!("L={len}"),
        K::SingleWord { word } => format!("word={word}"),
        K::BlackStep { direction, letters } => format!(
            "direction={} letters={}{}",
            serde_json::to_value(direction).expect("serializes").as_str().unwrap_or(""),
            letters[0],
            letters[1]
        ),
        K::BEvent { m, eta } | K::BPropPair { m, eta } => format!("m={m} eta={eta}"),
        K::DEvent { m } => format!("m={m}"),
        K::OrientedEvent { m, which } => format!("m={m} which={}", which.name()),
        K::MsCount { m, sources } => match sources {
            None => format!("m={m}"),
            Some(s) => format!(
                "m={m} sources={}",
                s.iter().map(|(x, y)| format!("{x}:{y}")).collect::<Vec<_>>().join(" ")
            ),
        },
        K::DominationWindow { rho, w, t } => format!("rho={rho} w={w} t={t}"),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv_row(out: &OutputRecord) -> String {
    let r = &out.record;
    let spec: &ExperimentSpec = &r.spec;
    let params = spec.params.as_ref();
    let bx = spec.lattice_box.as_ref().map(|b| {
        let mut s = b.widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("x");
        s.push('x');
        if b.is_lazy() {
            s.push_str("lazy");
        } else {
            s.push_str(&b.height.to_string());
        }
        s
    });
    let fields = [
        r.experiment.clone(),
        opt(params.map(|p| p.d)),
        opt(params.map(|p| p.p)),
        opt(params.map(|p| p.eps)),
        opt(params.map(|p| p.k)),
        params.map(|p| pn_label(&p.pn)).unwrap_or_default(),
        bx.unwrap_or_default(),
        opt(spec.coupling.map(|c| c.east_trials)),
        opt(spec.coupling.map(|c| c.north_trials)),
        opt(spec.gamma),
        kind_args(&spec.kind),
        opt(spec.quenched_bond_seed),
        r.trials.to_string(),
        r.successes.to_string(),
        r.refused.to_string(),
        r.p_hat.to_string(),
        r.ci_lo.to_string(),
        r.ci_hi.to_string(),
        r.master_seed.to_string(),
        out.config.clone(),
    ];
    fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",")
}

pub fn to_csv(records: &[OutputRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

pub fn to_jsonl(records: &[OutputRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

pub fn parse_jsonl(text: &str) -> Result<Vec<OutputRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Line chart of `p_hat` with confidence whiskers against the sweep value
/// (or the record index when values are not numeric).
pub fn to_svg(records: &[OutputRecord], config: &str) -> Result<String, CliError> {
    if records.is_empty() {
        return Err(CliError::Usage("svg output needs at least one record".into()));
    }
    let xs: Vec<f64> = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.sweep_value
                .as_deref()
                .and_then(|v| v.parse::<f64>().ok())
                .unwrap_or(i as f64)
        })
        .collect();
    let key = records[0].sweep_key.clone().unwrap_or_else(|| "index".into());
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let (x_min, x_max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    let span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let px = |x: f64| pad + (x - x_min) / span * (w - 2.0 * pad);
    let py = |y: f64| h - pad - y * (h - 2.0 * pad);

    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    )
    .unwrap();
    writeln!(s, "<title>p_hat versus {}</title>", xml_escape(&key)).unwrap();
    writeln!(s, "<desc>{}</desc>", xml_escape(config)).unwrap();
    writeln!(
        s,
        "<line class=\"axis\" x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        h - pad,
        w - pad,
        h - pad
    )
    .unwrap();
    writeln!(
        s,
        "<line class=\"axis\" x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>",
        h - pad
    )
    .unwrap();
    for tick in [0.0, 0.5, 1.0] {
        writeln!(
            s,
            "<text x=\"{}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">{tick}</text>",
            pad - 5.0,
            py(tick) + 3.0
        )
        .unwrap();
    }
    writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        w / 2.0,
        h - 10.0,
        xml_escape(&key)
    )
    .unwrap();
    let points: Vec<String> = xs
        .iter()
        .zip(records)
        .map(|(x, r)| format!("{:.2},{:.2}", px(*x), py(r.record.p_hat)))
        .collect();
    writeln!(
        s,
        "<polyline class=\"series\" fill=\"none\" stroke=\"steelblue\" points=\"{}\"/>",
        points.join(" ")
    )
    .unwrap();
    for (x, r) in xs.iter().zip(records) {
        let cx = px(*x);
        writeln!(
            s,
            "<line class=\"whisker\" x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\" stroke=\"gray\"/>",
            py(r.record.ci_lo),
            py(r.record.ci_hi)
        )
        .unwrap();
        writeln!(
            s,
            "<circle class=\"marker\" cx=\"{cx:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"><title>{}: {}</title></circle>",
            py(r.record.p_hat),
            xml_escape(&key),
            r.record.p_hat
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render(records: &[OutputRecord], format: Format, config: &str) -> Result<String, CliError> {
    match format {
        Format::Csv => Ok(to_csv(records)),
        Format::Jsonl => Ok(to_jsonl(records)),
        Format::Svg => to_svg(records, config),
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_output(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Renders and writes `records`.
pub fn emit(records: &[OutputRecord], format: Format, config: &str, path: Option<&Path>) -> Result<(), CliError> {
    write_output(&render(records, format, config)?, path)
}
