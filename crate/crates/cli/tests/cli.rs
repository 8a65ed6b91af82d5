use std::process::Command as Proc;

use wordperc_cli::emit::{parse_jsonl, to_csv, to_jsonl, to_svg, CSV_HEADER};
use wordperc_cli::{execute, parse_config, Command, ConfigError, OutputRecord, EXIT_CONFIG, EXIT_IO, EXIT_RESOURCE};

const BLACK_STEP: &str = "\
experiment = black_step
p = 0.5
eps = 0.5
K = 10
pn = constant
pn_q = 1
widths = 2, 2
N = 2
M = 1
letters = 01
trials = 4000
seed = 11
";

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_wordperc"))
}

fn run_to_file(command: Command, text: &str, extra: &[&str], name: &str) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(name);
    let mut flags: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    flags.push(format!("--output={}", path.display()));
    execute(command, text, &flags).unwrap();
    let out = std::fs::read_to_string(&path).unwrap();
    (dir, out)
}

#[test]
fn config_examples() {
    assert_eq!(parse_config("p = 0.5", &[]).unwrap().f64("p").unwrap(), Some(0.5));
    let err = parse_config("p = 1.5", &[]).unwrap_err();
    assert!(matches!(err, ConfigError::OutOfRange { ref key, .. } if key == "p"));
    let cfg = parse_config("K = 3", &["--K=7".into()]).unwrap();
    assert_eq!(cfg.u64("K").unwrap(), Some(7));
}

#[test]
fn single_record_csv_has_two_lines() {
    let (_d, out) = run_to_file(Command::Estimate, BLACK_STEP, &["--format=csv"], "one.csv");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[1].starts_with("black_step,3,0.5,0.5,10,constant(1),2x2xlazy,2,1,"));
}

#[test]
fn jsonl_round_trips() {
    let (_d, out) = run_to_file(Command::Estimate, BLACK_STEP, &[], "one.jsonl");
    let recs = parse_jsonl(&out).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(to_jsonl(&recs), out);
    let r = &recs[0].record;
    assert_eq!(r.trials, 4000);
    assert!(r.successes <= r.trials && r.ci_lo <= r.p_hat && r.p_hat <= r.ci_hi);
    assert_eq!(r.interval, "wilson-0.95");
}

#[test]
fn sweep_svg_has_one_marker_per_point() {
    let (_d, out) = run_to_file(
        Command::Sweep,
        BLACK_STEP,
        &["--sweep_key=N", "--sweep_values=1,2,3,4,5", "--format=svg", "--trials=500"],
        "sweep.svg",
    );
    assert_eq!(out.matches("class=\"marker\"").count(), 5);
    assert_eq!(out.matches("class=\"whisker\"").count(), 5);
    assert!(out.contains("<desc>") && out.contains("sweep_key = N"));
}

#[test]
fn svg_needs_records() {
    assert!(to_svg(&[], "").is_err());
}

#[test]
fn echoed_config_reproduces_counts() {
    let (_d, out) = run_to_file(
        Command::Sweep,
        BLACK_STEP,
        &["--sweep_key=eps", "--sweep_values=0.25,0.75", "--format=jsonl"],
        "sweep2.jsonl",
    );
    let recs = parse_jsonl(&out).unwrap();
    assert_eq!(recs.len(), 2);
    for rec in &recs {
        let (_d3, again) = run_to_file(Command::Estimate, &rec.config, &["--workers=2"], "again.jsonl");
        let again = &parse_jsonl(&again).unwrap()[0];
        assert!(again.record.same_counts(&rec.record));
    }
}

#[test]
fn csv_quotes_config_column() {
    let (_d, out) = run_to_file(Command::Estimate, BLACK_STEP, &[], "x.jsonl");
    let recs: Vec<OutputRecord> = parse_jsonl(&out).unwrap();
    let csv = to_csv(&recs);
    let row = csv.lines().nth(1).unwrap();
    assert!(row.ends_with('"'), "{row}");
    assert!(row.contains("\"K = 10;"));
}

#[test]
fn oriented_csv_columns() {
    let (_d, out) = run_to_file(
        Command::Oriented,
        "gamma = 1\nm = 1, 2\ntrials = 50\n",
        &["--events=E1,E2,E3,E4,MS"],
        "o.csv",
    );
    let lines: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], "m,gamma,event,trials,successes,p_hat,ci_lo,ci_hi");
    assert_eq!(lines.len(), 1 + 10);
    for l in &lines[1..] {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols.len(), 8);
        let expected = if cols[2] == "MS" { "0" } else { "50" };
        assert_eq!(cols[4], expected, "{l}");
    }
}

#[test]
fn bounds_csv() {
    let (_d, out) = run_to_file(Command::Bounds, "bound = q_of_gamma\ngamma = 0.75\n", &[], "b.csv");
    assert_eq!(out, "bound,arguments,value\nq_of_gamma,gamma=0.75,0.5\n");
    let (_d, out) = run_to_file(Command::Bounds, "bound = union_budget\na = 1\n", &[], "b.csv");
    assert!(out.ends_with("union_budget,a=1,divergent\n"));
    let (_d, out) = run_to_file(
        Command::Bounds,
        "bound = fit_decay\nm = 1,2,3\nestimates = 0.1,0.01,0.001\n",
        &[],
        "b.csv",
    );
    let a_hat: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("fit_decay,a_hat,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((a_hat - 0.1).abs() < 1e-12, "{out}");
}

#[test]
fn oracle_output() {
    let (_d, out) = run_to_file(
        Command::Oracle,
        "p = 0.5\neps = 1\nK = 0\nwidths = 3, 3\nheight = 4\nL = 2\n",
        &["--show_hex=true"],
        "oracle.csv",
    );
    let row = out.lines().last().unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[0], "2");
    assert_eq!(cols[2], "4");
    assert_eq!(cols.len(), 5);
}

#[test]
fn explore_step_log() {
    let (_d, out) = run_to_file(
        Command::Explore,
        "p = 0.5\neps = 1\nK = 8\npn = constant\npn_q = 1\nwidths = 6, 6\nN = 4\nM = 4\nmax_diag = 5\nword = 0\n",
        &[],
        "steps.jsonl",
    );
    assert!(!out.is_empty());
    for line in out.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["n", "x", "y", "direction", "i_or_fail", "psi"] {
            assert!(v.get(key).is_some(), "{key} missing in {line}");
        }
    }
}

#[test]
fn binary_exit_codes() {
    let status = bin().args(["estimate", "--p=1.5"]).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_CONFIG));
    let status = bin().args(["estimate", "--colour=red"]).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_CONFIG));
    let status = bin()
        .args(["oracle", "--p=0.5", "--eps=0.5", "--K=3", "--widths=3,3", "--L=40"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_RESOURCE));
    let status = bin().args(["estimate", "--config", "/no/such/file.cfg"]).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_IO));
    let status = bin()
        .args(["bounds", "--bound=q_of_gamma", "--gamma=0.75", "--output=/no/such/dir/out.csv"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_IO));
    let out = bin().args(["bounds", "--bound=q_of_gamma", "--gamma=0.75"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "bound,arguments,value\nq_of_gamma,gamma=0.75,0.5\n");
}

#[test]
fn worker_env_variable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, BLACK_STEP).unwrap();
    let out = bin()
        .args(["estimate", "--config"])
        .arg(&cfg)
        .env("WORDPERC_WORKERS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let recs = parse_jsonl(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(recs[0].record.workers, 3);
    let bad = bin()
        .args(["estimate", "--config"])
        .arg(&cfg)
        .env("WORDPERC_WORKERS", "zero")
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(EXIT_CONFIG));
}
