//! Scenario runner for `finslerlab`: JSON scenarios in, JSON reports and CSV
//! plot data out.

pub mod plot;
pub mod scenario;
pub mod tasks;

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

pub use scenario::{Overrides, Scenario};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "FINSLERLAB_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("task failure: {0}")]
    TaskFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::TaskFailed(_) => 1,
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

pub struct Builtin {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
}

pub const BUILTINS: [Builtin; 6] = [
    Builtin {
        name: "u2-s3",
        description: "S^3 = U(2)/U(1) with the delta-homogeneous round norm F_0",
        source: include_str!("../scenarios/u2-s3.json"),
    },
    Builtin {
        name: "torus",
        description: "flat 2-torus, FSS obstruction witness",
        source: include_str!("../scenarios/torus.json"),
    },
    Builtin {
        name: "su2-biinv",
        description: "SU(2) with its bi-invariant metric, constant positive curvature",
        source: include_str!("../scenarios/su2-biinv.json"),
    },
    Builtin {
        name: "s3xs3",
        description: "SU(2) x SU(2), non-negative curvature with a flat torus",
        source: include_str!("../scenarios/s3xs3.json"),
    },
    Builtin {
        name: "hopf-submersion",
        description: "SU(2) over SU(2)/U(1), curvature of horizontal lifts",
        source: include_str!("../scenarios/hopf-submersion.json"),
    },
    Builtin {
        name: "maxnorm-smoothing",
        description: "smoothing the max norm on R^2 by mollification",
        source: include_str!("../scenarios/maxnorm-smoothing.json"),
    },
];

pub fn builtin(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

/// Reads a scenario from a file, or from the built-ins when no such file exists.
pub fn load(source: &str) -> Result<Scenario, CliError> {
    let path = Path::new(source);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{source}: {e}")))?;
        return scenario::parse(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{source}: {m}")),
            e => e,
        });
    }
    match builtin(source) {
        Some(b) => scenario::parse(b.source),
        None => Err(CliError::Io(format!("{source}: no such file or built-in scenario"))),
    }
}

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("finslerlab-out"))
}

/// Built-ins followed by the `*.json` files of `dir`, sorted by file name.
pub fn list_entries(dir: Option<&Path>) -> Result<Vec<(String, String)>, CliError> {
    let mut out: Vec<(String, String)> =
        BUILTINS.iter().map(|b| (b.name.to_string(), b.description.to_string())).collect();
    let Some(dir) = dir else {
        return Ok(out);
    };
    let entries = fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    for p in files {
        let desc = match fs::read_to_string(&p).map_err(|e| CliError::Io(e.to_string())).and_then(|t| scenario::parse(&t)) {
            Ok(s) if s.description.is_empty() => s.name,
            Ok(s) => format!("{}: {}", s.name, s.description),
            Err(e) => format!("invalid ({e})"),
        };
        out.push((p.display().to_string(), desc));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Runs every task in order and assembles the report.
pub fn run(s: &Scenario) -> Result<Value, CliError> {
    let resolved = scenario::Resolved::new(s)?;
    let mut results = Vec::with_capacity(s.tasks.len());
    for (i, t) in s.tasks.iter().enumerate() {
        results.push(tasks::run_task(s, &resolved, i, t)?);
    }
    let pass = results.iter().all(|r| r["pass"] == true);
    Ok(json!({
        "schema_version": scenario::SCHEMA_VERSION,
        "scenario": s.name,
        "description": s.description,
        "config": {
            "seed": s.config.seed,
            "samples": s.config.samples,
            "tol": tasks::num(s.config.tol),
            "budget": s.config.budget,
        },
        "tasks": results,
        "pass": pass,
    }))
}

pub fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(())
}

/// Runs a scenario and writes `<name>.report.json` (plus per-task CSV files
/// for [`Format::Csv`]) into `out`. Returns the report and the written paths.
pub fn run_to_dir(s: &Scenario, out: &Path, format: Format) -> Result<(Value, Vec<PathBuf>), CliError> {
    let report = run(s)?;
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut files = Vec::new();
    write(out.join(format!("{}.report.json", s.name)), &to_json(&report), &mut files)?;
    if format == Format::Csv {
        for t in report["tasks"].as_array().into_iter().flatten() {
            if let Some(csv) = plot::task_csv(t) {
                let name = format!("{}.{}-{}.csv", s.name, t["index"], t["kind"].as_str().unwrap_or("task"));
                write(out.join(name), &csv, &mut files)?;
            }
        }
    }
    Ok((report, files))
}

/// One line per task, e.g. `task 0 chebyshev: PASS`.
pub fn summary(report: &Value) -> String {
    let mut out = String::new();
    for t in report["tasks"].as_array().into_iter().flatten() {
        let verdict = if t["pass"] == true { "PASS" } else { "FAIL" };
        out.push_str(&format!("task {} {}: {verdict}\n", t["index"], t["kind"].as_str().unwrap_or("?")));
    }
    out
}

/// Writes the indicatrix CSV and the delta-vector certificates of the first
/// chebyshev task (or a default one) of a scenario.
pub fn chebyshev_artifacts(
    s: &Scenario,
    budget: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> Result<(Value, Vec<PathBuf>), CliError> {
    let resolved = scenario::Resolved::new(s)?;
    let mut opts = tasks::ChebyshevOptions {
        samples: 0,
        closed_form: false,
        certificates: 5,
        directions: 100,
        budget: None,
        tol: s.config.tol,
        seed: seed.unwrap_or(s.config.seed),
    };
    if let Some(scenario::TaskSpec::Chebyshev { closed_form, certificates, indicatrix_directions, budget, tol, .. }) =
        s.tasks.iter().find(|t| t.kind() == "chebyshev")
    {
        opts.closed_form = *closed_form;
        opts.certificates = certificates.unwrap_or(opts.certificates);
        opts.directions = indicatrix_directions.unwrap_or(opts.directions);
        opts.budget = *budget;
        opts.tol = tol.unwrap_or(opts.tol);
    }
    if budget.is_some() {
        opts.budget = budget;
    }
    let mut rep = serde_json::Value::Object(tasks::chebyshev(&resolved, &opts)?);
    rep["kind"] = json!("chebyshev");
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut files = Vec::new();
    let csv = plot::indicatrix_csv(&rep).expect("chebyshev reports carry an indicatrix");
    write(out.join(format!("{}.indicatrix.csv", s.name)), &csv, &mut files)?;
    let certs = json!({
        "scenario": s.name,
        "certificates": rep["certificates"],
        "max_gap": rep["max_gap"],
        "max_certificate": rep["max_certificate"],
        "tol": rep["tol"],
        "pass": rep["pass"],
    });
    write(out.join(format!("{}.certificates.json", s.name)), &to_json(&certs), &mut files)?;
    Ok((rep, files))
}

/// `{fss, rank_check, classification, verdict}` for a scenario.
pub fn obstruct(s: &Scenario, budget: Option<usize>) -> Result<Value, CliError> {
    let resolved = scenario::Resolved::new(s)?;
    let task_budget = s.tasks.iter().find_map(|t| match t {
        scenario::TaskSpec::Obstruct { budget, .. } => *budget,
        _ => None,
    });
    let budget = budget.or(task_budget).unwrap_or(s.config.budget);
    if budget == 0 {
        return Err(CliError::Parse("budget must be positive".into()));
    }
    let labels = s.labels.as_ref().map(|l| (l.g.as_str(), l.h.as_str()));
    let dec = resolved.space.decomposition().map(|d| d.as_ref());
    if dec.is_none() && labels.is_none() {
        return Err(CliError::Parse("obstruct needs a homogeneous space or labels".into()));
    }
    Ok(Value::Object(tasks::obstruct_report(dec, labels, budget)?))
}
