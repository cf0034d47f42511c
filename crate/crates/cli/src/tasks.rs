//! Task runners. Each returns a JSON object with a `pass` field.

use std::sync::Arc;

use finslerlab::chebyshev::{chebyshev_evaluate, delta_vector_search, ChebyshevConfig, ChebyshevNorm};
use finslerlab::geometry::{
    curvature_report, fp_condition_sample, sample_flags, FinslerChart, FlatChart, HomogeneousChart,
};
use finslerlab::norms::NormHandle;
use finslerlab::obstruction::{
    positive_curvature_verdict, ClassificationMatch, FssCertificate, FssSource, Parity, RankCheck,
};
use finslerlab::smoothing::{approximate_singular_norm, normal_to_delta_sequence, SequenceConfig};
use finslerlab::submersion::{submersion_inequality_check, LinearSubmersion, SubmersionCheckConfig};
use finslerlab::{presets, util, ReductiveDecomposition};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Map, Value};

use crate::scenario::{build_norm, parse_matrix, parse_vectors, Config, CurvatureExpect, Resolved, Scenario, Space, TaskSpec};
use crate::CliError;

/// A float at 12 significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(util::round_sig(x))
    } else {
        Value::Null
    }
}

pub fn vec_json(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

fn vecs_json(vs: &[DVector<f64>]) -> Value {
    Value::Array(vs.iter().map(vec_json).collect())
}

fn numeric(e: finslerlab::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

fn need_decomposition(r: &Resolved) -> Result<&Arc<ReductiveDecomposition>, CliError> {
    r.space.decomposition().ok_or_else(|| CliError::Parse("task requires a homogeneous space".into()))
}

fn need_norm(r: &Resolved) -> Result<&NormHandle, CliError> {
    r.norm.as_ref().ok_or_else(|| CliError::Parse("task requires a norm".into()))
}

pub fn run_task(s: &Scenario, r: &Resolved, index: usize, task: &TaskSpec) -> Result<Value, CliError> {
    let cfg = &s.config;
    let seed = cfg.seed.wrapping_add(index as u64);
    let mut out = match task {
        TaskSpec::Curvature { flags, x_radius, expect } => {
            curvature(r, flags.unwrap_or(cfg.samples), x_radius.unwrap_or(0.3), expect, seed)?
        }
        TaskSpec::Chebyshev { samples, closed_form, certificates, indicatrix_directions, budget, tol } => {
            let opts = ChebyshevOptions {
                samples: samples.unwrap_or(20),
                closed_form: *closed_form,
                certificates: certificates.unwrap_or(5),
                directions: indicatrix_directions.unwrap_or(100),
                budget: *budget,
                tol: tol.unwrap_or(cfg.tol),
                seed,
            };
            chebyshev(r, &opts)?
        }
        TaskSpec::Smoothing { schedule, points_per_axis, max_final_gap } => {
            smoothing(r, schedule, points_per_axis.unwrap_or(9), *max_final_gap)?
        }
        TaskSpec::Submersion { base_h, pi, base_norm, flags, slack } => {
            let scfg = SubmersionCheckConfig {
                flags: flags.unwrap_or(cfg.samples),
                seed,
                slack: slack.unwrap_or(cfg.tol),
                ..SubmersionCheckConfig::default()
            };
            submersion(r, base_h.as_deref(), pi.as_deref(), base_norm.as_ref(), &scfg)?
        }
        TaskSpec::Obstruct { budget, expect } => {
            let labels = s.labels.as_ref().map(|l| (l.g.as_str(), l.h.as_str()));
            obstruct(r, labels, budget.unwrap_or(cfg.budget), expect.as_deref())?
        }
        TaskSpec::Fp { planes, directions, expect } => {
            fp(r, planes.unwrap_or(20), directions.unwrap_or(8), *expect, seed)?
        }
        TaskSpec::Converge { schedule, directions, max_final_gap } => {
            converge(r, schedule.clone(), directions.unwrap_or(16), *max_final_gap, cfg)?
        }
    };
    out.insert("kind".into(), json!(task.kind()));
    out.insert("index".into(), json!(index));
    Ok(Value::Object(out))
}

fn curvature(r: &Resolved, n: usize, frac: f64, expect: &CurvatureExpect, seed: u64) -> Result<Map<String, Value>, CliError> {
    let chart = r.chart()?;
    let rad = frac * chart.radius().min(1.0);
    let mut rows = Vec::with_capacity(n);
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for f in sample_flags(chart.dim(), n, rad, seed) {
        let rep = curvature_report(chart.as_ref(), &f).map_err(numeric)?;
        lo = lo.min(rep.flag);
        hi = hi.max(rep.flag);
        sum += rep.flag;
        rows.push(json!({
            "x": vec_json(&f.x),
            "y": vec_json(&f.y),
            "v": vec_json(&f.v),
            "K": num(rep.flag),
            "Ric": num(rep.ricci),
            "residual": num(rep.flagpole_residual),
        }));
    }
    let spread = hi - lo;
    let mut failures = Vec::new();
    if let Some(m) = expect.min_k {
        if lo < m {
            failures.push(format!("min K {lo} < {m}"));
        }
    }
    if let Some(m) = expect.max_k {
        if hi > m {
            failures.push(format!("max K {hi} > {m}"));
        }
    }
    if let Some(m) = expect.max_abs_k {
        if lo.abs().max(hi.abs()) > m {
            failures.push(format!("max |K| {} > {m}", lo.abs().max(hi.abs())));
        }
    }
    if let Some(m) = expect.max_spread {
        if spread > m {
            failures.push(format!("spread {spread} > {m}"));
        }
    }
    let mut out = Map::new();
    out.insert("chart".into(), json!(chart.label()));
    out.insert("flags".into(), Value::Array(rows));
    out.insert("min_k".into(), num(lo));
    out.insert("max_k".into(), num(hi));
    out.insert("mean_k".into(), num(sum / n as f64));
    out.insert("spread".into(), num(spread));
    out.insert("failures".into(), json!(failures));
    out.insert("pass".into(), json!(failures.is_empty()));
    Ok(out)
}

pub struct ChebyshevOptions {
    pub samples: usize,
    pub closed_form: bool,
    pub certificates: usize,
    pub directions: usize,
    pub budget: Option<usize>,
    pub tol: f64,
    pub seed: u64,
}

pub fn chebyshev(r: &Resolved, o: &ChebyshevOptions) -> Result<Map<String, Value>, CliError> {
    let dec = need_decomposition(r)?;
    let f = need_norm(r)?;
    let mut cfg = ChebyshevConfig { seed: o.seed, ..ChebyshevConfig::default() };
    if let Some(b) = o.budget {
        cfg.budget = b;
    }
    let c = ChebyshevNorm::with_config(dec.clone(), f.clone(), cfg.clone()).map_err(numeric)?;
    let d = dec.algebra().dim();
    if o.closed_form && d != 4 {
        return Err(CliError::Parse("closed_form applies to the u2-s3 space only".into()));
    }
    let mut rng = util::rng(o.seed);
    let mut samples = Vec::with_capacity(o.samples);
    let mut worst = 0.0f64;
    for _ in 0..o.samples {
        let w = util::gaussian_vector(d, &mut rng);
        let val = chebyshev_evaluate(&c, &w).map_err(numeric)?;
        let mut row = json!({ "w": vec_json(&w), "value": num(val.value) });
        if o.closed_form {
            let exact = presets::u2_chebyshev_closed_form(&w);
            worst = worst.max((val.value - exact).abs());
            row["closed_form"] = num(exact);
        }
        samples.push(row);
    }
    let dirs = util::sphere_directions(d, o.directions);
    let mut values = Vec::with_capacity(dirs.len());
    for dir in &dirs {
        values.push(num(c.evaluate(dir).map_err(numeric)?));
    }
    let light = c
        .reconfigured(ChebyshevConfig { restarts: 4, budget: cfg.budget.min(64), ..cfg })
        .map_err(numeric)?;
    let mut certs = Vec::with_capacity(o.certificates);
    let (mut gap, mut cert) = (0.0f64, 0.0f64);
    for _ in 0..o.certificates {
        let u = util::gaussian_vector(dec.dim_m(), &mut rng);
        let dv = delta_vector_search(&light, &u).map_err(numeric)?;
        gap = gap.max(dv.gap);
        cert = cert.max(dv.certificate);
        certs.push(json!({
            "base": vec_json(&dv.base),
            "lift": vec_json(&dv.lift),
            "value": num(dv.value),
            "base_value": num(dv.base_value),
            "gap": num(dv.gap),
            "certificate": num(dv.certificate),
        }));
    }
    let pass = (!o.closed_form || worst <= o.tol) && gap <= o.tol && cert <= o.tol;
    let mut out = Map::new();
    out.insert("samples".into(), Value::Array(samples));
    if o.closed_form {
        out.insert("max_closed_form_error".into(), num(worst));
    }
    out.insert("indicatrix".into(), json!({ "directions": vecs_json(&dirs), "values": values }));
    out.insert("certificates".into(), Value::Array(certs));
    out.insert("max_gap".into(), num(gap));
    out.insert("max_certificate".into(), num(cert));
    out.insert("tol".into(), num(o.tol));
    out.insert("pass".into(), json!(pass));
    Ok(out)
}

fn smoothing(r: &Resolved, schedule: &[f64], ppa: usize, max_gap: Option<f64>) -> Result<Map<String, Value>, CliError> {
    let f = need_norm(r)?;
    let stages = approximate_singular_norm(f, schedule, ppa).map_err(numeric)?;
    let rows: Vec<Value> = stages
        .iter()
        .map(|s| {
            json!({
                "epsilon": num(s.epsilon),
                "sup_gap": num(s.sup_gap),
                "strong_convexity": num(s.strong_convexity),
                "mass_error": num(s.mass_error),
            })
        })
        .collect();
    let convex = stages.iter().all(|s| s.strong_convexity >= 0.999 * s.epsilon);
    let decreasing = stages.windows(2).all(|w| w[1].sup_gap < w[0].sup_gap);
    let last = stages.last().expect("validated non-empty schedule");
    let limit = max_gap.unwrap_or(last.epsilon);
    let mut out = Map::new();
    let dirs = util::sphere_directions(f.dim(), 64);
    let values: Vec<Value> = dirs.iter().map(|d| num(last.norm.eval(d))).collect();
    out.insert("indicatrix".into(), json!({ "directions": vecs_json(&dirs), "values": values }));
    out.insert("stages".into(), Value::Array(rows));
    out.insert("strongly_convex".into(), json!(convex));
    out.insert("decreasing".into(), json!(decreasing));
    out.insert("final_gap".into(), num(last.sup_gap));
    out.insert("max_final_gap".into(), num(limit));
    out.insert("pass".into(), json!(convex && decreasing && last.sup_gap < limit));
    Ok(out)
}

fn submersion(
    r: &Resolved,
    base_h: Option<&[Vec<f64>]>,
    pi: Option<&[Vec<f64>]>,
    base_norm: Option<&crate::scenario::NormSpec>,
    cfg: &SubmersionCheckConfig,
) -> Result<Map<String, Value>, CliError> {
    let f = need_norm(r)?;
    let parse = |e: finslerlab::Error| CliError::Parse(format!("submersion: {e}"));
    let (total, base, pi): (Box<dyn FinslerChart>, Box<dyn FinslerChart>, DMatrix<f64>) = match &r.space {
        Space::Homogeneous(dec) => {
            let hb = parse_vectors(base_h.unwrap_or_default());
            let bdec = Arc::new(ReductiveDecomposition::new(dec.algebra().clone(), &hb, None).map_err(parse)?);
            let pi = bdec.to_m() * dec.m_matrix();
            let bnorm = match base_norm {
                Some(spec) => build_norm(spec, &Space::Homogeneous(bdec.clone()))?,
                None => LinearSubmersion::new(pi.clone(), f.clone()).map_err(parse)?.induced(),
            };
            (
                Box::new(HomogeneousChart::new(dec.clone(), f.clone()).map_err(parse)?),
                Box::new(HomogeneousChart::new(bdec, bnorm).map_err(parse)?),
                pi,
            )
        }
        Space::Flat(_) => {
            let pi = parse_matrix(pi.unwrap_or_default(), "pi")?;
            let bnorm = match base_norm {
                Some(spec) => build_norm(spec, &Space::Flat(pi.nrows()))?,
                None => LinearSubmersion::new(pi.clone(), f.clone()).map_err(parse)?.induced(),
            };
            (Box::new(FlatChart::new(f.clone())), Box::new(FlatChart::new(bnorm)), pi)
        }
        Space::Explicit(_) => return Err(CliError::Parse("submersion needs a flat or homogeneous space".into())),
    };
    let rep = submersion_inequality_check(total.as_ref(), base.as_ref(), &pi, cfg).map_err(numeric)?;
    let rows: Vec<Value> = rep
        .samples
        .iter()
        .map(|s| json!({ "k_total": num(s.k_total), "k_base": num(s.k_base) }))
        .collect();
    let mut out = Map::new();
    out.insert("pi".into(), Value::Array(pi.row_iter().map(|r| vec_json(&r.transpose())).collect()));
    out.insert("samples".into(), json!(rep.samples.len()));
    out.insert("flags".into(), Value::Array(rows));
    out.insert("violations".into(), json!(rep.violations));
    out.insert("worst_gap".into(), num(rep.worst_gap));
    out.insert("induced_gap".into(), num(rep.induced_gap));
    out.insert("slack".into(), num(cfg.slack));
    out.insert("pass".into(), json!(rep.pass()));
    Ok(out)
}

fn fss_json(c: &FssCertificate) -> Value {
    json!({
        "basis": vecs_json(&c.basis),
        "h_part": vecs_json(&c.h_part),
        "m_part": vecs_json(&c.m_part),
        "toral": c.toral,
        "splits": c.splits,
        "m_part_dim": c.m_part_dim,
        "bracket_defect": num(c.bracket_defect),
        "split_defect": num(c.split_defect),
        "cartan": c.cartan,
        "source": match c.source {
            FssSource::CartanExtension => "cartan-extension",
            FssSource::CommutingPair => "commuting-pair",
        },
    })
}

fn rank_json(r: &RankCheck) -> Value {
    json!({
        "rank_g": r.rank_g,
        "rank_h": r.rank_h,
        "pass": r.pass,
        "enlargement": r.enlargement.as_ref().map(fss_json),
    })
}

fn classification_json(m: &ClassificationMatch) -> Value {
    let (g, h) = m.entry.presentations[m.presentation];
    json!({
        "family": m.entry.family,
        "family_label": m.entry.family_label,
        "space": m.entry.space,
        "presentation": [g, h],
        "n": m.n,
        "dimension": m.dimension,
        "dimension_formula": m.entry.dimension_formula(),
        "parity": match m.entry.parity() {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::DependsOnN => "depends on n",
        },
        "note": m.entry.note,
    })
}

/// `{fss, rank_check, classification, verdict}` for a space and/or labels.
pub fn obstruct_report(
    dec: Option<&ReductiveDecomposition>,
    labels: Option<(&str, &str)>,
    budget: usize,
) -> Result<Map<String, Value>, CliError> {
    let rep = positive_curvature_verdict(dec, labels, budget).map_err(|e| match e {
        finslerlab::Error::Label(m) => CliError::Parse(format!("label: {m}")),
        e => numeric(e),
    })?;
    let mut out = Map::new();
    out.insert("fss".into(), rep.fss.as_ref().map_or(Value::Null, fss_json));
    out.insert("rank_check".into(), rep.rank_check.as_ref().map_or(Value::Null, rank_json));
    out.insert("classification".into(), rep.classification.as_ref().map_or(Value::Null, classification_json));
    out.insert("verdict".into(), json!(rep.verdict.to_string()));
    out.insert("budget".into(), json!(rep.budget));
    Ok(out)
}

fn obstruct(r: &Resolved, labels: Option<(&str, &str)>, budget: usize, expect: Option<&str>) -> Result<Map<String, Value>, CliError> {
    let dec = r.space.decomposition().map(|d| d.as_ref());
    let mut out = obstruct_report(dec, labels, budget)?;
    let pass = expect.is_none_or(|e| out["verdict"] == e);
    if let Some(e) = expect {
        out.insert("expect".into(), json!(e));
    }
    out.insert("pass".into(), json!(pass));
    Ok(out)
}

fn fp(r: &Resolved, planes: usize, directions: usize, expect: Option<bool>, seed: u64) -> Result<Map<String, Value>, CliError> {
    let chart = r.chart()?;
    let rep = fp_condition_sample(chart.as_ref(), planes, directions, seed).map_err(numeric)?;
    let mut out = Map::new();
    out.insert("plane_max".into(), Value::Array(rep.plane_max.iter().map(|k| num(*k)).collect()));
    out.insert("verdict".into(), json!(rep.verdict));
    if let Some(e) = expect {
        out.insert("expect".into(), json!(e));
    }
    out.insert("pass".into(), json!(expect.is_none_or(|e| e == rep.verdict)));
    Ok(out)
}

fn converge(
    r: &Resolved,
    schedule: Option<Vec<f64>>,
    directions: usize,
    max_gap: Option<f64>,
    cfg: &Config,
) -> Result<Map<String, Value>, CliError> {
    let dec = need_decomposition(r)?;
    let f = need_norm(r)?;
    let mut scfg = SequenceConfig { directions, seed: cfg.seed, ..SequenceConfig::default() };
    if let Some(s) = schedule {
        scfg.schedule = s;
    }
    let rep = normal_to_delta_sequence(dec.clone(), f, &scfg).map_err(numeric)?;
    let opt = |x: Option<f64>| x.map_or(Value::Null, num);
    let rows: Vec<Value> = rep
        .stages
        .iter()
        .map(|s| {
            json!({
                "epsilon": num(s.epsilon),
                "sup_gap": num(s.sup_gap),
                "strong_convexity_min_eig": opt(s.strong_convexity_min_eig),
                "ad_invariance_defect": opt(s.ad_invariance_defect),
            })
        })
        .collect();
    let pass = rep.decreasing && max_gap.is_none_or(|g| rep.final_gap < g);
    let mut out = Map::new();
    out.insert("stages".into(), Value::Array(rows));
    out.insert("decreasing".into(), json!(rep.decreasing));
    out.insert("final_gap".into(), num(rep.final_gap));
    out.insert("max_final_gap".into(), opt(max_gap));
    out.insert("pass".into(), json!(pass));
    Ok(out)
}

