use std::time::{Duration, Instant};

use finslerlab_cli::scenario::{self, TaskSpec};
use finslerlab_cli::{builtin, load, run, BUILTINS};
use serde_json::Value;

fn only_task(name: &str, kind: &str) -> finslerlab_cli::Scenario {
    let mut s = load(name).unwrap();
    s.tasks.retain(|t| t.kind() == kind);
    assert_eq!(s.tasks.len(), 1, "{name} has one {kind} task");
    s
}

#[test]
fn builtin_sources_parse_and_name_themselves() {
    for b in &BUILTINS {
        let s = scenario::parse(b.source).unwrap();
        assert_eq!(s.name, b.name);
    }
    assert!(builtin("torus").is_some());
    assert!(builtin("klein-bottle").is_none());
}

#[test]
fn u2_s3_chebyshev_matches_the_closed_form() {
    let s = only_task("u2-s3", "chebyshev");
    let r = run(&s).unwrap();
    let t = &r["tasks"][0];
    assert_eq!(t["pass"], true);
    assert!(t["max_closed_form_error"].as_f64().unwrap() <= 1e-5);
    for row in t["samples"].as_array().unwrap() {
        let err = (row["value"].as_f64().unwrap() - row["closed_form"].as_f64().unwrap()).abs();
        assert!(err <= 1e-5, "{row}");
    }
}

#[test]
fn torus_obstruct_has_a_witness() {
    let r = run(&only_task("torus", "obstruct")).unwrap();
    let t = &r["tasks"][0];
    assert_eq!(t["verdict"], "no");
    assert_eq!(t["fss"]["m_part_dim"], 2);
    assert_eq!(t["fss"]["toral"], true);
}

#[test]
fn su2_biinvariant_curvature_is_constant_and_positive() {
    let r = run(&only_task("su2-biinv", "curvature")).unwrap();
    let t = &r["tasks"][0];
    let ks: Vec<f64> = t["flags"].as_array().unwrap().iter().map(|f| f["K"].as_f64().unwrap()).collect();
    assert_eq!(ks.len(), 100);
    let lo = ks.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(lo > 0.0);
    assert!(hi - lo <= 1e-3);
}

#[test]
fn every_builtin_passes_within_a_minute() {
    for b in &BUILTINS {
        let s = load(b.name).unwrap();
        let t = Instant::now();
        let r = run(&s).unwrap();
        let dt = t.elapsed();
        assert_eq!(r["pass"], true, "{}: {}", b.name, summary_of(&r));
        assert!(dt < Duration::from_secs(60), "{} took {dt:?}", b.name);
    }
}

fn summary_of(r: &Value) -> String {
    finslerlab_cli::summary(r)
}

#[test]
fn overrides_are_validated() {
    let mut s = load("torus").unwrap();
    let o = finslerlab_cli::Overrides { tol: Some(0.0), ..Default::default() };
    assert!(s.apply(&o).is_err());
    let mut s = load("torus").unwrap();
    s.apply(&finslerlab_cli::Overrides { seed: Some(9), budget: Some(16), ..Default::default() }).unwrap();
    assert_eq!((s.config.seed, s.config.budget), (9, 16));
}

#[test]
fn user_algebras_from_matrices() {
    // u(1) + u(1) as diagonal imaginary matrices: a flat 2-torus
    let text = r#"{
      "schema_version": 1,
      "name": "diag",
      "space": { "homogeneous": {
        "algebra": { "label": "t2", "ambient_size": 2, "field": "C",
          "basis": [ [[0,1],[0,0],[0,0],[0,0]], [[0,0],[0,0],[0,0],[0,1]] ] },
        "h": [] } },
      "tasks": [ { "kind": "obstruct", "expect": "no" }, { "kind": "curvature", "flags": 10, "expect": { "max_abs_k": 1e-6 } } ]
    }"#;
    let s = scenario::parse(text).unwrap();
    let r = run(&s).unwrap();
    assert_eq!(r["pass"], true, "{r}");

    let broken = text.replace("\"field\": \"C\"", "\"field\": \"H\"");
    let s = scenario::parse(&broken).unwrap();
    assert!(matches!(run(&s), Err(finslerlab_cli::CliError::Parse(_))));
}

#[test]
fn task_kinds_round_trip() {
    let s = load("u2-s3").unwrap();
    let kinds: Vec<&str> = s.tasks.iter().map(TaskSpec::kind).collect();
    assert_eq!(kinds, ["chebyshev", "curvature", "obstruct", "converge"]);
    let back = serde_json::to_string(&s).unwrap();
    assert_eq!(scenario::parse(&back).unwrap().tasks.len(), 4);
}
