//! Scenario files: schema, validation and construction of the numerical objects.

use std::sync::Arc;

use finslerlab::geometry::{ExplicitChart, FinslerChart, FlatChart, HomogeneousChart};
use finslerlab::norms::{LpNorm, MaxNorm, NormHandle, Polyhedral, Quadratic, Randers};
use finslerlab::{presets, Field, MatrixLieAlgebra, ReductiveDecomposition};
use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub space: SpaceSpec,
    #[serde(default)]
    pub norm: Option<NormSpec>,
    #[serde(default)]
    pub labels: Option<Labels>,
    pub tasks: Vec<TaskSpec>,
    #[serde(default)]
    pub config: Config,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Labels {
    pub g: String,
    pub h: String,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_seed() -> u64 {
    finslerlab::util::DEFAULT_SEED
}
fn default_samples() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-5
}
fn default_budget() -> usize {
    finslerlab::obstruction::DEFAULT_BUDGET
}

impl Default for Config {
    fn default() -> Self {
        Self { seed: default_seed(), samples: default_samples(), tol: default_tol(), budget: default_budget() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    /// `u2-s3`, `su2`, `su2-s2`, `so3-s2`, `s3xs3`, `torus-<k>`.
    Builtin(String),
    Homogeneous(HomogeneousSpec),
    Flat { dim: usize },
    RoundSphere { dim: usize },
    RandersSphere { strength: f64 },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct HomogeneousSpec {
    pub algebra: AlgebraRef,
    #[serde(default)]
    pub h: Vec<Vec<f64>>,
    #[serde(default)]
    pub m: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum AlgebraRef {
    /// A built-in such as `su(2)+su(2)`.
    Name(String),
    Matrices(AlgebraSpec),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    pub label: String,
    pub ambient_size: usize,
    pub field: String,
    /// One entry per basis element: row-major `[re, im]` pairs.
    pub basis: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub inner_product: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NormSpec {
    Quadratic { matrix: Vec<Vec<f64>> },
    Randers { matrix: Vec<Vec<f64>>, drift: Vec<f64> },
    Maxnorm { dim: Option<usize> },
    Lp { p: f64, dim: Option<usize> },
    /// Euclidean norm in Q-orthonormal coordinates, or the standard one on a flat space.
    Normal,
    #[serde(alias = "f_epsilon")]
    FEpsilon { epsilon: f64 },
    /// Polyhedral norm `max_i <a_i, y>` from a table of functionals.
    CustomTable { functionals: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CurvatureExpect {
    pub min_k: Option<f64>,
    pub max_k: Option<f64>,
    pub max_abs_k: Option<f64>,
    pub max_spread: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskSpec {
    Curvature {
        flags: Option<usize>,
        /// Base point radius as a fraction of the chart radius (capped at 1).
        x_radius: Option<f64>,
        #[serde(default)]
        expect: CurvatureExpect,
    },
    Chebyshev {
        samples: Option<usize>,
        /// Compare against the closed form of the `u2-s3` example.
        #[serde(default)]
        closed_form: bool,
        certificates: Option<usize>,
        indicatrix_directions: Option<usize>,
        budget: Option<usize>,
        tol: Option<f64>,
    },
    Smoothing {
        schedule: Vec<f64>,
        points_per_axis: Option<usize>,
        max_final_gap: Option<f64>,
    },
    Submersion {
        /// `h` of the base `G/H'` for a homogeneous total space.
        base_h: Option<Vec<Vec<f64>>>,
        /// Linear map for a flat total space.
        pi: Option<Vec<Vec<f64>>>,
        /// Defaults to the induced norm.
        base_norm: Option<NormSpec>,
        flags: Option<usize>,
        slack: Option<f64>,
    },
    Obstruct {
        budget: Option<usize>,
        expect: Option<String>,
    },
    Fp {
        planes: Option<usize>,
        directions: Option<usize>,
        expect: Option<bool>,
    },
    Converge {
        schedule: Option<Vec<f64>>,
        directions: Option<usize>,
        max_final_gap: Option<f64>,
    },
}

impl TaskSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            TaskSpec::Curvature { .. } => "curvature",
            TaskSpec::Chebyshev { .. } => "chebyshev",
            TaskSpec::Smoothing { .. } => "smoothing",
            TaskSpec::Submersion { .. } => "submersion",
            TaskSpec::Obstruct { .. } => "obstruct",
            TaskSpec::Fp { .. } => "fp",
            TaskSpec::Converge { .. } => "converge",
        }
    }
}

/// Command-line values that replace the scenario config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub tol: Option<f64>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

pub fn parse(text: &str) -> Result<Scenario, CliError> {
    let s: Scenario = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    s.validate()?;
    Ok(s)
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(bad(format!("{what}: rows of unequal length")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn vectors(rows: &[Vec<f64>]) -> Vec<DVector<f64>> {
    rows.iter().map(|r| DVector::from_row_slice(r)).collect()
}

fn positive(x: f64, what: &str) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{what} must be positive, got {x}")))
    }
}

fn positive_count(x: Option<usize>, what: &str) -> Result<(), CliError> {
    match x {
        Some(0) => Err(bad(format!("{what} must be positive"))),
        _ => Ok(()),
    }
}

impl Scenario {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(s) = o.seed {
            self.config.seed = s;
        }
        if let Some(b) = o.budget {
            self.config.budget = b;
        }
        if let Some(t) = o.tol {
            self.config.tol = t;
        }
        self.validate()
    }

    /// Schema version, positive config values, and task prerequisites.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!("unsupported schema_version {}", self.schema_version)));
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(bad(format!("name '{}' must be non-empty [A-Za-z0-9_-]", self.name)));
        }
        positive(self.config.tol, "config.tol")?;
        positive_count(Some(self.config.samples), "config.samples")?;
        positive_count(Some(self.config.budget), "config.budget")?;
        if self.tasks.is_empty() {
            return Err(bad("scenario has no tasks"));
        }
        let homogeneous = matches!(self.space, SpaceSpec::Builtin(_) | SpaceSpec::Homogeneous(_));
        let explicit = matches!(self.space, SpaceSpec::RoundSphere { .. } | SpaceSpec::RandersSphere { .. });
        if explicit && self.norm.is_some() {
            return Err(bad("explicit sphere charts carry their own metric; remove 'norm'"));
        }
        if matches!(self.space, SpaceSpec::Flat { .. }) && self.norm.is_none() {
            return Err(bad("a flat space needs a 'norm'"));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            let at = |msg: &str| bad(format!("task {i} ({}): {msg}", t.kind()));
            match t {
                TaskSpec::Curvature { flags, x_radius, .. } => {
                    positive_count(*flags, "flags")?;
                    if let Some(r) = x_radius {
                        if !(0.0..=1.0).contains(r) {
                            return Err(at("x_radius must lie in [0, 1]"));
                        }
                    }
                }
                TaskSpec::Chebyshev { samples, indicatrix_directions, budget, tol, .. } => {
                    if !homogeneous {
                        return Err(at("requires a homogeneous space"));
                    }
                    positive_count(*samples, "samples")?;
                    positive_count(*budget, "budget")?;
                    if let Some(d) = indicatrix_directions {
                        positive_count(Some(*d), "indicatrix_directions")?;
                    }
                    if let Some(t) = tol {
                        positive(*t, "tol")?;
                    }
                }
                TaskSpec::Smoothing { schedule, points_per_axis, max_final_gap } => {
                    if homogeneous || explicit {
                        return Err(at("smooths a norm on a flat space"));
                    }
                    if schedule.is_empty() {
                        return Err(at("empty schedule"));
                    }
                    for e in schedule {
                        positive(*e, "schedule entry")?;
                    }
                    positive_count(*points_per_axis, "points_per_axis")?;
                    if let Some(g) = max_final_gap {
                        positive(*g, "max_final_gap")?;
                    }
                }
                TaskSpec::Submersion { base_h, pi, flags, slack, .. } => {
                    positive_count(*flags, "flags")?;
                    if let Some(s) = slack {
                        positive(*s, "slack")?;
                    }
                    match (homogeneous, base_h.is_some(), pi.is_some()) {
                        (true, true, false) | (false, false, true) => {}
                        (true, _, _) => return Err(at("a homogeneous space needs 'base_h' and no 'pi'")),
                        (false, _, _) => return Err(at("a flat space needs 'pi' and no 'base_h'")),
                    }
                    if explicit {
                        return Err(at("not available on explicit sphere charts"));
                    }
                }
                TaskSpec::Obstruct { budget, expect } => {
                    if !homogeneous && self.labels.is_none() {
                        return Err(at("requires a homogeneous space or labels"));
                    }
                    positive_count(*budget, "budget")?;
                    if let Some(e) = expect {
                        if !["yes", "no", "inconclusive at budget"].contains(&e.as_str()) {
                            return Err(at("expect must be 'yes', 'no' or 'inconclusive at budget'"));
                        }
                    }
                }
                TaskSpec::Fp { planes, directions, .. } => {
                    positive_count(*planes, "planes")?;
                    positive_count(*directions, "directions")?;
                }
                TaskSpec::Converge { schedule, max_final_gap, .. } => {
                    if !homogeneous {
                        return Err(at("requires a homogeneous space with a delta-homogeneous norm"));
                    }
                    if let Some(s) = schedule {
                        if s.is_empty() {
                            return Err(at("empty schedule"));
                        }
                        for e in s {
                            positive(*e, "schedule entry")?;
                        }
                    }
                    if let Some(g) = max_final_gap {
                        positive(*g, "max_final_gap")?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn builtin_space(name: &str) -> Result<Arc<ReductiveDecomposition>, CliError> {
    let r = match name {
        "u2-s3" => presets::u2_s3(),
        "su2" => presets::su2_biinvariant(),
        "su2-s2" => presets::su2_s2(),
        "so3-s2" => presets::so3_s2(),
        "s3xs3" => presets::s3xs3(),
        _ => match name.strip_prefix("torus-").and_then(|k| k.parse::<usize>().ok()) {
            Some(k) if k > 0 => presets::torus(k),
            _ => return Err(bad(format!("unknown builtin space '{name}'"))),
        },
    };
    r.map_err(|e| bad(format!("builtin space '{name}': {e}")))
}

fn algebra(a: &AlgebraRef) -> Result<MatrixLieAlgebra, CliError> {
    match a {
        AlgebraRef::Name(n) => MatrixLieAlgebra::builtin(n).map_err(|e| bad(e.to_string())),
        AlgebraRef::Matrices(s) => {
            let field = match s.field.as_str() {
                "C" => Field::Complex,
                "R" => Field::Real,
                f => return Err(bad(format!("field must be \"C\" or \"R\", got \"{f}\""))),
            };
            let n = s.ambient_size;
            let mut basis = Vec::with_capacity(s.basis.len());
            for (k, b) in s.basis.iter().enumerate() {
                if b.len() != n * n {
                    return Err(bad(format!("basis element {k} has {} entries, expected {}", b.len(), n * n)));
                }
                basis.push(DMatrix::from_fn(n, n, |i, j| Complex::new(b[i * n + j][0], b[i * n + j][1])));
            }
            let q = s.inner_product.as_deref().map(|q| matrix(q, "inner_product")).transpose()?;
            MatrixLieAlgebra::from_basis(s.label.clone(), field, n, basis, q).map_err(|e| bad(e.to_string()))
        }
    }
}

/// Either a decomposition `g = h + m` or a chart-only space.
pub enum Space {
    Homogeneous(Arc<ReductiveDecomposition>),
    Flat(usize),
    Explicit(ExplicitChart),
}

impl Space {
    pub fn decomposition(&self) -> Option<&Arc<ReductiveDecomposition>> {
        match self {
            Space::Homogeneous(d) => Some(d),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Space::Homogeneous(d) => d.dim_m(),
            Space::Flat(n) => *n,
            Space::Explicit(c) => c.dim(),
        }
    }
}

pub fn build_space(spec: &SpaceSpec) -> Result<Space, CliError> {
    Ok(match spec {
        SpaceSpec::Builtin(name) => Space::Homogeneous(builtin_space(name)?),
        SpaceSpec::Homogeneous(h) => {
            let g = Arc::new(algebra(&h.algebra)?);
            let hb = vectors(&h.h);
            let mb = h.m.as_deref().map(vectors);
            let d = ReductiveDecomposition::new(g, &hb, mb.as_deref()).map_err(|e| bad(e.to_string()))?;
            Space::Homogeneous(Arc::new(d))
        }
        SpaceSpec::Flat { dim } if *dim > 0 => Space::Flat(*dim),
        SpaceSpec::Flat { .. } => return Err(bad("flat space of dimension 0")),
        SpaceSpec::RoundSphere { dim } if *dim > 0 => Space::Explicit(ExplicitChart::round_sphere(*dim)),
        SpaceSpec::RoundSphere { .. } => return Err(bad("sphere of dimension 0")),
        SpaceSpec::RandersSphere { strength } if (0.0..1.0).contains(strength) => {
            Space::Explicit(ExplicitChart::randers_sphere(*strength))
        }
        SpaceSpec::RandersSphere { strength } => return Err(bad(format!("Randers strength {strength} outside [0, 1)"))),
    })
}

pub fn build_norm(spec: &NormSpec, space: &Space) -> Result<NormHandle, CliError> {
    let dim = space.dim();
    let wrap = |e: finslerlab::Error| bad(format!("norm: {e}"));
    let h = match spec {
        NormSpec::Quadratic { matrix: m } => NormHandle::new(Quadratic::new(matrix(m, "matrix")?).map_err(wrap)?),
        NormSpec::Randers { matrix: m, drift } => {
            NormHandle::new(Randers::new(matrix(m, "matrix")?, DVector::from_row_slice(drift)).map_err(wrap)?)
        }
        NormSpec::Maxnorm { dim: d } => NormHandle::new(MaxNorm::new(d.unwrap_or(dim))),
        NormSpec::Lp { p, dim: d } => NormHandle::new(LpNorm::new(d.unwrap_or(dim), *p).map_err(wrap)?),
        NormSpec::Normal => match space {
            Space::Homogeneous(d) => presets::normal_norm(d).map_err(wrap)?,
            _ => NormHandle::new(Quadratic::euclidean(dim)),
        },
        NormSpec::FEpsilon { epsilon } => presets::u2_f_epsilon(*epsilon).map_err(wrap)?,
        NormSpec::CustomTable { functionals } => NormHandle::new(Polyhedral::new(vectors(functionals)).map_err(wrap)?),
    };
    if h.dim() != dim {
        return Err(bad(format!("norm has dimension {} but the space has dimension {dim}", h.dim())));
    }
    Ok(h)
}

/// A space together with its resolved norm.
pub struct Resolved {
    pub space: Space,
    pub norm: Option<NormHandle>,
}

impl Resolved {
    pub fn new(s: &Scenario) -> Result<Self, CliError> {
        let space = build_space(&s.space)?;
        let norm = match (&s.norm, &space) {
            (Some(n), _) => Some(build_norm(n, &space)?),
            (None, Space::Homogeneous(_)) => Some(build_norm(&NormSpec::Normal, &space)?),
            (None, _) => None,
        };
        Ok(Self { space, norm })
    }

    pub fn chart(&self) -> Result<Box<dyn FinslerChart>, CliError> {
        Ok(match (&self.space, &self.norm) {
            (Space::Homogeneous(d), Some(n)) => Box::new(
                HomogeneousChart::new(d.clone(), n.clone()).map_err(|e| bad(format!("chart: {e}")))?,
            ),
            (Space::Flat(_), Some(n)) => Box::new(FlatChart::new(n.clone())),
            (Space::Explicit(c), _) => Box::new(c.clone()),
            _ => return Err(bad("space has no norm")),
        })
    }
}

pub fn parse_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    matrix(rows, what)
}

pub fn parse_vectors(rows: &[Vec<f64>]) -> Vec<DVector<f64>> {
    vectors(rows)
}
