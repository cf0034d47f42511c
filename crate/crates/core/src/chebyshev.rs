//! Chebyshev norms `max_g F(pr_m(Ad(g) w))` on the Lie algebra, delta-vector
//! search and certificates, and the ball-projection check.

use std::collections::BTreeSet;
use std::sync::Arc;

use dashmap::DashMap;
use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::lie::{GroupSampler, ReductiveDecomposition};
use crate::norms::{Minkowski, NormHandle, Smoothness};
use crate::submersion::{FiberConfig, LinearSubmersion};
use crate::util;

/// Optimizer settings for the orbit maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevConfig {
    /// Pattern searches started from the best coarse samples of each dyadic
    /// prefix of the sample sequence.
    pub restarts: usize,
    /// Number of coarse group samples.
    pub budget: usize,
    /// Step halvings of the pattern search; the first step is a quarter of
    /// the sampling radius.
    pub levels: usize,
    pub seed: u64,
}

impl Default for ChebyshevConfig {
    fn default() -> Self {
        Self { restarts: 16, budget: 256, levels: 30, seed: util::DEFAULT_SEED }
    }
}

/// Maximum of the orbit function with the point where it is attained.
#[derive(Clone, Debug)]
pub struct ChebyshevValue {
    pub value: f64,
    /// `Ad(g*) w`.
    pub orbit_point: DVector<f64>,
    /// `Ad(g*)`.
    pub adjoint: DMatrix<f64>,
}

const MEMO_CAP: usize = 100_000;

#[derive(Debug)]
struct Inner {
    decomp: Arc<ReductiveDecomposition>,
    base: NormHandle,
    config: ChebyshevConfig,
    sampler: GroupSampler,
    coarse: Vec<DMatrix<f64>>,
    steps: Vec<Vec<DMatrix<f64>>>,
    memo: DashMap<Vec<u64>, f64>,
}

/// The bi-invariant singular norm `F~(w) = max_g F(pr_m(Ad(g) w))`.
#[derive(Clone, Debug)]
pub struct ChebyshevNorm(Arc<Inner>);

struct Search {
    value: f64,
    point: DVector<f64>,
    start: Option<usize>,
    moves: Vec<(usize, usize)>,
}

impl ChebyshevNorm {
    pub fn new(decomp: Arc<ReductiveDecomposition>, base: NormHandle) -> Result<Self> {
        Self::with_config(decomp, base, ChebyshevConfig::default())
    }

    pub fn with_config(decomp: Arc<ReductiveDecomposition>, base: NormHandle, config: ChebyshevConfig) -> Result<Self> {
        check_dim(decomp.dim_m(), base.dim())?;
        let alg = decomp.algebra().clone();
        let sampler = GroupSampler::new(alg.clone())
            .map_err(|e| Error::Algebra(format!("Chebyshev norm needs a compact algebra: {e}")))?;
        let mut rng = util::rng(config.seed);
        let coarse = (0..config.budget).map(|_| sampler.sample(&mut rng)).collect();
        let der = sampler.derived_basis();
        let mut steps = Vec::with_capacity(config.levels);
        let mut s = 0.25 * sampler.radius();
        for _ in 0..config.levels {
            let mut level = Vec::with_capacity(2 * der.ncols());
            for k in 0..der.ncols() {
                let ad = alg.ad(&der.column(k).into_owned())?;
                level.push((&ad * s).exp());
                level.push((&ad * -s).exp());
            }
            steps.push(level);
            s *= 0.5;
        }
        Ok(Self(Arc::new(Inner { decomp, base, config, sampler, coarse, steps, memo: DashMap::new() })))
    }

    /// Same decomposition and base norm with other optimizer settings.
    pub fn reconfigured(&self, config: ChebyshevConfig) -> Result<Self> {
        Self::with_config(self.0.decomp.clone(), self.0.base.clone(), config)
    }

    pub fn decomposition(&self) -> &Arc<ReductiveDecomposition> {
        &self.0.decomp
    }

    pub fn base_norm(&self) -> &NormHandle {
        &self.0.base
    }

    pub fn config(&self) -> &ChebyshevConfig {
        &self.0.config
    }

    pub fn sampler(&self) -> &GroupSampler {
        &self.0.sampler
    }

    pub fn handle(&self) -> NormHandle {
        NormHandle::new(self.clone())
    }

    /// `F(pr_m w)`.
    pub fn projected(&self, w: &DVector<f64>) -> f64 {
        self.0.base.eval(&(self.0.decomp.to_m() * w))
    }

    fn start_indices(&self, values: &[f64]) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let r = self.0.config.restarts;
        let mut len = values.len();
        while len >= 1 && r > 0 {
            let mut idx: Vec<usize> = (0..len).collect();
            idx.sort_by(|a, b| values[*b].total_cmp(&values[*a]).then(a.cmp(b)));
            out.extend(idx.into_iter().take(r));
            len /= 2;
        }
        out
    }

    fn ascend(&self, x0: DVector<f64>, phi: &dyn Fn(&DVector<f64>) -> f64) -> (DVector<f64>, f64, Vec<(usize, usize)>) {
        let mut x = x0;
        let mut f = phi(&x);
        let mut cand = x.clone();
        let mut moves = Vec::new();
        for (li, level) in self.0.steps.iter().enumerate() {
            for _ in 0..10_000 {
                let mut improved = false;
                for (k, t) in level.iter().enumerate() {
                    cand.gemv(1.0, t, &x, 0.0);
                    let fc = phi(&cand);
                    if fc > f {
                        std::mem::swap(&mut x, &mut cand);
                        f = fc;
                        improved = true;
                        moves.push((li, k));
                    }
                }
                if !improved {
                    break;
                }
            }
        }
        (x, f, moves)
    }

    fn search(&self, w: &DVector<f64>) -> Search {
        let inner = &self.0;
        let to_m = inner.decomp.to_m();
        let phi = |x: &DVector<f64>| inner.base.eval(&(to_m * x));
        let values: Vec<f64> = inner.coarse.iter().map(|a| phi(&(a * w))).collect();
        let mut starts: Vec<Option<usize>> = vec![None];
        starts.extend(self.start_indices(&values).into_iter().map(Some));
        let mut best: Option<Search> = None;
        for s in starts {
            let x0 = match s {
                None => w.clone(),
                Some(i) => &inner.coarse[i] * w,
            };
            let (point, value, moves) = self.ascend(x0, &phi);
            if best.as_ref().is_none_or(|b| value > b.value) {
                best = Some(Search { value, point, start: s, moves });
            }
        }
        best.expect("identity start is always present")
    }

    /// Orbit maximum with its maximizer; not memoized.
    pub fn evaluate_detailed(&self, w: &DVector<f64>) -> Result<ChebyshevValue> {
        check_dim(self.0.decomp.algebra().dim(), w.len())?;
        let s = self.search(w);
        let d = w.len();
        let mut adj = match s.start {
            None => DMatrix::identity(d, d),
            Some(i) => self.0.coarse[i].clone(),
        };
        for (l, k) in &s.moves {
            adj = &self.0.steps[*l][*k] * adj;
        }
        Ok(ChebyshevValue { value: s.value, orbit_point: s.point, adjoint: adj })
    }

    /// `F~(w)`, memoized on the exact unit ray of `w`.
    pub fn evaluate(&self, w: &DVector<f64>) -> Result<f64> {
        check_dim(self.0.decomp.algebra().dim(), w.len())?;
        let n = w.norm();
        if n == 0.0 {
            return Ok(0.0);
        }
        let ray = w / n;
        let key: Vec<u64> = ray.iter().map(|x| x.to_bits()).collect();
        if let Some(v) = self.0.memo.get(&key) {
            return Ok(n * *v);
        }
        let v = self.search(&ray).value;
        if self.0.memo.len() >= MEMO_CAP {
            self.0.memo.clear();
        }
        self.0.memo.insert(key, v);
        Ok(n * v)
    }

    pub fn cache_len(&self) -> usize {
        self.0.memo.len()
    }
}

impl Minkowski for ChebyshevNorm {
    fn dim(&self) -> usize {
        self.0.decomp.algebra().dim()
    }
    fn eval(&self, y: &DVector<f64>) -> f64 {
        self.evaluate(y).unwrap_or(f64::NAN)
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Singular
    }
    fn describe(&self) -> String {
        format!("Chebyshev norm of {} on {}", self.0.base.describe(), self.0.decomp.algebra().label())
    }
}

pub fn chebyshev_evaluate(c: &ChebyshevNorm, w: &DVector<f64>) -> Result<ChebyshevValue> {
    c.evaluate_detailed(w)
}

/// A lift `u~` of `u` with `F~(u~) = F(u)`.
#[derive(Clone, Debug)]
pub struct DeltaVector {
    pub lift: DVector<f64>,
    /// `u` in m-coordinates.
    pub base: DVector<f64>,
    pub value: f64,
    pub base_value: f64,
    /// `F~(u~) - F(u)` as seen by the search.
    pub gap: f64,
    /// Independent re-check, see [`verify_delta_vector`].
    pub certificate: f64,
}

/// Gap between the sampled orbit maximum and the value at the identity.
#[derive(Clone, Debug)]
pub struct DeltaCertificate {
    pub gap: f64,
    pub maximizer: ChebyshevValue,
    pub pass: bool,
}

pub const DELTA_TOL: f64 = 1e-5;

/// Minimizes `F~` over the fiber `u + h`.
pub fn delta_vector_search(c: &ChebyshevNorm, u: &DVector<f64>) -> Result<DeltaVector> {
    let dec = c.decomposition();
    check_dim(dec.dim_m(), u.len())?;
    let fu = c.base_norm().evaluate(u)?;
    let cfg = FiberConfig { restarts: 4, tol: 1e-12, line_tol: 1e-10, ..FiberConfig::default() };
    let sub = LinearSubmersion::with_config(dec.to_m().clone(), c.handle(), cfg)?;
    let m = sub.fiber_minimum_bounded(u, Some(fu))?;
    let gap = m.value - fu;
    if gap > 1e-4 * fu.max(1.0) {
        return Err(Error::Optimizer(format!("delta-vector gap {gap:e} did not close")));
    }
    let mut check_cfg = c.config().clone();
    check_cfg.budget *= 2;
    check_cfg.seed = check_cfg.seed.wrapping_add(1);
    let cert = verify_delta_vector(c, &m.point, check_cfg.budget, check_cfg.seed)?;
    Ok(DeltaVector { lift: m.point, base: u.clone(), value: m.value, base_value: fu, gap, certificate: cert.gap })
}

/// `max_g F(pr_m(Ad(g) u~)) - F(pr_m u~)` over a fresh set of samples.
pub fn verify_delta_vector(c: &ChebyshevNorm, lift: &DVector<f64>, budget: usize, seed: u64) -> Result<DeltaCertificate> {
    let cfg = ChebyshevConfig { budget, seed, ..c.config().clone() };
    let fresh = c.reconfigured(cfg)?;
    let best = fresh.evaluate_detailed(lift)?;
    let gap = best.value - c.projected(lift);
    Ok(DeltaCertificate { gap, pass: gap <= DELTA_TOL, maximizer: best })
}

/// Sampled comparison of `pr_m({F~ <= 1})` with `{F <= 1}`.
#[derive(Clone, Debug)]
pub struct BallProjectionReport {
    /// `max F(pr_m w) - 1` over sampled `F~(w) = 1`.
    pub forward_excess: f64,
    /// `max |min_{fiber} F~ - 1|` over sampled `F(u) = 1`.
    pub backward_gap: f64,
    pub samples: usize,
    pub pass: bool,
}

pub fn chebyshev_submersion_check(c: &ChebyshevNorm, samples: usize, seed: u64) -> Result<BallProjectionReport> {
    let dec = c.decomposition();
    let d = dec.algebra().dim();
    let mut rng = util::rng(seed);
    let (mut fwd, mut bwd) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..samples {
        let w = util::random_unit(d, &mut rng);
        let w = &w / c.evaluate(&w)?;
        fwd = fwd.max(c.projected(&w) - 1.0);
        let u = util::random_unit(dec.dim_m(), &mut rng);
        let u = &u / c.base_norm().evaluate(&u)?;
        let dv = delta_vector_search(c, &u)?;
        bwd = bwd.max((dv.value - 1.0).abs());
    }
    Ok(BallProjectionReport { forward_excess: fwd, backward_gap: bwd, samples, pass: fwd <= DELTA_TOL && bwd <= DELTA_TOL })
}

/// A point where one-sided directional derivatives disagree.
#[derive(Clone, Debug)]
pub struct Crease {
    pub point: DVector<f64>,
    pub direction: DVector<f64>,
    pub jump: f64,
}

#[derive(Clone, Debug)]
pub struct IndicatrixReport {
    /// Sampled points with `F~ = 1`.
    pub points: Vec<DVector<f64>>,
    /// `min (1 - F(pr_m p))` over the sampled indicatrix.
    pub projection_slack: f64,
    /// `min (1 - F~(q))` over the supplied candidate points.
    pub candidate_slack: f64,
    pub creases: Vec<Crease>,
}

pub const CREASE_JUMP: f64 = 1e-3;

/// Samples the indicatrix along `directions` rays, checks that it projects
/// into the unit ball of `F`, evaluates `F~` at `candidates`, and probes the
/// rays through both sets for jumps of one-sided derivatives along the axes.
pub fn indicatrix_smoothness_probe(c: &ChebyshevNorm, directions: usize, candidates: &[DVector<f64>]) -> Result<IndicatrixReport> {
    let d = c.dim();
    if d < 2 {
        return Err(Error::Dimension { expected: 2, got: d });
    }
    let mut points = Vec::with_capacity(directions);
    let mut slack = f64::INFINITY;
    for dir in util::sphere_directions(d, directions) {
        let p = &dir / c.evaluate(&dir)?;
        slack = slack.min(1.0 - c.projected(&p));
        points.push(p);
    }
    let mut cand_slack = f64::INFINITY;
    let mut probe_at: Vec<DVector<f64>> = points.clone();
    for q in candidates {
        check_dim(d, q.len())?;
        let fq = c.evaluate(q)?;
        cand_slack = cand_slack.min(1.0 - fq);
        probe_at.push(q / fq);
    }
    let h = 1e-5;
    let mut creases = Vec::new();
    for p in &probe_at {
        let f0 = c.evaluate(p)?;
        for k in 0..d {
            let e = util::unit(d, k);
            let fp = c.evaluate(&(p + &e * h))?;
            let fm = c.evaluate(&(p - &e * h))?;
            let jump = ((fp - f0) / h - (f0 - fm) / h).abs();
            if jump > CREASE_JUMP {
                creases.push(Crease { point: p.clone(), direction: e, jump });
            }
        }
    }
    Ok(IndicatrixReport { points, projection_slack: slack, candidate_slack: cand_slack, creases })
}
