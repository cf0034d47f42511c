//! Linear Finsler submersions: induced norms, horizontal lifts, pushdown to
//! coarser homogeneous spaces and the flag curvature comparison.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{self, FinslerChart, FlagTriple};
use crate::lie::ReductiveDecomposition;
use crate::norms::{FnNorm, NormHandle, Smoothness};
use crate::util;

/// Fiber minimization settings.
#[derive(Clone, Debug)]
pub struct FiberConfig {
    /// Random restarts of the derivative-free descent (singular norms only).
    pub restarts: usize,
    /// Stop when a sweep improves the value by less than `tol * value`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Line-search bracket tolerance.
    pub line_tol: f64,
    /// Skip the Newton path for smooth norms.
    pub derivative_free: bool,
    pub seed: u64,
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self { restarts: 8, tol: 1e-10, max_sweeps: 10_000, line_tol: 1e-11, derivative_free: false, seed: util::DEFAULT_SEED }
    }
}

/// Minimizer of the source norm over one fiber.
#[derive(Clone, Debug)]
pub struct FiberMinimum {
    pub point: DVector<f64>,
    pub value: f64,
    pub sweeps: usize,
}

/// A horizontal lift with the width of the near-minimal set around it.
#[derive(Clone, Debug)]
pub struct HorizontalLift {
    pub lift: DVector<f64>,
    pub value: f64,
    /// Two minimizers further apart than 1e-6 were found.
    pub non_unique: bool,
    /// Diameter estimate of the relative 1e-12 sublevel set in the fiber.
    pub extent: f64,
}

/// Surjective linear map `pi: V -> W` with a norm on `V`.
#[derive(Clone, Debug)]
pub struct LinearSubmersion {
    pi: DMatrix<f64>,
    source: NormHandle,
    pinv: DMatrix<f64>,
    kernel: DMatrix<f64>,
    config: FiberConfig,
}

impl LinearSubmersion {
    pub fn new(pi: DMatrix<f64>, source: NormHandle) -> Result<Self> {
        Self::with_config(pi, source, FiberConfig::default())
    }

    pub fn with_config(pi: DMatrix<f64>, source: NormHandle, config: FiberConfig) -> Result<Self> {
        check_dim(source.dim(), pi.ncols())?;
        if pi.nrows() == 0 {
            return Err(Error::Decomposition("target space is zero-dimensional".into()));
        }
        if pi.nrows() > pi.ncols() || util::inverse_condition(&(&pi * pi.transpose())) < 1e-12 {
            return Err(Error::Decomposition("projection is not surjective".into()));
        }
        let ppt = (&pi * pi.transpose()).try_inverse().ok_or(Error::Numeric(format!("singular {}", "pi pi^T")))?;
        let pinv = pi.transpose() * ppt;
        let kernel = util::null_space(&pi, 1e-10);
        Ok(Self { pi, source, pinv, kernel, config })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.pi
    }

    pub fn source_norm(&self) -> &NormHandle {
        &self.source
    }

    pub fn source_dim(&self) -> usize {
        self.pi.ncols()
    }

    pub fn target_dim(&self) -> usize {
        self.pi.nrows()
    }

    /// Orthonormal kernel basis (columns).
    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn config(&self) -> &FiberConfig {
        &self.config
    }

    /// Least-norm point of the fiber over `u`.
    pub fn fiber_point(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.target_dim(), u.len())?;
        Ok(&self.pinv * u)
    }

    /// Minimizes the source norm over `pi^{-1}(u)`. Stops early once the value
    /// is within `tol` of `lower_bound`.
    pub fn fiber_minimum_bounded(&self, u: &DVector<f64>, lower_bound: Option<f64>) -> Result<FiberMinimum> {
        let w0 = self.fiber_point(u)?;
        let k = self.kernel.ncols();
        if k == 0 {
            let value = self.source.evaluate(&w0)?;
            return Ok(FiberMinimum { point: w0, value, sweeps: 0 });
        }
        if u.norm() == 0.0 {
            return Ok(FiberMinimum { point: DVector::zeros(self.source_dim()), value: 0.0, sweeps: 0 });
        }
        if self.source.smoothness() == Smoothness::Smooth && !self.config.derivative_free {
            if let Ok(m) = self.newton(&w0) {
                return Ok(m);
            }
        }
        self.descend(&w0, lower_bound)
    }

    pub fn fiber_minimum(&self, u: &DVector<f64>) -> Result<FiberMinimum> {
        self.fiber_minimum_bounded(u, None)
    }

    fn newton(&self, w0: &DVector<f64>) -> Result<FiberMinimum> {
        let kk = &self.kernel;
        let mut w = w0.clone();
        let mut f = self.source.evaluate(&w)?;
        for it in 0..100 {
            let grad = kk.transpose() * self.source.grad_sq(&w)? * 0.5;
            let hess = kk.transpose() * self.source.fundamental_tensor(&w)? * kk;
            let step = hess.cholesky().ok_or(Error::Numeric(format!("singular {}", "fiber Hessian")))?.solve(&grad);
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = &w - kk * &step * lambda;
                let fc = self.source.evaluate(&cand)?;
                if fc <= f {
                    w = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted || step.norm() * lambda <= 1e-14 * (1.0 + w.norm()) {
                let gnorm = grad.norm();
                if gnorm <= 1e-8 * f.max(1e-300) {
                    return Ok(FiberMinimum { point: w, value: f, sweeps: it + 1 });
                }
                if !accepted {
                    return Err(Error::Optimizer(format!("Newton stalled with gradient {gnorm:e}")));
                }
            }
        }
        Err(Error::Optimizer("Newton iteration limit".into()))
    }

    fn descend(&self, w0: &DVector<f64>, lower_bound: Option<f64>) -> Result<FiberMinimum> {
        let k = self.kernel.ncols();
        let cfg = &self.config;
        let scale = w0.norm().max(1e-12);
        let phi = |z: &DVector<f64>| self.source.evaluate(&(w0 + &self.kernel * z));
        let mut rng = util::rng(cfg.seed);
        let mut best: Option<(DVector<f64>, f64, usize)> = None;
        let done = |f: f64| lower_bound.is_some_and(|lb| f - lb <= cfg.tol * lb.abs().max(1e-300));
        for restart in 0..cfg.restarts.max(1) {
            let mut z = if restart == 0 {
                DVector::zeros(k)
            } else {
                util::random_in_ball(k, scale, &mut rng)
            };
            let mut f = phi(&z)?;
            let mut step = 0.25 * scale;
            let mut sweeps = 0;
            while sweeps < cfg.max_sweeps {
                sweeps += 1;
                let start = (z.clone(), f);
                let mut dirs: Vec<DVector<f64>> = (0..k).map(|i| util::unit(k, i)).collect();
                if k > 1 {
                    dirs.extend((0..2 * k).map(|_| util::random_unit(k, &mut rng)));
                }
                for d in dirs {
                    let (t, ft) = util::line_minimize(|t| phi(&(&z + &d * t)), step, cfg.line_tol * scale, 200)?;
                    if ft < f {
                        z += &d * t;
                        f = ft;
                    }
                }
                if k == 1 {
                    break;
                }
                let moved = &z - &start.0;
                if moved.norm() > 0.0 {
                    let d = moved.normalize();
                    let (t, ft) = util::line_minimize(|t| phi(&(&z + &d * t)), moved.norm(), cfg.line_tol * scale, 200)?;
                    if ft < f {
                        z += &d * t;
                        f = ft;
                    }
                    step = (moved.norm()).max(1e-3 * scale);
                }
                if done(f) || start.1 - f <= cfg.tol * f.max(1e-300) {
                    break;
                }
            }
            if best.as_ref().is_none_or(|b| f < b.1) {
                best = Some((z, f, sweeps));
            }
            if done(best.as_ref().unwrap().1) {
                break;
            }
        }
        let (z, value, sweeps) = best.expect("at least one restart");
        Ok(FiberMinimum { point: w0 + &self.kernel * z, value, sweeps })
    }

    /// `F_2(u) = inf { F_1(w) : pi(w) = u }`.
    pub fn induced_norm(&self, u: &DVector<f64>) -> Result<f64> {
        Ok(self.fiber_minimum(u)?.value)
    }

    /// The induced norm as a [`NormHandle`].
    pub fn induced(&self) -> NormHandle {
        let me = self.clone();
        let label = format!("induced from {}", self.source.describe());
        NormHandle::new(FnNorm::new(self.target_dim(), self.source.smoothness(), label, move |u| {
            me.induced_norm(u).unwrap_or(f64::NAN)
        }))
    }

    /// A minimizer of the fiber problem together with a non-uniqueness test.
    pub fn horizontal_lift(&self, u: &DVector<f64>) -> Result<HorizontalLift> {
        let m = self.fiber_minimum(u)?;
        let k = self.kernel.ncols();
        if k == 0 || m.value == 0.0 {
            return Ok(HorizontalLift { lift: m.point, value: m.value, non_unique: false, extent: 0.0 });
        }
        let scale = m.point.norm().max(1e-12);
        let phi = |z: &DVector<f64>| self.source.eval(&(&m.point + &self.kernel * z));
        let mut dirs: Vec<DVector<f64>> = (0..k).map(|i| util::unit(k, i)).collect();
        dirs.extend(util::sphere_directions(k, 8 * k));
        let extent = |tau: f64| {
            let level = m.value * (1.0 + tau);
            let reach = |d: &DVector<f64>| {
                let (mut lo, mut hi) = (0.0, 1e-9 * scale);
                while phi(&(d * hi)) <= level && hi < 1e3 * scale {
                    lo = hi;
                    hi *= 2.0;
                }
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if phi(&(d * mid)) <= level {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            dirs.iter().map(|d| reach(d) + reach(&-d)).fold(0.0, f64::max)
        };
        let (e1, e2) = (extent(1e-12), extent(1e-10));
        let non_unique = e1 > 1e-6 * scale && e2 < 3.0 * e1;
        Ok(HorizontalLift { lift: m.point, value: m.value, non_unique, extent: e1 })
    }

    /// Lift of `v` that is `g_{y}`-orthogonal to the kernel, where `y` is a
    /// (horizontal) vector in the source space.
    pub fn horizontal_lift_along(&self, y: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        let v0 = self.fiber_point(v)?;
        let k = self.kernel.ncols();
        if k == 0 {
            return Ok(v0);
        }
        let g = self.source.fundamental_tensor(y)?;
        let kk = &self.kernel;
        let a = kk.transpose() * &g * kk;
        let b = kk.transpose() * &g * &v0;
        let c = a.lu().solve(&b).ok_or(Error::Numeric(format!("singular {}", "kernel Gram matrix")))?;
        Ok(v0 - kk * c)
    }

    /// Image condition on samples: lifts of unit target vectors have value 1
    /// and projections of source-unit-ball points stay in the target ball.
    pub fn image_condition_check(&self, samples: usize, seed: u64) -> Result<ImageConditionReport> {
        let mut rng = util::rng(seed);
        let (mut forward, mut backward) = (0.0f64, 0.0f64);
        for _ in 0..samples {
            let w = util::random_unit(self.source_dim(), &mut rng);
            let w = &w / self.source.evaluate(&w)? * rand::Rng::random::<f64>(&mut rng);
            forward = forward.max(self.induced_norm(&(&self.pi * &w))? - 1.0);
            let u = util::random_unit(self.target_dim(), &mut rng);
            let f2 = self.induced_norm(&u)?;
            backward = backward.max((self.induced_norm(&(&u / f2))? - 1.0).abs());
        }
        Ok(ImageConditionReport { forward_excess: forward, unit_fiber_gap: backward, samples })
    }
}

/// Result of [`LinearSubmersion::image_condition_check`].
#[derive(Clone, Debug)]
pub struct ImageConditionReport {
    /// `max F_2(pi w) - 1` over sampled `F_1(w) <= 1`.
    pub forward_excess: f64,
    /// `max |F_2(u) - 1|` over sampled `F_2`-unit `u`.
    pub unit_fiber_gap: f64,
    pub samples: usize,
}

pub fn induced_norm(pi: &DMatrix<f64>, f1: &NormHandle, u: &DVector<f64>) -> Result<f64> {
    LinearSubmersion::new(pi.clone(), f1.clone())?.induced_norm(u)
}

pub fn horizontal_lift(pi: &DMatrix<f64>, f1: &NormHandle, u: &DVector<f64>) -> Result<HorizontalLift> {
    LinearSubmersion::new(pi.clone(), f1.clone())?.horizontal_lift(u)
}

/// `G/H -> G/K` for `h <= k`: the coarser decomposition `g = k + p` and the
/// submersion from m-coordinates onto p-coordinates.
#[derive(Clone, Debug)]
pub struct Pushdown {
    pub target: Arc<ReductiveDecomposition>,
    pub submersion: LinearSubmersion,
    /// Largest sampled `|F'(Ad(k) p) - F'(p)|` relative to `F'(p)`.
    pub invariance_defect: f64,
}

impl Pushdown {
    pub fn norm(&self) -> NormHandle {
        self.submersion.induced()
    }
}

pub fn homogeneous_pushdown(
    decomp: &ReductiveDecomposition,
    k_basis: &[DVector<f64>],
    f: &NormHandle,
) -> Result<Pushdown> {
    check_dim(decomp.dim_m(), f.dim())?;
    let alg = decomp.algebra().clone();
    let d = alg.dim();
    let kmat = util::columns(d, k_basis);
    // h must lie in k
    if decomp.dim_h() > 0 {
        let kq = util::column_space(&kmat, 1e-10);
        let h = decomp.h_matrix();
        if (h - &kq * (kq.transpose() * h)).norm() > 1e-8 * (1.0 + h.norm()) {
            return Err(Error::Decomposition("h is not contained in k".into()));
        }
    }
    let target = Arc::new(ReductiveDecomposition::new(alg.clone(), k_basis, None)?);
    if target.dim_m() == 0 {
        return Err(Error::Decomposition("k = g leaves a zero-dimensional target".into()));
    }
    let pi = target.to_m() * decomp.m_matrix();
    let submersion = LinearSubmersion::new(pi, f.clone())?;
    let mut rng = util::rng(util::DEFAULT_SEED);
    let mut defect = 0.0f64;
    for _ in 0..8 {
        let kappa = target.h_matrix() * util::random_in_ball(target.dim_h(), 2.0, &mut rng);
        let ad = alg.adjoint(&kappa)?;
        let p = util::gaussian_vector(target.dim_m(), &mut rng);
        let moved = target.to_m() * (&ad * target.from_m(&p)?);
        let (a, b) = (submersion.induced_norm(&moved)?, submersion.induced_norm(&p)?);
        defect = defect.max((a - b).abs() / b);
    }
    Ok(Pushdown { target, submersion, invariance_defect: defect })
}

/// Settings for [`submersion_inequality_check`].
#[derive(Clone, Debug)]
pub struct SubmersionCheckConfig {
    pub flags: usize,
    pub seed: u64,
    /// Radius of sampled base points in the total chart. Zero checks at the
    /// origin only, which is where a homogeneous projection is linear in
    /// exponential coordinates.
    pub x_radius: f64,
    pub slack: f64,
}

impl Default for SubmersionCheckConfig {
    fn default() -> Self {
        Self { flags: 100, seed: util::DEFAULT_SEED, x_radius: 0.0, slack: 1e-5 }
    }
}

/// One compared flag.
#[derive(Clone, Debug)]
pub struct SubmersionSample {
    pub base: FlagTriple,
    pub lifted: FlagTriple,
    pub k_total: f64,
    pub k_base: f64,
}

#[derive(Clone, Debug)]
pub struct SubmersionReport {
    pub samples: Vec<SubmersionSample>,
    /// Indices of samples with `k_total > k_base + slack`.
    pub violations: Vec<usize>,
    /// `max (k_total - k_base)`.
    pub worst_gap: f64,
    /// Largest sampled `|F_base - induced F_total|` relative, checked first.
    pub induced_gap: f64,
}

impl SubmersionReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compares the flag curvature of horizontal lifts with the base flag
/// curvature for a chart map that is `pi` in coordinates.
pub fn submersion_inequality_check(
    total: &dyn FinslerChart,
    base: &dyn FinslerChart,
    pi: &DMatrix<f64>,
    cfg: &SubmersionCheckConfig,
) -> Result<SubmersionReport> {
    check_dim(total.dim(), pi.ncols())?;
    check_dim(base.dim(), pi.nrows())?;
    let mut rng = util::rng(cfg.seed);
    let mut samples = Vec::with_capacity(cfg.flags);
    let mut induced_gap = 0.0f64;
    let pinv = pi.transpose() * (pi * pi.transpose()).try_inverse().ok_or(Error::Numeric(format!("singular {}", "pi")))?;
    while samples.len() < cfg.flags {
        let x1 = util::random_in_ball(base.dim(), cfg.x_radius, &mut rng);
        let xt = &pinv * &x1;
        let sub = LinearSubmersion::new(pi.clone(), total.norm_at(&xt)?)?;
        let base_norm = base.norm_at(&x1)?;
        let y1 = util::random_unit(base.dim(), &mut rng);
        let v1 = util::gaussian_vector(base.dim(), &mut rng);
        let Ok(base_flag) = FlagTriple::new(x1.clone(), y1.clone(), v1.clone()) else {
            continue;
        };
        let lift = sub.horizontal_lift(&y1)?;
        let fb = base_norm.evaluate(&y1)?;
        induced_gap = induced_gap.max((lift.value - fb).abs() / fb);
        let vt = sub.horizontal_lift_along(&lift.lift, &v1)?;
        let lifted = FlagTriple::new(xt, lift.lift, vt)?;
        let k_total = geometry::flag_curvature(total, &lifted)?;
        let k_base = geometry::flag_curvature(base, &base_flag)?;
        samples.push(SubmersionSample { base: base_flag, lifted, k_total, k_base });
    }
    let gaps: Vec<f64> = samples.iter().map(|s| s.k_total - s.k_base).collect();
    let violations = gaps.iter().enumerate().filter(|(_, g)| **g > cfg.slack).map(|(i, _)| i).collect();
    let worst_gap = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(SubmersionReport { samples, violations, worst_gap, induced_gap })
}
