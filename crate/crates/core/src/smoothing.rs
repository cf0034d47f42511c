//! Smoothing of singular norms (mollify, rehomogenize, regularize),
//! Ad-averaging, and the normal-to-delta approximation sequence.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chebyshev::{ChebyshevConfig, ChebyshevNorm};
use crate::error::{check_dim, Error, Result};
use crate::lie::{GroupSampler, MatrixLieAlgebra, ReductiveDecomposition};
use crate::norms::{self, FnNorm, NormHandle, Smoothness};
use crate::submersion::{FiberConfig, LinearSubmersion};
use crate::util;

/// Largest dimension handled by tensor-grid convolution.
pub const MAX_SMOOTHING_DIM: usize = 4;

#[derive(Clone, Debug)]
pub struct SmoothingConfig {
    pub epsilon: f64,
    /// Gauss-Legendre nodes per axis of the support cube.
    pub points_per_axis: usize,
    /// Coordinates `y = L z` in which the bump is radial; identity when `None`.
    pub frame: Option<DMatrix<f64>>,
    /// Relative tolerance of the ray roots.
    pub root_tol: f64,
}

impl SmoothingConfig {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, points_per_axis: 9, frame: None, root_tol: 1e-15 }
    }
}

/// `Gamma(k / 2)` for a positive integer `k`.
fn gamma_half(k: usize) -> f64 {
    let (mut g, mut x) = if k.is_multiple_of(2) { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    while x + 1e-9 < k as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Discrete bump `c (1 - |z|^2/eps^2)^4` on a tensor Gauss-Legendre grid,
/// restricted to the support and normalized to unit mass.
#[derive(Clone, Debug)]
pub struct Mollifier {
    pub epsilon: f64,
    pub nodes: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    /// `|sum of raw weights - 1|` before normalization.
    pub mass_error: f64,
}

impl Mollifier {
    pub fn new(dim: usize, cfg: &SmoothingConfig) -> Result<Self> {
        if dim == 0 || dim > MAX_SMOOTHING_DIM {
            return Err(Error::Dimension { expected: MAX_SMOOTHING_DIM, got: dim });
        }
        let eps = cfg.epsilon;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Norm(format!("mollifier radius must be positive, got {eps}")));
        }
        if cfg.points_per_axis == 0 {
            return Err(Error::Norm("quadrature needs at least one node per axis".into()));
        }
        let frame = match &cfg.frame {
            Some(l) => {
                check_dim(dim, l.nrows())?;
                check_dim(dim, l.ncols())?;
                l.clone()
            }
            None => DMatrix::identity(dim, dim),
        };
        let (x, w) = util::gauss_legendre(cfg.points_per_axis);
        // (1 - r^2)^4 over the unit ball integrates to pi^{n/2} 4! / Gamma(n/2 + 5)
        let unit_mass = std::f64::consts::PI.powf(dim as f64 / 2.0) * 24.0 / gamma_half(dim + 10);
        let c = 1.0 / (unit_mass * eps.powi(dim as i32));
        let p = cfg.points_per_axis;
        let (mut nodes, mut weights) = (Vec::new(), Vec::new());
        let mut raw = 0.0;
        let mut idx = vec![0usize; dim];
        loop {
            let z = DVector::from_fn(dim, |i, _| x[idx[i]] * eps);
            let r2 = z.norm_squared() / (eps * eps);
            if r2 < 1.0 {
                let wt: f64 = idx.iter().map(|&i| w[i] * eps).product::<f64>() * c * (1.0 - r2).powi(4);
                raw += wt;
                nodes.push(&frame * z);
                weights.push(wt);
            }
            let mut k = 0;
            while k < dim {
                idx[k] += 1;
                if idx[k] < p {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == dim {
                break;
            }
        }
        if weights.is_empty() {
            return Err(Error::Norm("no quadrature node inside the mollifier support".into()));
        }
        for wt in &mut weights {
            *wt /= raw;
        }
        Ok(Self { epsilon: eps, nodes, weights, mass_error: (raw - 1.0).abs() })
    }
}

/// `F_1(x) = sum_i w_i F(x - y_i)`: convex, positive at the origin, not homogeneous.
#[derive(Clone, Debug)]
pub struct Mollified {
    pub norm: NormHandle,
    pub mollifier: Arc<Mollifier>,
}

impl Mollified {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        let mut buf = x.clone();
        let mut s = 0.0;
        for (y, w) in self.mollifier.nodes.iter().zip(&self.mollifier.weights) {
            buf.copy_from(x);
            buf -= y;
            s += w * self.norm.eval(&buf);
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.norm.dim()
    }
}

pub fn mollify(f: &NormHandle, cfg: &SmoothingConfig) -> Result<Mollified> {
    let m = Mollifier::new(f.dim(), cfg)?;
    Ok(Mollified { norm: f.clone(), mollifier: Arc::new(m) })
}

/// Root `r > 0` of `F_1(r theta) = 1` for a unit direction `theta`.
pub fn ray_root(m: &Mollified, theta: &DVector<f64>, tol: f64) -> Result<f64> {
    let g = |r: f64| m.eval(&(theta * r)) - 1.0;
    let (mut a, mut fa) = (0.0, g(0.0));
    if fa >= 0.0 {
        return Err(Error::Bracket(format!("F_1(0) = {} is not below 1; epsilon too large", fa + 1.0)));
    }
    let f = m.norm.eval(theta);
    let mut b = if f > 0.0 { 1.0 / f } else { 1.0 };
    let mut fb = g(b);
    let mut grow = 0;
    while fb < 0.0 {
        a = b;
        fa = fb;
        b *= 2.0;
        fb = g(b);
        grow += 1;
        if grow > 60 {
            return Err(Error::Bracket("ray root not bracketed".into()));
        }
    }
    // Illinois variant of regula falsi
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= tol * b.abs() {
            break;
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = g(c);
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// `F_2(x) = |x| / r(x/|x|)`, 1-homogeneous with unit sphere `{F_1 = 1}`.
pub fn rehomogenize(m: &Mollified, tol: f64) -> Result<NormHandle> {
    let n = m.dim();
    let f0 = m.eval(&DVector::zeros(n));
    if f0 >= 1.0 {
        return Err(Error::Bracket(format!("F_1(0) = {f0} is not below 1; epsilon too large")));
    }
    let mm = m.clone();
    let label = format!("rehomogenized mollification (eps {}) of {}", m.mollifier.epsilon, m.norm.describe());
    Ok(NormHandle::new(FnNorm::new(n, Smoothness::Smooth, label, move |x| {
        let nx = x.norm();
        if nx == 0.0 {
            return 0.0;
        }
        match ray_root(&mm, &(x / nx), tol) {
            Ok(r) => nx / r,
            Err(_) => f64::NAN,
        }
    })))
}

/// `sqrt(F_2^2 + eps |x|^2)`.
pub fn regularize(f2: &NormHandle, eps: f64) -> Result<NormHandle> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Norm(format!("regularization needs eps > 0, got {eps}")));
    }
    let f = f2.clone();
    let label = format!("regularized (eps {eps}) {}", f2.describe());
    Ok(NormHandle::new(FnNorm::new(f2.dim(), Smoothness::Smooth, label, move |x| {
        let v = f.eval(x);
        (v * v + eps * x.norm_squared()).sqrt()
    })))
}

/// Smallest directional second difference of `F^2/2` (step 1e-3) over
/// `samples` unit rays, using the axes, diagonals, and the lowest eigenvector
/// of the finite-difference Hessian at each ray as probe directions.
pub fn strong_convexity_probe(f: &NormHandle, samples: usize) -> f64 {
    let n = f.dim();
    let h = 1e-3;
    let half_sq = |x: &DVector<f64>| 0.5 * f.eval(x).powi(2);
    let mut probes: Vec<DVector<f64>> = (0..n).map(|i| util::unit(n, i)).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            probes.push((util::unit(n, i) + util::unit(n, j)).normalize());
            probes.push((util::unit(n, i) - util::unit(n, j)).normalize());
        }
    }
    let mut lo = f64::INFINITY;
    // offset the rays so they avoid the axes and diagonals exactly
    let dirs: Vec<DVector<f64>> = match n {
        2 => (0..samples)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.37) / samples as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        _ => util::sphere_directions(n, samples),
    };
    for xi in dirs {
        let c = half_sq(&xi);
        let sd = |v: &DVector<f64>| (half_sq(&(&xi + v * h)) - 2.0 * c + half_sq(&(&xi - v * h))) / (h * h);
        let hess = norms::fd_tensor(|y| f.eval(y), &xi, h);
        let eig = hess.symmetric_eigen();
        let (imin, _) = eig.eigenvalues.argmin();
        let mut all = probes.clone();
        all.push(eig.eigenvectors.column(imin).into_owned());
        for v in &all {
            lo = lo.min(sd(v));
        }
    }
    lo
}

/// One smoothing stage.
#[derive(Clone, Debug)]
pub struct SmoothingStage {
    pub epsilon: f64,
    pub norm: NormHandle,
    /// `c0_distance` to the input on the Euclidean unit sphere.
    pub sup_gap: f64,
    pub strong_convexity: f64,
    pub mass_error: f64,
}

/// Mollify, rehomogenize and regularize once per `epsilon` in the schedule.
pub fn approximate_singular_norm(
    f: &NormHandle,
    schedule: &[f64],
    points_per_axis: usize,
) -> Result<Vec<SmoothingStage>> {
    let dirs = util::directions_with_axes(f.dim(), util::default_direction_count(f.dim()));
    let mut out = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let cfg = SmoothingConfig { points_per_axis, ..SmoothingConfig::new(eps) };
        let m = mollify(f, &cfg)?;
        let f2 = rehomogenize(&m, cfg.root_tol)?;
        let fe = regularize(&f2, eps)?;
        let sup_gap = norms::c0_distance_on(&fe, f, &dirs)?;
        let strong_convexity = strong_convexity_probe(&fe, 64);
        out.push(SmoothingStage { epsilon: eps, norm: fe, sup_gap, strong_convexity, mass_error: m.mollifier.mass_error });
    }
    Ok(out)
}

/// `sqrt(mean_i F(Ad(g_i) w)^2)` over `n` sampled group elements.
pub fn ad_average(f: &NormHandle, algebra: Arc<MatrixLieAlgebra>, n: usize, seed: u64) -> Result<NormHandle> {
    check_dim(algebra.dim(), f.dim())?;
    let sampler = GroupSampler::new(algebra)?;
    if sampler.is_trivial() {
        return Ok(f.clone());
    }
    let mut rng = util::rng(seed);
    let mats: Vec<DMatrix<f64>> = (0..n.max(1)).map(|_| sampler.sample_product(&mut rng)).collect();
    let inner = f.clone();
    let label = format!("Ad-average ({n} samples) of {}", f.describe());
    Ok(NormHandle::new(FnNorm::new(f.dim(), f.smoothness(), label, move |w| {
        let s: f64 = mats.iter().map(|a| inner.eval(&(a * w)).powi(2)).sum();
        (s / mats.len() as f64).sqrt()
    })))
}

/// `max |F(Ad(g) w) - F(w)| / F(w)` over sampled unit `w` and group elements.
pub fn ad_invariance_defect(f: &NormHandle, algebra: Arc<MatrixLieAlgebra>, samples: usize, seed: u64) -> Result<f64> {
    check_dim(algebra.dim(), f.dim())?;
    let sampler = GroupSampler::new(algebra)?;
    let mut rng = util::rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let w = util::random_unit(f.dim(), &mut rng);
        let a = sampler.sample_product(&mut rng);
        let fw = f.eval(&w);
        worst = worst.max((f.eval(&(a * &w)) - fw).abs() / fw);
    }
    Ok(worst)
}

/// Settings for [`normal_to_delta_sequence`].
#[derive(Clone, Debug)]
pub struct SequenceConfig {
    pub schedule: Vec<f64>,
    /// Group samples of each Ad-average.
    pub group_samples: usize,
    pub points_per_axis: usize,
    pub chebyshev: ChebyshevConfig,
    pub fiber: FiberConfig,
    /// Random unit directions (besides the axes) for the sup gap on m.
    pub directions: usize,
    /// Also measure strong convexity and Ad-invariance per stage.
    pub probes: bool,
    pub seed: u64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            schedule: vec![0.4, 0.2, 0.1, 0.05],
            group_samples: 2,
            points_per_axis: 5,
            chebyshev: ChebyshevConfig { restarts: 1, budget: 2, levels: 10, ..ChebyshevConfig::default() },
            fiber: FiberConfig { restarts: 1, tol: 1e-6, line_tol: 1e-3, derivative_free: true, ..FiberConfig::default() },
            directions: 16,
            probes: false,
            seed: util::DEFAULT_SEED,
        }
    }
}

/// One stage of the normal-to-delta sequence.
#[derive(Clone, Debug)]
pub struct StageReport {
    pub epsilon: f64,
    pub sup_gap: f64,
    pub strong_convexity_min_eig: Option<f64>,
    pub ad_invariance_defect: Option<f64>,
    /// The normal homogeneous norm on m.
    pub norm: NormHandle,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub stages: Vec<StageReport>,
    /// Gaps strictly decrease from stage to stage.
    pub decreasing: bool,
    pub final_gap: f64,
}

/// Builds `F~`, smooths it per stage, Ad-averages, pushes down through `pr_m`
/// and measures the sup gap of each resulting normal norm to `F`.
pub fn normal_to_delta_sequence(
    decomp: Arc<ReductiveDecomposition>,
    f: &NormHandle,
    cfg: &SequenceConfig,
) -> Result<ConvergenceReport> {
    let alg = decomp.algebra().clone();
    let cheb = ChebyshevNorm::with_config(decomp.clone(), f.clone(), cfg.chebyshev.clone())?;
    let ft = cheb.handle();
    let dirs = util::directions_with_axes(decomp.dim_m(), cfg.directions);
    let mut stages = Vec::with_capacity(cfg.schedule.len());
    for (i, &eps) in cfg.schedule.iter().enumerate() {
        let scfg = SmoothingConfig { points_per_axis: cfg.points_per_axis, ..SmoothingConfig::new(eps) };
        let m = mollify(&ft, &scfg)?;
        let f2 = rehomogenize(&m, 1e-12)?;
        let fe = regularize(&f2, eps)?;
        let avg = ad_average(&fe, alg.clone(), cfg.group_samples, cfg.seed.wrapping_add(i as u64))?;
        let sub = LinearSubmersion::with_config(decomp.to_m().clone(), avg.clone(), cfg.fiber.clone())?;
        let fnorm = sub.induced();
        let sup_gap = norms::c0_distance_on(&fnorm, f, &dirs)?;
        let (sc, defect) = if cfg.probes {
            (Some(strong_convexity_probe(&avg, 8)), Some(ad_invariance_defect(&avg, alg.clone(), 16, cfg.seed)?))
        } else {
            (None, None)
        };
        stages.push(StageReport { epsilon: eps, sup_gap, strong_convexity_min_eig: sc, ad_invariance_defect: defect, norm: fnorm });
    }
    let decreasing = stages.windows(2).all(|w| w[1].sup_gap < w[0].sup_gap);
    let final_gap = stages.last().map_or(f64::NAN, |s| s.sup_gap);
    Ok(ConvergenceReport { stages, decreasing, final_gap })
}
