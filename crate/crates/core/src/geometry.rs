//! Finsler charts, geodesic spray, geodesics, Riemann/flag/Ricci curvature,
//! localization metrics, and sampled totally-geodesic and (FP) checks.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::lie::ReductiveDecomposition;
use crate::norms::{NormHandle, Pullback, Quadratic, Randers, TIP_GUARD};
use crate::util::{self, diff1};

/// A coordinate patch carrying a Finsler metric `F(x, y)`.
pub trait FinslerChart: Send + Sync {
    fn dim(&self) -> usize;
    /// Points with `|x| < radius` are valid.
    fn radius(&self) -> f64;
    /// The Minkowski norm on the tangent space at `x`.
    fn norm_at(&self, x: &DVector<f64>) -> Result<NormHandle>;
    fn label(&self) -> String;
}

fn ensure_inside(chart: &dyn FinslerChart, x: &DVector<f64>) -> Result<()> {
    check_dim(chart.dim(), x.len())?;
    let n = x.norm();
    if !(n < chart.radius()) {
        return Err(Error::OutsideChart { norm: n, radius: chart.radius() });
    }
    Ok(())
}

/// x-independent metric on a vector space.
#[derive(Clone, Debug)]
pub struct FlatChart {
    norm: NormHandle,
}

impl FlatChart {
    pub fn new(norm: NormHandle) -> Self {
        Self { norm }
    }
}

impl FinslerChart for FlatChart {
    fn dim(&self) -> usize {
        self.norm.dim()
    }
    fn radius(&self) -> f64 {
        f64::INFINITY
    }
    fn norm_at(&self, x: &DVector<f64>) -> Result<NormHandle> {
        check_dim(self.dim(), x.len())?;
        Ok(self.norm.clone())
    }
    fn label(&self) -> String {
        format!("flat {}", self.norm.describe())
    }
}

type NormField = dyn Fn(&DVector<f64>) -> Result<NormHandle> + Send + Sync;

/// Chart given by an explicit field of norms.
#[derive(Clone)]
pub struct ExplicitChart {
    dim: usize,
    radius: f64,
    label: String,
    field: Arc<NormField>,
}

impl ExplicitChart {
    pub fn new(
        dim: usize,
        radius: f64,
        label: impl Into<String>,
        field: impl Fn(&DVector<f64>) -> Result<NormHandle> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, radius, label: label.into(), field: Arc::new(field) }
    }

    /// Unit round sphere in stereographic coordinates, `g = 4 / (1 + |x|^2)^2 I`.
    pub fn round_sphere(dim: usize) -> Self {
        Self::new(dim, 2.0, format!("round S^{dim} (stereographic)"), move |x| {
            let l = 2.0 / (1.0 + x.norm_squared());
            Ok(NormHandle::new(Quadratic::new(DMatrix::identity(dim, dim) * (l * l))?))
        })
    }

    /// Randers perturbation `alpha + beta` of the round 2-sphere with an
    /// x-dependent drift of relative size about `strength`.
    pub fn randers_sphere(strength: f64) -> Self {
        Self::new(2, 1.0, format!("Randers round S^2 (drift {strength})"), move |x| {
            let l = 2.0 / (1.0 + x.norm_squared());
            let c = DVector::from_vec(vec![1.0 + 0.4 * x[1], -0.3 + 0.5 * x[0]]) * strength;
            Ok(NormHandle::new(Randers::new(DMatrix::identity(2, 2) * (l * l), c * l)?))
        })
    }
}

impl FinslerChart for ExplicitChart {
    fn dim(&self) -> usize {
        self.dim
    }
    fn radius(&self) -> f64 {
        self.radius
    }
    fn norm_at(&self, x: &DVector<f64>) -> Result<NormHandle> {
        ensure_inside(self, x)?;
        (self.field)(x)
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Exponential chart `xi -> exp(xi) . o` on `G/H` with an invariant metric
/// given by an Ad(H)-invariant norm on `m` (in m-coordinates).
#[derive(Clone, Debug)]
pub struct HomogeneousChart {
    decomp: Arc<ReductiveDecomposition>,
    base: NormHandle,
    radius: f64,
    m_ad: Vec<DMatrix<f64>>,
}

impl HomogeneousChart {
    /// Builds the chart, checks Ad(H)-invariance of `base` and picks the radius
    /// as half the distance where the transport condition number reaches 10.
    pub fn new(decomp: Arc<ReductiveDecomposition>, base: NormHandle) -> Result<Self> {
        let mut chart = Self::with_radius(decomp, base, f64::INFINITY)?;
        chart.radius = 0.5 * chart.degeneracy_radius(10.0);
        Ok(chart)
    }

    pub fn with_radius(decomp: Arc<ReductiveDecomposition>, base: NormHandle, radius: f64) -> Result<Self> {
        check_dim(decomp.dim_m(), base.dim())?;
        let alg = decomp.algebra().clone();
        let m_ad = decomp.m_basis().iter().map(|v| alg.ad(v)).collect::<Result<Vec<_>>>()?;
        let chart = Self { decomp, base, radius, m_ad };
        chart.check_invariance(util::DEFAULT_SEED)?;
        Ok(chart)
    }

    fn check_invariance(&self, seed: u64) -> Result<()> {
        let dec = &self.decomp;
        if dec.dim_h() == 0 {
            return Ok(());
        }
        let alg = dec.algebra();
        let mut r = util::rng(seed);
        for _ in 0..32 {
            let coeffs = util::random_in_ball(dec.dim_h(), 2.0, &mut r);
            let h = dec.h_matrix() * coeffs;
            let ad = alg.adjoint(&h)?;
            let u = util::gaussian_vector(dec.dim_m(), &mut r);
            let moved = dec.to_m() * (&ad * dec.from_m(&u)?);
            let (a, b) = (self.base.eval(&moved), self.base.eval(&u));
            if (a - b).abs() > 1e-7 * b.max(1.0) {
                return Err(Error::Decomposition(format!(
                    "base norm is not Ad(H)-invariant (|{a} - {b}|)"
                )));
            }
        }
        Ok(())
    }

    fn degeneracy_radius(&self, cond_limit: f64) -> f64 {
        let n = self.decomp.dim_m();
        let mut dirs = util::directions_with_axes(n, 0);
        let mut r = util::rng(util::DEFAULT_SEED);
        dirs.extend((0..16).map(|_| util::random_unit(n, &mut r)));
        let cap = 10.0;
        let cond = |x: &DVector<f64>| {
            let inv = util::inverse_condition(&self.transport_unchecked(x));
            if inv == 0.0 {
                f64::INFINITY
            } else {
                1.0 / inv
            }
        };
        let mut best = cap;
        for d in dirs {
            let mut lo = 0.0;
            let mut hit = None;
            let mut t = 0.05;
            while t <= best {
                if cond(&(&d * t)) > cond_limit {
                    hit = Some(t);
                    break;
                }
                lo = t;
                t += 0.05;
            }
            if let Some(mut hi) = hit {
                for _ in 0..30 {
                    let mid = 0.5 * (lo + hi);
                    if cond(&(&d * mid)) > cond_limit {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                best = best.min(hi);
            }
        }
        best
    }

    pub fn decomposition(&self) -> &Arc<ReductiveDecomposition> {
        &self.decomp
    }

    pub fn base_norm(&self) -> &NormHandle {
        &self.base
    }

    fn transport_unchecked(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.decomp.algebra().dim();
        let mut a = DMatrix::zeros(d, d);
        for (xi, m) in x.iter().zip(&self.m_ad) {
            a += m * *xi;
        }
        // (1 - exp(-A)) / A as a power series
        let mut phi = DMatrix::identity(d, d);
        let mut term = DMatrix::identity(d, d);
        for k in 1..300 {
            term = -(&term * &a) / (k as f64 + 1.0);
            phi += &term;
            if term.norm() < 1e-18 * phi.norm() {
                break;
            }
        }
        self.decomp.to_m() * phi * self.decomp.m_matrix()
    }

    /// Transport `D(x)` of chart vectors at `x` back to `m`-coordinates.
    pub fn transport(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        ensure_inside(self, x)?;
        Ok(self.transport_unchecked(x))
    }

    /// Condition number of `D(x)`.
    pub fn transport_condition(&self, x: &DVector<f64>) -> Result<f64> {
        let inv = util::inverse_condition(&self.transport(x)?);
        Ok(if inv == 0.0 { f64::INFINITY } else { 1.0 / inv })
    }
}

impl FinslerChart for HomogeneousChart {
    fn dim(&self) -> usize {
        self.decomp.dim_m()
    }
    fn radius(&self) -> f64 {
        self.radius
    }
    fn norm_at(&self, x: &DVector<f64>) -> Result<NormHandle> {
        let d = self.transport(x)?;
        Ok(NormHandle::new(Pullback::new(self.base.clone(), d)?))
    }
    fn label(&self) -> String {
        format!("{} / h (dim h = {})", self.decomp.algebra().label(), self.decomp.dim_h())
    }
}

/// `F(x, y)` in a chart.
pub fn pullback_metric(chart: &dyn FinslerChart, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    check_dim(chart.dim(), y.len())?;
    chart.norm_at(x)?.evaluate(y)
}

/// Finite-difference steps: `inner` for x-derivatives of `F^2` inside the
/// spray, `outer` for derivatives of the spray (relative to `|y|` in y).
#[derive(Clone, Copy, Debug)]
pub struct CurvatureSteps {
    pub inner: f64,
    pub outer: f64,
}

impl Default for CurvatureSteps {
    fn default() -> Self {
        Self { inner: 2e-3, outer: 1e-2 }
    }
}

fn lag(chart: &dyn FinslerChart, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    let f = chart.norm_at(x)?.eval(y);
    Ok(f * f)
}

fn lag_y(chart: &dyn FinslerChart, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    chart.norm_at(x)?.grad_sq(y)
}

/// Spray coefficients `G^i(x, y)`.
pub fn spray_coefficients(chart: &dyn FinslerChart, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    spray_with(chart, x, y, CurvatureSteps::default().inner)
}

pub fn spray_with(chart: &dyn FinslerChart, x: &DVector<f64>, y: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    let n = chart.dim();
    check_dim(n, y.len())?;
    let ny = y.norm();
    if ny < TIP_GUARD {
        return Err(Error::NearTip(ny));
    }
    let g = chart.norm_at(x)?.fundamental_tensor(y)?;
    let mut lx = DVector::zeros(n);
    for k in 0..n {
        let e = util::unit(n, k);
        lx[k] = util::diff1_scalar(|s| lag(chart, &(x + &e * s), y), h)?;
    }
    let s = h / ny;
    let lxy = diff1(|t| lag_y(chart, &(x + y * t), y), s)?;
    let rhs = (lxy - lx) * 0.25;
    g.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("fundamental tensor not invertible".into()))
}

/// Riemann curvature `R^i_k(y)` at `x`, returned as the matrix `[i, k]`.
pub fn riemann_curvature(chart: &dyn FinslerChart, x: &DVector<f64>, y: &DVector<f64>) -> Result<DMatrix<f64>> {
    riemann_with(chart, x, y, CurvatureSteps::default())
}

pub fn riemann_with(
    chart: &dyn FinslerChart,
    x: &DVector<f64>,
    y: &DVector<f64>,
    steps: CurvatureSteps,
) -> Result<DMatrix<f64>> {
    let n = chart.dim();
    let g0 = spray_with(chart, x, y, steps.inner)?;
    let ny = y.norm();
    let hx = steps.outer;
    let hy = steps.outer * ny;
    let sp = |xx: &DVector<f64>, yy: &DVector<f64>| spray_with(chart, xx, yy, steps.inner);
    let mut jx = DMatrix::zeros(n, n);
    let mut jy = DMatrix::zeros(n, n);
    let mut m1 = DMatrix::zeros(n, n);
    let mut m2 = DMatrix::zeros(n, n);
    let ng = g0.norm();
    for k in 0..n {
        let e = util::unit(n, k);
        jx.set_column(k, &diff1(|s| sp(&(x + &e * s), y), hx)?);
        jy.set_column(k, &diff1(|s| sp(x, &(y + &e * s)), hy)?);
        // y^j d2 G / dx^j dy^k: differentiate in y^k the x-derivative along the fixed y
        let col = diff1(
            |t| {
                let yk = y + &e * t;
                diff1(|s| sp(&(x + y * s), &yk), hx / ny)
            },
            hy,
        )?;
        m1.set_column(k, &col);
        if ng > 0.0 {
            let col = diff1(
                |t| {
                    let yk = y + &e * t;
                    diff1(|s| sp(x, &(&yk + &g0 * s)), hy / ng)
                },
                hy,
            )?;
            m2.set_column(k, &col);
        }
    }
    Ok(jx * 2.0 - m1 + m2 * 2.0 - &jy * &jy)
}

/// Flagpole `y` and transverse edge `v` at a chart point.
#[derive(Clone, Debug)]
pub struct FlagTriple {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub v: DVector<f64>,
}

impl FlagTriple {
    pub fn new(x: DVector<f64>, y: DVector<f64>, v: DVector<f64>) -> Result<Self> {
        check_dim(x.len(), y.len())?;
        check_dim(x.len(), v.len())?;
        let ny = y.norm();
        if ny < TIP_GUARD {
            return Err(Error::NearTip(ny));
        }
        let gram = y.norm_squared() * v.norm_squared() - y.dot(&v).powi(2);
        if gram < 1e-10 {
            return Err(Error::DegenerateFlag(gram));
        }
        Ok(Self { x, y, v })
    }
}

/// Spray, Riemann curvature, flag and Ricci curvature at a flag.
#[derive(Clone, Debug)]
pub struct CurvatureReport {
    pub spray: DVector<f64>,
    pub riemann: DMatrix<f64>,
    pub flag: f64,
    pub ricci: f64,
    /// `|R_y y| / |R|`.
    pub flagpole_residual: f64,
    pub steps: CurvatureSteps,
}

fn flag_from(g: &DMatrix<f64>, r: &DMatrix<f64>, y: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    let gy = g * y;
    let gv = g * v;
    let (yy, vv) = (y.dot(&gy), v.dot(&gv));
    let den = yy * vv - y.dot(&gv).powi(2);
    if !(den > 1e-14 * yy * vv) {
        return Err(Error::DegenerateFlag(den));
    }
    let w = v - y * (v.dot(&gy) / yy);
    let gw = g * &w;
    Ok((r * &w).dot(&gw) / (yy * w.dot(&gw)))
}

pub fn curvature_report(chart: &dyn FinslerChart, flag: &FlagTriple) -> Result<CurvatureReport> {
    let steps = CurvatureSteps::default();
    let spray = spray_with(chart, &flag.x, &flag.y, steps.inner)?;
    let r = riemann_with(chart, &flag.x, &flag.y, steps)?;
    let g = chart.norm_at(&flag.x)?.fundamental_tensor(&flag.y)?;
    let k = flag_from(&g, &r, &flag.y, &flag.v)?;
    let scale = r.norm() * flag.y.norm();
    let resid = if scale > 0.0 { (&r * &flag.y).norm() / scale } else { 0.0 };
    if !k.is_finite() {
        return Err(Error::Numeric("non-finite flag curvature".into()));
    }
    Ok(CurvatureReport { spray, ricci: r.trace(), riemann: r, flag: k, flagpole_residual: resid, steps })
}

/// `K(x, y, span{y, v})`.
pub fn flag_curvature(chart: &dyn FinslerChart, flag: &FlagTriple) -> Result<f64> {
    Ok(curvature_report(chart, flag)?.flag)
}

/// `Ric(x, y) = tr R_y`.
pub fn ricci(chart: &dyn FinslerChart, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    Ok(riemann_curvature(chart, x, y)?.trace())
}

/// Random flags with base points in the ball of radius `x_radius`.
pub fn sample_flags(dim: usize, count: usize, x_radius: f64, seed: u64) -> Vec<FlagTriple> {
    let mut r = util::rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = util::random_in_ball(dim, x_radius, &mut r);
        let y = util::random_unit(dim, &mut r) * (0.5 + r.random::<f64>());
        let v = util::gaussian_vector(dim, &mut r);
        if let Ok(f) = FlagTriple::new(x, y, v) {
            out.push(f);
        }
    }
    out
}

/// Sampled geodesic.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub velocities: Vec<DVector<f64>>,
    pub speeds: Vec<f64>,
    /// Time at which the curve left the chart, if it did.
    pub exit_time: Option<f64>,
}

impl Trajectory {
    /// Largest relative deviation of the speed from its initial value.
    pub fn speed_drift(&self) -> f64 {
        let s0 = self.speeds[0];
        self.speeds.iter().map(|s| (s - s0).abs() / s0).fold(0.0, f64::max)
    }
}

fn accel(chart: &dyn FinslerChart, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(spray_coefficients(chart, x, v)? * -2.0)
}

fn rk4_step(
    chart: &dyn FinslerChart,
    x: &DVector<f64>,
    v: &DVector<f64>,
    dt: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let a1 = accel(chart, x, v)?;
    let (x2, v2) = (x + v * (dt / 2.0), v + &a1 * (dt / 2.0));
    let a2 = accel(chart, &x2, &v2)?;
    let (x3, v3) = (x + &v2 * (dt / 2.0), v + &a2 * (dt / 2.0));
    let a3 = accel(chart, &x3, &v3)?;
    let (x4, v4) = (x + &v3 * dt, v + &a3 * dt);
    let a4 = accel(chart, &x4, &v4)?;
    let xn = x + (v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (dt / 6.0);
    let vn = v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (dt / 6.0);
    Ok((xn, vn))
}

/// Classical Runge-Kutta integration of `x'' + 2 G(x, x') = 0` on `[0, t_final]`.
pub fn geodesic_integrate(
    chart: &dyn FinslerChart,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    t_final: f64,
    steps: usize,
) -> Result<Trajectory> {
    ensure_inside(chart, x0)?;
    check_dim(chart.dim(), y0.len())?;
    let dt = t_final / steps.max(1) as f64;
    let mut traj = Trajectory {
        times: vec![0.0],
        points: vec![x0.clone()],
        velocities: vec![y0.clone()],
        speeds: vec![pullback_metric(chart, x0, y0)?],
        exit_time: None,
    };
    let (mut x, mut v) = (x0.clone(), y0.clone());
    for i in 0..steps.max(1) {
        match rk4_step(chart, &x, &v, dt) {
            Ok((xn, vn)) => {
                let t = (i + 1) as f64 * dt;
                match pullback_metric(chart, &xn, &vn) {
                    Ok(s) => {
                        traj.times.push(t);
                        traj.points.push(xn.clone());
                        traj.velocities.push(vn.clone());
                        traj.speeds.push(s);
                        x = xn;
                        v = vn;
                    }
                    Err(Error::OutsideChart { .. }) => {
                        traj.exit_time = Some(t);
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(Error::OutsideChart { .. }) => {
                traj.exit_time = Some(i as f64 * dt);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}

fn flow(chart: &dyn FinslerChart, x: &DVector<f64>, v: &DVector<f64>, t: f64, steps: usize) -> Result<(DVector<f64>, DVector<f64>)> {
    let dt = t / steps as f64;
    let (mut x, mut v) = (x.clone(), v.clone());
    for _ in 0..steps {
        let (xn, vn) = rk4_step(chart, &x, &v, dt)?;
        x = xn;
        v = vn;
    }
    Ok((x, v))
}

/// Geodesic field through a transverse hyperplane: geodesics start on
/// `x + span(N)` with the constant initial velocity `y`.
struct GeodesicField<'a> {
    chart: &'a dyn FinslerChart,
    x: DVector<f64>,
    y: DVector<f64>,
    normal: DMatrix<f64>,
    jinv: DMatrix<f64>,
}

impl<'a> GeodesicField<'a> {
    fn new(chart: &'a dyn FinslerChart, x: &DVector<f64>, y: &DVector<f64>) -> Result<Self> {
        let n = chart.dim();
        let yhat = y / y.norm();
        let normal = util::null_space(&DMatrix::from_row_slice(1, n, yhat.as_slice()), 1e-12);
        let mut j = DMatrix::zeros(n, n);
        j.set_column(0, y);
        j.view_mut((0, 1), (n, n - 1)).copy_from(&normal);
        let jinv = j.try_inverse().ok_or_else(|| Error::Numeric("singular transverse frame".into()))?;
        Ok(Self { chart, x: x.clone(), y: y.clone(), normal, jinv })
    }

    fn at(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.x.len();
        let mut p = &self.jinv * (z - &self.x);
        for _ in 0..60 {
            let t = p[0];
            let s = p.rows(1, n - 1).into_owned();
            let start = &self.x + &self.normal * &s;
            let (xz, vz) = flow(self.chart, &start, &self.y, t, 16)?;
            let r = z - &xz;
            if r.norm() <= 1e-15 * (1.0 + z.norm()) {
                return Ok(vz);
            }
            p += &self.jinv * r;
        }
        let t = p[0];
        let s = p.rows(1, n - 1).into_owned();
        let start = &self.x + &self.normal * &s;
        Ok(flow(self.chart, &start, &self.y, t, 16)?.1)
    }
}

/// Sectional curvature of a Riemannian metric field from its first and second
/// derivatives via Christoffel symbols.
pub fn riemannian_sectional(
    metric: &dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>>,
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    h: f64,
) -> Result<f64> {
    let n = x.len();
    let c = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
    let g0 = metric(x)?;
    let mut axis: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(n);
    for k in 0..n {
        let e = util::unit(n, k);
        axis.push(c.iter().map(|(a, _)| metric(&(x + &e * (a * h)))).collect::<Result<_>>()?);
    }
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|k| {
            let mut s = DMatrix::zeros(n, n);
            for (j, (_, w)) in c.iter().enumerate() {
                s += &axis[k][j] * *w;
            }
            s / (12.0 * h)
        })
        .collect();
    let mut ddg = vec![vec![DMatrix::zeros(n, n); n]; n];
    for k in 0..n {
        ddg[k][k] = (-(&axis[k][0]) + &axis[k][1] * 16.0 - &g0 * 30.0 + &axis[k][2] * 16.0 - &axis[k][3]) / (12.0 * h * h);
        for l in (k + 1)..n {
            let (ek, el) = (util::unit(n, k), util::unit(n, l));
            let mut s = DMatrix::zeros(n, n);
            for (a, wa) in c {
                for (b, wb) in c {
                    s += metric(&(x + &ek * (a * h) + &el * (b * h)))? * (wa * wb);
                }
            }
            s /= 144.0 * h * h;
            ddg[k][l] = s.clone();
            ddg[l][k] = s;
        }
    }
    let ginv = g0.clone().try_inverse().ok_or_else(|| Error::Numeric("singular metric".into()))?;
    // lowered Christoffel symbols  Gamma_{l,mu,nu} = 1/2 (d_mu g_{l nu} + d_nu g_{l mu} - d_l g_{mu nu})
    let low = |d: &dyn Fn(usize) -> DMatrix<f64>, l: usize, mu: usize, nu: usize| {
        0.5 * (d(mu)[(l, nu)] + d(nu)[(l, mu)] - d(l)[(mu, nu)])
    };
    let dfun = |k: usize| dg[k].clone();
    let mut gamma = vec![DMatrix::zeros(n, n); n];
    for rho in 0..n {
        for mu in 0..n {
            for nu in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ginv[(rho, l)] * low(&dfun, l, mu, nu);
                }
                gamma[rho][(mu, nu)] = s;
            }
        }
    }
    // d_sigma Gamma^rho_{mu nu}
    let mut dgamma = vec![vec![DMatrix::zeros(n, n); n]; n];
    for sigma in 0..n {
        let dginv = -&ginv * &dg[sigma] * &ginv;
        let dd = |k: usize| ddg[sigma][k].clone();
        for rho in 0..n {
            for mu in 0..n {
                for nu in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += dginv[(rho, l)] * low(&dfun, l, mu, nu) + ginv[(rho, l)] * low(&dd, l, mu, nu);
                    }
                    dgamma[sigma][rho][(mu, nu)] = s;
                }
            }
        }
    }
    // R^rho_{sigma mu nu} u^rho-lowered v^sigma u^mu v^nu
    let mut num = 0.0;
    for rho in 0..n {
        for sigma in 0..n {
            for mu in 0..n {
                for nu in 0..n {
                    let mut r = dgamma[mu][rho][(nu, sigma)] - dgamma[nu][rho][(mu, sigma)];
                    for lam in 0..n {
                        r += gamma[rho][(mu, lam)] * gamma[lam][(nu, sigma)]
                            - gamma[rho][(nu, lam)] * gamma[lam][(mu, sigma)];
                    }
                    let lowered: f64 = (0..n).map(|a| g0[(a, rho)] * u[a]).sum();
                    num += lowered * r * v[sigma] * u[mu] * v[nu];
                }
            }
        }
    }
    let den = u.dot(&(&g0 * u)) * v.dot(&(&g0 * v)) - u.dot(&(&g0 * v)).powi(2);
    if !(den > 0.0) {
        return Err(Error::DegenerateFlag(den));
    }
    Ok(num / den)
}

/// Flag curvature and the sectional curvature of the localization `g_Y`
/// along a geodesic field `Y` extending `y`.
pub fn localization_check(chart: &dyn FinslerChart, flag: &FlagTriple) -> Result<(f64, f64)> {
    let k_finsler = flag_curvature(chart, flag)?;
    let field = GeodesicField::new(chart, &flag.x, &flag.y)?;
    let metric = |z: &DVector<f64>| -> Result<DMatrix<f64>> {
        let yz = field.at(z)?;
        chart.norm_at(z)?.fundamental_tensor(&yz)
    };
    let k_loc = riemannian_sectional(&metric, &flag.x, &flag.y, &flag.v, 1e-2)?;
    Ok((k_finsler, k_loc))
}

/// Result of [`totally_geodesic_flat_check`].
#[derive(Clone, Debug)]
pub struct TotallyGeodesicReport {
    /// Largest spray component transverse to the subspace.
    pub max_normal_spray: f64,
    /// Largest `|K|` over flags inside the subspace.
    pub max_flat_curvature: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Samples `(x, y)` inside a coordinate subspace (columns of `subspace`) and
/// measures the transverse spray and in-subspace flag curvature.
pub fn totally_geodesic_flat_check(
    chart: &dyn FinslerChart,
    subspace: &DMatrix<f64>,
    samples: usize,
    seed: u64,
) -> Result<TotallyGeodesicReport> {
    let n = chart.dim();
    check_dim(n, subspace.nrows())?;
    let k = subspace.ncols();
    let q = subspace.clone().qr();
    let basis = q.q().columns(0, k).into_owned();
    let normal = util::null_space(&basis.transpose(), 1e-12);
    let mut r = util::rng(seed);
    let rad = 0.3 * chart.radius().min(3.0);
    let (mut worst_g, mut worst_k) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let x = &basis * util::random_in_ball(k, rad, &mut r);
        let y = &basis * util::random_unit(k, &mut r);
        let g = spray_coefficients(chart, &x, &y)?;
        worst_g = worst_g.max((normal.transpose() * &g).amax());
        if k >= 2 {
            let v = &basis * util::gaussian_vector(k, &mut r);
            if let Ok(flag) = FlagTriple::new(x.clone(), y.clone(), v) {
                worst_k = worst_k.max(flag_curvature(chart, &flag)?.abs());
            }
        }
    }
    Ok(TotallyGeodesicReport {
        max_normal_spray: worst_g,
        max_flat_curvature: worst_k,
        samples,
        pass: worst_g <= 1e-6 && worst_k <= 1e-5,
    })
}

/// Result of [`fp_condition_sample`].
#[derive(Clone, Debug)]
pub struct FpReport {
    /// Per plane: largest sampled flag curvature over flagpoles in the plane.
    pub plane_max: Vec<f64>,
    pub verdict: bool,
}

/// Threshold above which a sampled flag curvature counts as positive.
pub const FP_POSITIVE: f64 = 1e-6;

/// Sampled (FP) evidence: every sampled plane should contain a flagpole with
/// positive flag curvature.
pub fn fp_condition_sample(chart: &dyn FinslerChart, planes: usize, directions: usize, seed: u64) -> Result<FpReport> {
    let n = chart.dim();
    let mut r = util::rng(seed);
    let rad = 0.3 * chart.radius().min(3.0);
    let mut plane_max = Vec::with_capacity(planes);
    for _ in 0..planes {
        let x = util::random_in_ball(n, rad, &mut r);
        let p1 = util::random_unit(n, &mut r);
        let mut p2 = util::gaussian_vector(n, &mut r);
        p2 -= &p1 * p1.dot(&p2);
        let p2 = p2.normalize();
        let mut best = f64::NEG_INFINITY;
        for j in 0..directions.max(1) {
            let th = std::f64::consts::PI * j as f64 / directions.max(1) as f64;
            let y = &p1 * th.cos() + &p2 * th.sin();
            let v = -&p1 * th.sin() + &p2 * th.cos();
            let k = flag_curvature(chart, &FlagTriple::new(x.clone(), y, v)?)?;
            best = best.max(k);
        }
        plane_max.push(best);
    }
    let verdict = plane_max.iter().all(|k| *k > FP_POSITIVE);
    Ok(FpReport { plane_max, verdict })
}
