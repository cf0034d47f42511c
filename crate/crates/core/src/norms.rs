//! Minkowski norms and singular norms: evaluation, fundamental tensor, axiom
//! checks, indicatrix sampling and C0 distance.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::util;

/// Guard radius for derivative evaluations.
pub const TIP_GUARD: f64 = 1e-8;
/// Relative finite-difference step for derivatives of `F^2`.
pub const FD_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    Smooth,
    Singular,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference { step: f64 },
}

/// A positively homogeneous convex function, possibly non-smooth.
pub trait Minkowski: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, y: &DVector<f64>) -> f64;
    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }
    /// Gradient of `F^2`, when available in closed form.
    fn grad_sq(&self, _y: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }
    /// Half Hessian of `F^2`, when available in closed form.
    fn tensor(&self, _y: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
    fn describe(&self) -> String;
}

/// Shared handle to a norm.
#[derive(Clone)]
pub struct NormHandle(Arc<dyn Minkowski>);

impl fmt::Debug for NormHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NormHandle({})", self.0.describe())
    }
}

impl NormHandle {
    pub fn new(inner: impl Minkowski + 'static) -> Self {
        Self(Arc::new(inner))
    }

    pub fn from_arc(inner: Arc<dyn Minkowski>) -> Self {
        Self(inner)
    }

    pub fn inner(&self) -> &Arc<dyn Minkowski> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn smoothness(&self) -> Smoothness {
        self.0.smoothness()
    }

    pub fn describe(&self) -> String {
        self.0.describe()
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        let probe = util::unit(self.dim(), 0);
        if self.0.tensor(&probe).is_some() {
            DerivativeMode::Analytic
        } else {
            DerivativeMode::FiniteDifference { step: FD_STEP }
        }
    }

    pub fn evaluate(&self, y: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), y.len())?;
        Ok(self.0.eval(y))
    }

    /// `F(y)` without dimension checks; callers guarantee the length.
    pub fn eval(&self, y: &DVector<f64>) -> f64 {
        self.0.eval(y)
    }

    fn guard(&self, y: &DVector<f64>) -> Result<()> {
        check_dim(self.dim(), y.len())?;
        if self.smoothness() == Smoothness::Singular {
            return Err(Error::Singular);
        }
        let n = y.norm();
        if n < TIP_GUARD {
            return Err(Error::NearTip(n));
        }
        Ok(())
    }

    /// Gradient of `F^2` at `y`.
    pub fn grad_sq(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.guard(y)?;
        if let Some(g) = self.0.grad_sq(y) {
            return Ok(g);
        }
        let h = FD_STEP * y.norm();
        let n = self.dim();
        let f2 = |v: &DVector<f64>| {
            let f = self.0.eval(v);
            f * f
        };
        Ok(DVector::from_fn(n, |i, _| {
            let at = |t: f64| {
                let mut p = y.clone();
                p[i] += t;
                f2(&p)
            };
            (at(-2.0 * h) - at(2.0 * h) + 8.0 * (at(h) - at(-h))) / (12.0 * h)
        }))
    }

    /// `g_ij(y) = 1/2 [F^2]_{y^i y^j}`.
    pub fn fundamental_tensor(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.guard(y)?;
        if let Some(g) = self.0.tensor(y) {
            return Ok(g);
        }
        Ok(fd_tensor(|v| self.0.eval(v), y, FD_STEP * y.norm()))
    }

    /// `<u, v>_y`.
    pub fn inner_product(&self, y: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), u.len())?;
        check_dim(self.dim(), v.len())?;
        let g = self.fundamental_tensor(y)?;
        Ok(u.dot(&(g * v)))
    }
}

/// Fourth-order central second differences of `F^2`, halved, with step `h`.
pub fn fd_tensor(f: impl Fn(&DVector<f64>) -> f64, y: &DVector<f64>, h: f64) -> DMatrix<f64> {
    const W: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
    let n = y.len();
    let f2 = |v: &DVector<f64>| {
        let x = f(v);
        x * x
    };
    let c = f2(y);
    let mut g = DMatrix::zeros(n, n);
    let mut p = y.clone();
    for i in 0..n {
        let mut d = -30.0 * c;
        for (k, w) in [(-2.0, -1.0), (-1.0, 16.0), (1.0, 16.0), (2.0, -1.0)] {
            p.copy_from(y);
            p[i] += k * h;
            d += w * f2(&p);
        }
        g[(i, i)] = 0.5 * d / (12.0 * h * h);
        for j in (i + 1)..n {
            let mut d = 0.0;
            for (ki, wi) in W {
                for (kj, wj) in W {
                    p.copy_from(y);
                    p[i] += ki * h;
                    p[j] += kj * h;
                    d += wi * wj * f2(&p);
                }
            }
            let v = 0.5 * d / (144.0 * h * h);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

fn quad_form(q: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let n = y.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += q[(i, j)] * y[j];
        }
        s += y[i] * row;
    }
    s
}

fn check_spd(q: &DMatrix<f64>) -> Result<()> {
    if q.nrows() != q.ncols() {
        return Err(Error::Norm("quadratic form is not square".into()));
    }
    if (q - q.transpose()).norm() > 1e-12 * q.norm().max(1.0) {
        return Err(Error::Norm("quadratic form is not symmetric".into()));
    }
    if q.clone().cholesky().is_none() {
        return Err(Error::Norm("quadratic form is not positive definite".into()));
    }
    Ok(())
}

/// `F(y) = sqrt(y^T Q y)`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    q: DMatrix<f64>,
}

impl Quadratic {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        check_spd(&q)?;
        Ok(Self { q })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self { q: DMatrix::identity(dim, dim) }
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(d)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }
}

impl Minkowski for Quadratic {
    fn dim(&self) -> usize {
        self.q.nrows()
    }
    fn eval(&self, y: &DVector<f64>) -> f64 {
        quad_form(&self.q, y).max(0.0).sqrt()
    }
    fn grad_sq(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        Some(&self.q * y * 2.0)
    }
    fn tensor(&self, _y: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.q.clone())
    }
    fn describe(&self) -> String {
        format!("quadratic(dim {})", self.dim())
    }
}

/// `F(y) = sqrt(y^T Q y) + b . y` with `|b|_Q < 1`.
#[derive(Clone, Debug)]
pub struct Randers {
    q: DMatrix<f64>,
    b: DVector<f64>,
}

impl Randers {
    pub fn new(q: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_spd(&q)?;
        check_dim(q.nrows(), b.len())?;
        let qinv = q.clone().try_inverse().ok_or_else(|| Error::Norm("singular Q".into()))?;
        let bn = quad_form(&qinv, &b).sqrt();
        if bn >= 1.0 {
            return Err(Error::Norm(format!("Randers drift has dual norm {bn} >= 1")));
        }
        Ok(Self { q, b })
    }

    /// Dual Q-norm of the drift covector.
    pub fn drift_norm(&self) -> f64 {
        let qinv = self.q.clone().try_inverse().expect("checked at construction");
        quad_form(&qinv, &self.b).sqrt()
    }

    fn parts(&self, y: &DVector<f64>) -> (f64, DVector<f64>, f64) {
        let qy = &self.q * y;
        let alpha = y.dot(&qy).max(0.0).sqrt();
        (alpha, qy / alpha, alpha + self.b.dot(y))
    }
}

impl Minkowski for Randers {
    fn dim(&self) -> usize {
        self.q.nrows()
    }
    fn eval(&self, y: &DVector<f64>) -> f64 {
        quad_form(&self.q, y).max(0.0).sqrt() + self.b.dot(y)
    }
    fn grad_sq(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        let (_, l, f) = self.parts(y);
        Some((l + &self.b) * (2.0 * f))
    }
    fn tensor(&self, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        let (alpha, l, f) = self.parts(y);
        let lb = &l + &self.b;
        Some((&self.q - &l * l.transpose()) * (f / alpha) + &lb * lb.transpose())
    }
    fn describe(&self) -> String {
        format!("randers(dim {})", self.dim())
    }
}

/// The sup norm `max |y_i|`.
#[derive(Clone, Debug)]
pub struct MaxNorm {
    dim: usize,
}

impl MaxNorm {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Minkowski for MaxNorm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, y: &DVector<f64>) -> f64 {
        y.amax()
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Singular
    }
    fn describe(&self) -> String {
        format!("maxnorm(dim {})", self.dim)
    }
}

/// `(sum |y_i|^p)^(1/p)`; derivatives by finite differences.
#[derive(Clone, Debug)]
pub struct LpNorm {
    dim: usize,
    p: f64,
}

impl LpNorm {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::Norm(format!("l^p norm needs p > 1, got {p}")));
        }
        Ok(Self { dim, p })
    }
}

impl Minkowski for LpNorm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, y: &DVector<f64>) -> f64 {
        let m = y.amax();
        if m == 0.0 {
            return 0.0;
        }
        m * y.iter().map(|v| (v.abs() / m).powf(self.p)).sum::<f64>().powf(1.0 / self.p)
    }
    fn describe(&self) -> String {
        format!("l{}(dim {})", self.p, self.dim)
    }
}

/// `max_k l_k . y` over a table of covectors whose convex hull contains 0 in its interior.
#[derive(Clone, Debug)]
pub struct Polyhedral {
    dim: usize,
    functionals: Vec<DVector<f64>>,
}

impl Polyhedral {
    pub fn new(functionals: Vec<DVector<f64>>) -> Result<Self> {
        let dim = functionals.first().map(|f| f.len()).ok_or_else(|| Error::Norm("empty table".into()))?;
        for f in &functionals {
            check_dim(dim, f.len())?;
        }
        let p = Self { dim, functionals };
        for y in util::directions_with_axes(dim, util::default_direction_count(dim)) {
            if p.eval(&y) <= 0.0 {
                return Err(Error::Norm("table does not define a positive norm".into()));
            }
        }
        Ok(p)
    }

    pub fn functionals(&self) -> &[DVector<f64>] {
        &self.functionals
    }
}

impl Minkowski for Polyhedral {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, y: &DVector<f64>) -> f64 {
        self.functionals.iter().map(|l| l.dot(y)).fold(f64::NEG_INFINITY, f64::max)
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Singular
    }
    fn describe(&self) -> String {
        format!("polyhedral({} functionals)", self.functionals.len())
    }
}

/// `y -> F(A y)` for an injective linear map `A`.
#[derive(Clone, Debug)]
pub struct Pullback {
    inner: NormHandle,
    map: DMatrix<f64>,
}

impl Pullback {
    pub fn new(inner: NormHandle, map: DMatrix<f64>) -> Result<Self> {
        check_dim(inner.dim(), map.nrows())?;
        Ok(Self { inner, map })
    }
}

impl Minkowski for Pullback {
    fn dim(&self) -> usize {
        self.map.ncols()
    }
    fn eval(&self, y: &DVector<f64>) -> f64 {
        self.inner.eval(&(&self.map * y))
    }
    fn smoothness(&self) -> Smoothness {
        self.inner.smoothness()
    }
    fn grad_sq(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        let z = &self.map * y;
        self.inner.0.grad_sq(&z).map(|g| self.map.transpose() * g)
    }
    fn tensor(&self, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        let z = &self.map * y;
        self.inner.0.tensor(&z).map(|g| self.map.transpose() * g * &self.map)
    }
    fn describe(&self) -> String {
        format!("pullback of {}", self.inner.describe())
    }
}

type NormFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;

/// A norm given by an arbitrary evaluation function.
#[derive(Clone)]
pub struct FnNorm {
    dim: usize,
    f: Arc<NormFn>,
    smoothness: Smoothness,
    label: String,
}

impl FnNorm {
    pub fn new(
        dim: usize,
        smoothness: Smoothness,
        label: impl Into<String>,
        f: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { dim, f: Arc::new(f), smoothness, label: label.into() }
    }
}

impl Minkowski for FnNorm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, y: &DVector<f64>) -> f64 {
        (self.f)(y)
    }
    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }
    fn describe(&self) -> String {
        self.label.clone()
    }
}

/// Outcome of one axiom test.
#[derive(Clone, Debug)]
pub struct AxiomResult {
    pub pass: bool,
    /// Largest violation found (0 when none).
    pub worst: f64,
}

#[derive(Clone, Debug)]
pub struct AxiomReport {
    pub positivity: AxiomResult,
    pub homogeneity: AxiomResult,
    pub convexity: AxiomResult,
    pub smoothness: AxiomResult,
    /// Smallest fundamental-tensor eigenvalue on the unit-F sphere, for smooth norms.
    pub strong_convexity: Option<AxiomResult>,
    pub min_eigenvalue: Option<f64>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.positivity.pass
            && self.homogeneity.pass
            && self.convexity.pass
            && self.smoothness.pass
            && self.strong_convexity.as_ref().is_none_or(|s| s.pass)
    }
}

/// Sampled checks of positivity, homogeneity, convexity, smoothness and strong convexity.
pub fn check_axioms(f: &NormHandle, samples: usize, seed: u64) -> AxiomReport {
    let n = f.dim();
    let dirs = util::directions_with_axes(n, samples);
    let mut r = util::rng(seed);
    let mut pos_worst = 0.0f64;
    let mut hom_worst = 0.0f64;
    let mut conv_worst = 0.0f64;
    for y in &dirs {
        let v = f.eval(y);
        if !(v > 0.0) {
            pos_worst = pos_worst.max(1.0 - v.min(1.0));
        }
        for lam in [0.5, 2.0, 10.0] {
            let rel = (f.eval(&(y * lam)) - lam * v).abs() / (lam * v).abs().max(1e-300);
            hom_worst = hom_worst.max(rel);
        }
    }
    for _ in 0..samples {
        let a = util::gaussian_vector(n, &mut r);
        let b = util::gaussian_vector(n, &mut r);
        let mid = f.eval(&((&a + &b) * 0.5));
        let viol = mid - 0.5 * (f.eval(&a) + f.eval(&b));
        conv_worst = conv_worst.max(viol);
    }
    // kink probe: second differences that grow like 1/h signal a crease
    let mut kink = 0.0f64;
    for y in &dirs {
        for i in 0..n {
            let e = util::unit(n, i);
            let sd = |h: f64| (f.eval(&(y + &e * h)) - 2.0 * f.eval(y) + f.eval(&(y - &e * h))) / (h * h);
            let (s1, s2) = (sd(1e-3).abs(), sd(1e-4).abs());
            if s2 > 100.0 && s2 > 5.0 * s1 {
                kink = kink.max(s2);
            }
        }
        let xi = util::random_unit(n, &mut r);
        let sd = |h: f64| (f.eval(&(y + &xi * h)) - 2.0 * f.eval(y) + f.eval(&(y - &xi * h))) / (h * h);
        let (s1, s2) = (sd(1e-3).abs(), sd(1e-4).abs());
        if s2 > 100.0 && s2 > 5.0 * s1 {
            kink = kink.max(s2);
        }
    }
    let smooth_ok = f.smoothness() == Smoothness::Smooth && kink == 0.0;
    let (strong, min_eig) = if f.smoothness() == Smoothness::Smooth {
        let mut lo = f64::INFINITY;
        for y in &dirs {
            let yy = y / f.eval(y);
            if let Ok(g) = f.fundamental_tensor(&yy) {
                lo = lo.min(g.symmetric_eigen().eigenvalues.min());
            }
        }
        (Some(AxiomResult { pass: lo > 1e-8, worst: if lo > 1e-8 { 0.0 } else { -lo } }), Some(lo))
    } else {
        (None, None)
    };
    AxiomReport {
        positivity: AxiomResult { pass: pos_worst == 0.0, worst: pos_worst },
        homogeneity: AxiomResult { pass: hom_worst <= 1e-9, worst: hom_worst },
        convexity: AxiomResult { pass: conv_worst <= 1e-9, worst: conv_worst.max(0.0) },
        smoothness: AxiomResult { pass: smooth_ok, worst: kink },
        strong_convexity: strong,
        min_eigenvalue: min_eig,
    }
}

/// Points `y / F(y)` on the indicatrix for `directions` sample directions.
pub fn indicatrix_sample(f: &NormHandle, directions: usize) -> Result<Vec<DVector<f64>>> {
    if f.dim() < 2 {
        return Err(Error::Norm("indicatrix sampling needs dim >= 2".into()));
    }
    Ok(util::sphere_directions(f.dim(), directions)
        .into_iter()
        .filter_map(|y| {
            let v = f.eval(&y);
            (v > 0.0).then(|| y / v)
        })
        .collect())
}

/// Largest `|F1 - F2|` over the given unit directions.
pub fn c0_distance_on(f1: &NormHandle, f2: &NormHandle, dirs: &[DVector<f64>]) -> Result<f64> {
    check_dim(f1.dim(), f2.dim())?;
    Ok(dirs.iter().map(|y| (f1.eval(y) - f2.eval(y)).abs()).fold(0.0, f64::max))
}

/// Largest `|F1 - F2|` over `samples` Euclidean unit directions plus the axes.
pub fn c0_distance(f1: &NormHandle, f2: &NormHandle, samples: usize) -> Result<f64> {
    c0_distance_on(f1, f2, &util::directions_with_axes(f1.dim(), samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn randers_value_and_tensor_euler() {
        let f = NormHandle::new(Randers::new(DMatrix::identity(2, 2), v(&[0.5, 0.0])).unwrap());
        assert!((f.evaluate(&v(&[1.0, 0.0])).unwrap() - 1.5).abs() < 1e-15);
        let y = v(&[0.3, -1.2]);
        let g = f.fundamental_tensor(&y).unwrap();
        let fy = f.eval(&y);
        assert!((y.dot(&(&g * &y)) - fy * fy).abs() < 1e-12);
    }

    #[test]
    fn randers_rejects_large_drift() {
        assert!(Randers::new(DMatrix::identity(2, 2), v(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn singular_norm_refuses_tensor() {
        let f = NormHandle::new(MaxNorm::new(2));
        assert!(matches!(f.fundamental_tensor(&v(&[1.0, 0.2])), Err(Error::Singular)));
    }

    #[test]
    fn tip_guard() {
        let f = NormHandle::new(Quadratic::euclidean(2));
        assert!(matches!(f.fundamental_tensor(&v(&[1e-9, 0.0])), Err(Error::NearTip(_))));
    }
}
