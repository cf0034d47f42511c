//! Small numerical helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;

/// Seed used whenever a caller does not supply one.
pub const DEFAULT_SEED: u64 = 42;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(dim: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Uniform unit vector. Panics for `dim = 0`.
pub fn random_unit(dim: usize, rng: &mut impl Rng) -> DVector<f64> {
    assert!(dim > 0, "no unit vectors in dimension 0");
    loop {
        let v = gaussian_vector(dim, rng);
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Uniform sample from the Euclidean ball of the given radius.
pub fn random_in_ball(dim: usize, radius: f64, rng: &mut impl Rng) -> DVector<f64> {
    let u: f64 = rng.random();
    random_unit(dim, rng) * (radius * u.powf(1.0 / dim as f64))
}

/// Default number of sample directions for a space of dimension `dim`.
pub fn default_direction_count(dim: usize) -> usize {
    if dim <= 4 {
        512
    } else {
        256 * dim
    }
}

/// Deterministic, roughly uniform unit directions.
pub fn sphere_directions(dim: usize, n: usize) -> Vec<DVector<f64>> {
    match dim {
        0 => Vec::new(),
        1 => (0..n)
            .map(|k| DVector::from_element(1, if k % 2 == 0 { 1.0 } else { -1.0 }))
            .collect(),
        2 => (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * k as f64;
                    DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
        _ => {
            let mut r = rng(0x5eed_d1ec);
            (0..n).map(|_| random_unit(dim, &mut r)).collect()
        }
    }
}

/// Coordinate axes (both signs) followed by `sphere_directions(dim, n)`.
pub fn directions_with_axes(dim: usize, n: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(2 * dim + n);
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(dim);
            e[i] = s;
            out.push(e);
        }
    }
    out.extend(sphere_directions(dim, n));
    out
}

pub fn unit(dim: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(dim);
    e[i] = 1.0;
    e
}

/// Fourth-order central first derivative of a vector-valued function at 0.
pub fn diff1<F>(mut f: F, h: f64) -> Result<DVector<f64>>
where
    F: FnMut(f64) -> Result<DVector<f64>>,
{
    let m2 = f(-2.0 * h)?;
    let m1 = f(-h)?;
    let p1 = f(h)?;
    let p2 = f(2.0 * h)?;
    Ok((m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h))
}

/// Fourth-order central first derivative of a scalar function at 0.
pub fn diff1_scalar<F>(mut f: F, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let m2 = f(-2.0 * h)?;
    let m1 = f(-h)?;
    let p1 = f(h)?;
    let p2 = f(2.0 * h)?;
    Ok((m2 - p2 + 8.0 * (p1 - m1)) / (12.0 * h))
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Minimize a unimodal function on `[a, b]` by golden-section search.
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iter = 0;
    while (b - a).abs() > tol && iter < max_iter {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d)?;
        }
        iter += 1;
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Line minimization of a convex function of one variable starting at 0:
/// expands a bracket geometrically, then refines by golden section.
pub fn line_minimize<F>(mut f: F, step: f64, tol: f64, max_iter: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = f(0.0)?;
    let fp = f(step)?;
    let fm = f(-step)?;
    let (a, b) = if fp >= f0 && fm >= f0 {
        (-step, step)
    } else {
        let dir = if fp < fm { 1.0 } else { -1.0 };
        let (mut lo, mut mid, mut fmid) = (0.0, step, fp.min(fm));
        let mut hi = 2.0 * step;
        let mut expansions = 0;
        loop {
            let fhi = f(dir * hi)?;
            if fhi >= fmid || expansions > 60 {
                break;
            }
            lo = mid;
            mid = hi;
            fmid = fhi;
            hi *= 2.0;
            expansions += 1;
        }
        if dir > 0.0 {
            (lo, hi)
        } else {
            (-hi, -lo)
        }
    };
    let (t, ft) = golden_section(&mut f, a, b, tol, max_iter)?;
    Ok(if ft <= f0 { (t, ft) } else { (0.0, f0) })
}

/// Orthonormal basis (columns) of the null space of `a`.
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let ata = a.transpose() * a;
    let scale = ata.norm().max(1.0);
    let eig = ata.symmetric_eigen();
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&i| eig.eigenvalues[i].abs() <= (tol * tol).max(1e-13) * scale)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    columns(n, &cols)
}

/// Orthonormal basis (columns) of the column space of `a`.
pub fn column_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let m = a.nrows();
    let aat = a * a.transpose();
    let scale = aat.norm().max(1e-300);
    let eig = aat.symmetric_eigen();
    let cols: Vec<DVector<f64>> = (0..m)
        .filter(|&i| eig.eigenvalues[i] > tol * tol * scale)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    columns(m, &cols)
}

/// Stack vectors as the columns of a matrix with `rows` rows.
pub fn columns(rows: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Gram-Schmidt with respect to the inner product `q`, dropping dependent vectors.
pub fn orthonormalize(vectors: &[DVector<f64>], q: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let scale = (v.dot(&(q * v))).sqrt();
        if scale <= tol {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &out {
                let c = e.dot(&(q * &w));
                w -= e * c;
            }
        }
        let n = w.dot(&(q * &w)).max(0.0).sqrt();
        if n > tol * scale {
            out.push(w / n);
        }
    }
    out
}

/// Smallest singular value over largest, or 0 for singular input.
pub fn inverse_condition(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    if max == 0.0 {
        0.0
    } else {
        sv.min() / max
    }
}

/// Round to 12 significant digits; used for byte-stable serialization.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..10 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-13, "n={n} p={p} {num} {exact}");
            }
        }
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (t, v) = line_minimize(|t| Ok((t - 3.2) * (t - 3.2) + 1.0), 0.1, 1e-10, 1000).unwrap();
        assert!((t - 3.2).abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&a, 1e-9);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).norm() < 1e-12);
    }

    #[test]
    fn directions_are_unit() {
        for d in 1..6 {
            for v in sphere_directions(d, 37) {
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
