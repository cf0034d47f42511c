//! Compact matrix Lie algebras, reductive decompositions, Cartan subalgebras
//! and root planes.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::util::{self, columns, column_space, null_space, orthonormalize};

pub type C64 = Complex<f64>;

const CLOSURE_TOL: f64 = 1e-10;

/// Scalar field of the ambient matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

/// A compact Lie algebra realized by matrices, with structure constants and an
/// Ad-invariant inner product in basis coordinates.
#[derive(Clone, Debug)]
pub struct MatrixLieAlgebra {
    label: String,
    field: Field,
    ambient_size: usize,
    basis: Vec<DMatrix<C64>>,
    ad_basis: Vec<DMatrix<f64>>,
    inner_product: DMatrix<f64>,
    solver: DMatrix<f64>,
}

fn realify(m: &DMatrix<C64>) -> DVector<f64> {
    let n = m.len();
    let mut v = DVector::zeros(2 * n);
    for (i, z) in m.iter().enumerate() {
        v[i] = z.re;
        v[n + i] = z.im;
    }
    v
}

fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

impl MatrixLieAlgebra {
    /// Build an algebra from matrix realizations of its basis. The default inner
    /// product is `-1/2 Re tr(xy)`.
    pub fn from_basis(
        label: impl Into<String>,
        field: Field,
        ambient_size: usize,
        basis: Vec<DMatrix<C64>>,
        inner_product: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let label = label.into();
        let dim = basis.len();
        for b in &basis {
            if b.nrows() != ambient_size || b.ncols() != ambient_size {
                return Err(Error::Algebra(format!(
                    "basis matrix of shape {}x{} in ambient size {ambient_size}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            if field == Field::Real && b.iter().any(|z| z.im != 0.0) {
                return Err(Error::Algebra("complex entry in a real algebra".into()));
            }
        }
        let flat = columns(2 * ambient_size * ambient_size, &basis.iter().map(realify).collect::<Vec<_>>());
        if dim > 0 {
            let sv = flat.clone().singular_values();
            if sv.min() <= 1e-10 * sv.max() {
                return Err(Error::Algebra("basis matrices are linearly dependent".into()));
            }
        }
        let solver = if dim == 0 {
            DMatrix::zeros(0, flat.nrows())
        } else {
            flat.clone()
                .pseudo_inverse(1e-14)
                .map_err(|e| Error::Algebra(e.to_string()))?
        };
        let q = match inner_product {
            Some(q) => {
                if q.nrows() != dim || q.ncols() != dim {
                    return Err(Error::Algebra("inner product has wrong shape".into()));
                }
                q
            }
            None => DMatrix::from_fn(dim, dim, |i, j| -0.5 * (&basis[i] * &basis[j]).trace().re),
        };
        if (&q - q.transpose()).norm() > 1e-12 * q.norm().max(1.0) {
            return Err(Error::Algebra("inner product is not symmetric".into()));
        }
        if dim > 0 && q.clone().cholesky().is_none() {
            return Err(Error::Algebra("inner product is not positive definite (algebra not compact?)".into()));
        }
        let mut ad_basis = vec![DMatrix::zeros(dim, dim); dim];
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let c = commutator(&basis[i], &basis[j]);
                let r = realify(&c);
                let coords = &solver * &r;
                let resid = (&flat * &coords - &r).norm();
                worst = worst.max(resid);
                ad_basis[i].set_column(j, &coords);
            }
        }
        if worst > CLOSURE_TOL * (1.0 + flat.norm()) {
            return Err(Error::Algebra(format!("basis not closed under brackets (residual {worst:e})")));
        }
        let alg = Self { label, field, ambient_size, basis, ad_basis, inner_product: q, solver };
        let report = alg.validate();
        if let Some(msg) = report {
            return Err(Error::Algebra(msg));
        }
        Ok(alg)
    }

    /// Structure constants in coordinate form: returns `None` when every invariant
    /// holds, otherwise a description of the first violation.
    pub fn validate(&self) -> Option<String> {
        let d = self.dim();
        let scale = self.ad_basis.iter().map(|a| a.norm()).fold(1.0, f64::max);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    if (self.structure_constant(i, j, k) + self.structure_constant(j, i, k)).abs() > CLOSURE_TOL * scale {
                        return Some("structure constants not antisymmetric".into());
                    }
                }
            }
        }
        let q = &self.inner_product;
        for i in 0..d {
            let a = &self.ad_basis[i];
            let defect = (a.transpose() * q + q * a).norm();
            if defect > CLOSURE_TOL * scale * q.norm().max(1.0) {
                return Some(format!("inner product not Ad-invariant (defect {defect:e})"));
            }
        }
        for i in 0..d {
            for j in 0..d {
                let eij = self.ad_basis[i].column(j).into_owned();
                for k in 0..d {
                    let ek = util::unit(d, k);
                    let ei = util::unit(d, i);
                    let ej = util::unit(d, j);
                    let t1 = self.bracket_unchecked(&eij, &ek);
                    let t2 = self.bracket_unchecked(&self.bracket_unchecked(&ej, &ek), &ei);
                    let t3 = self.bracket_unchecked(&self.bracket_unchecked(&ek, &ei), &ej);
                    if (t1 + t2 + t3).norm() > CLOSURE_TOL * scale * scale {
                        return Some("Jacobi identity fails".into());
                    }
                }
            }
        }
        None
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_size(&self) -> usize {
        self.ambient_size
    }

    pub fn basis(&self) -> &[DMatrix<C64>] {
        &self.basis
    }

    pub fn inner_product(&self) -> &DMatrix<f64> {
        &self.inner_product
    }

    /// `c^k_{ij}` with `[e_i, e_j] = sum_k c^k_{ij} e_k`.
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.ad_basis[i][(k, j)]
    }

    pub fn dot(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.inner_product * b))
    }

    pub fn norm(&self, a: &DVector<f64>) -> f64 {
        self.dot(a, a).max(0.0).sqrt()
    }

    /// Matrix realization of an element given in basis coordinates.
    pub fn realize(&self, x: &DVector<f64>) -> Result<DMatrix<C64>> {
        check_dim(self.dim(), x.len())?;
        let n = self.ambient_size;
        let mut m = DMatrix::zeros(n, n);
        for (c, b) in x.iter().zip(&self.basis) {
            m += b * C64::new(*c, 0.0);
        }
        Ok(m)
    }

    /// Basis coordinates of a matrix, with the least-squares residual.
    pub fn coordinates(&self, m: &DMatrix<C64>) -> Result<(DVector<f64>, f64)> {
        check_dim(self.ambient_size, m.nrows())?;
        check_dim(self.ambient_size, m.ncols())?;
        let r = realify(m);
        let x = &self.solver * &r;
        let back = realify(&self.realize(&x)?);
        Ok((x, (back - r).norm()))
    }

    fn bracket_unchecked(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (i, ai) in a.iter().enumerate() {
            if *ai != 0.0 {
                out += (&self.ad_basis[i] * b) * *ai;
            }
        }
        out
    }

    /// Lie bracket in basis coordinates.
    pub fn bracket(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), a.len())?;
        check_dim(self.dim(), b.len())?;
        Ok(self.bracket_unchecked(a, b))
    }

    /// Matrix of `ad(x)` in basis coordinates.
    pub fn ad(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x.len())?;
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (i, xi) in x.iter().enumerate() {
            if *xi != 0.0 {
                out += &self.ad_basis[i] * *xi;
            }
        }
        Ok(out)
    }

    pub fn ad_basis(&self) -> &[DMatrix<f64>] {
        &self.ad_basis
    }

    /// `Ad(exp(x)) = exp(ad x)`.
    pub fn adjoint(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.ad(x)?.exp())
    }

    /// Basis (columns, Q-orthonormal) of the center.
    pub fn center(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut stacked = DMatrix::zeros(d * d, d);
        for (i, a) in self.ad_basis.iter().enumerate() {
            stacked.view_mut((i * d, 0), (d, d)).copy_from(a);
        }
        self.q_orthonormal(&null_space(&stacked, 1e-9))
    }

    /// Basis (columns, Q-orthonormal) of the derived algebra `[g, g]`, the
    /// compact semisimple factor.
    pub fn derived(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut all = DMatrix::zeros(d, d * d);
        for (i, a) in self.ad_basis.iter().enumerate() {
            all.view_mut((0, i * d), (d, d)).copy_from(a);
        }
        self.q_orthonormal(&column_space(&all, 1e-9))
    }

    /// Re-orthonormalize the columns of `m` with respect to the inner product.
    pub fn q_orthonormal(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = m.column_iter().map(|c| c.into_owned()).collect();
        columns(self.dim(), &orthonormalize(&cols, &self.inner_product, 1e-10))
    }

    /// Basis (columns) of the centralizer of a set of elements.
    pub fn centralizer(&self, elements: &[DVector<f64>]) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let mut stacked = DMatrix::zeros(d * elements.len(), d);
        for (i, x) in elements.iter().enumerate() {
            stacked.view_mut((i * d, 0), (d, d)).copy_from(&self.ad(x)?);
        }
        if elements.is_empty() {
            return Ok(DMatrix::identity(d, d));
        }
        Ok(self.q_orthonormal(&null_space(&stacked, 1e-9)))
    }

    /// Largest pairwise bracket norm in a set of elements.
    pub fn commutator_defect(&self, elements: &[DVector<f64>]) -> Result<f64> {
        let mut worst = 0.0f64;
        for (i, a) in elements.iter().enumerate() {
            for b in &elements[i + 1..] {
                worst = worst.max(self.norm(&self.bracket(a, b)?));
            }
        }
        Ok(worst)
    }

    /// Rank: nullity of `ad(x)` for a random element.
    pub fn rank(&self, seed: u64) -> usize {
        let d = self.dim();
        if d == 0 {
            return 0;
        }
        let mut r = util::rng(seed);
        let x = util::gaussian_vector(d, &mut r);
        let ad = self.ad(&x).expect("dimension matches");
        null_space(&ad, 1e-8 * (1.0 + ad.norm())).ncols().min(d)
    }

    /// A maximal abelian subalgebra containing `x`, grown greedily inside
    /// successive centralizers.
    pub fn cartan_subalgebra_containing(&self, x: &DVector<f64>) -> Result<CartanData> {
        check_dim(self.dim(), x.len())?;
        let d = self.dim();
        let mut t: Vec<DVector<f64>> = Vec::new();
        if self.norm(x) > 1e-12 {
            t.push(x / self.norm(x));
        }
        loop {
            let z = if t.is_empty() {
                DMatrix::identity(d, d)
            } else {
                self.centralizer(&t)?
            };
            let mut best: Option<DVector<f64>> = None;
            let mut best_norm = 1e-8;
            for c in z.column_iter() {
                let mut v = c.into_owned();
                for e in &t {
                    v -= e * self.dot(e, &v);
                }
                let n = self.norm(&v);
                if n > best_norm + 1e-12 {
                    best_norm = n;
                    best = Some(v / n);
                }
            }
            match best {
                Some(v) => t.push(v),
                None => break,
            }
            if t.len() > d {
                return Err(Error::Numeric("Cartan extension did not terminate".into()));
            }
        }
        let defect = self.commutator_defect(&t)?;
        if defect > 1e-8 {
            return Err(Error::Numeric(format!("partial torus of dimension {} not abelian ({defect:e})", t.len())));
        }
        Ok(CartanData { rank: t.len(), cartan_basis: t, roots: Vec::new() })
    }

    /// Simultaneous block-diagonalization of `ad(t)` into root planes.
    pub fn root_decomposition(&self, cartan: &CartanData, seed: u64) -> Result<CartanData> {
        let d = self.dim();
        let l = self
            .inner_product
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Algebra("inner product not positive definite".into()))?
            .l();
        let lt = l.transpose();
        let lt_inv = lt
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
        let to_orth = |a: &DMatrix<f64>| &lt * a * &lt_inv;
        let mut r = util::rng(seed);
        let coeffs = util::gaussian_vector(cartan.cartan_basis.len(), &mut r);
        let mut h = DVector::zeros(d);
        for (c, t) in coeffs.iter().zip(&cartan.cartan_basis) {
            h += t * *c;
        }
        let s = to_orth(&self.ad(&h)?);
        let s_i: Vec<DMatrix<f64>> = cartan
            .cartan_basis
            .iter()
            .map(|t| self.ad(t).map(|a| to_orth(&a)))
            .collect::<Result<_>>()?;
        let sq = -(&s * &s);
        let sq = (&sq + sq.transpose()) * 0.5;
        let eig = sq.symmetric_eigen();
        let scale = eig.eigenvalues.amax().max(1e-300);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let nonzero: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| eig.eigenvalues[i] > 1e-9 * scale)
            .collect();
        let zero_count = d - nonzero.len();
        if zero_count != cartan.rank {
            return Err(Error::Numeric(format!(
                "kernel of generic ad has dimension {zero_count}, expected rank {}",
                cartan.rank
            )));
        }
        // group eigenvalues that coincide (each root pair contributes a double eigenvalue)
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &i in &nonzero {
            let alpha = eig.eigenvalues[i].sqrt();
            match groups.last_mut() {
                Some(g) if (eig.eigenvalues[g[0]].sqrt() - alpha).abs() <= 1e-6 * scale.sqrt() => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        let mut roots = Vec::new();
        for g in groups {
            let space: Vec<DVector<f64>> = g.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
            if space.len() % 2 == 1 {
                return Err(Error::Numeric("odd-dimensional root eigenspace".into()));
            }
            let merged = space.len() > 2;
            if merged {
                let plane: Vec<DVector<f64>> = space.iter().map(|z| &lt_inv * z).collect();
                let p1 = &space[0];
                let sp1 = &s * p1;
                let p2 = &sp1 / sp1.norm();
                let functional = DVector::from_iterator(s_i.len(), s_i.iter().map(|si| (si * p1).dot(&p2)));
                roots.push(Root { functional: functional.clone(), plane: plane.clone(), merged });
                roots.push(Root { functional: -functional, plane, merged });
                continue;
            }
            let p1 = space[0].clone();
            let sp1 = &s * &p1;
            let p2 = &sp1 / sp1.norm();
            let functional = DVector::from_iterator(s_i.len(), s_i.iter().map(|si| (si * &p1).dot(&p2)));
            let plane = vec![&lt_inv * &p1, &lt_inv * &p2];
            roots.push(Root { functional: functional.clone(), plane: plane.clone(), merged });
            roots.push(Root { functional: -functional, plane, merged });
        }
        Ok(CartanData { cartan_basis: cartan.cartan_basis.clone(), rank: cartan.rank, roots })
    }
}

/// A root functional with its invariant plane.
#[derive(Clone, Debug)]
pub struct Root {
    /// Values of the root on the Cartan basis.
    pub functional: DVector<f64>,
    /// Q-orthonormal basis of the root space; `(p1, p2)` with `ad(h) p1 = alpha(h) p2`.
    pub plane: Vec<DVector<f64>>,
    /// True when several root pairs could not be separated.
    pub merged: bool,
}

#[derive(Clone, Debug)]
pub struct CartanData {
    pub cartan_basis: Vec<DVector<f64>>,
    pub rank: usize,
    /// Roots in `+alpha, -alpha` pairs sharing a plane; empty until
    /// [`MatrixLieAlgebra::root_decomposition`] is run.
    pub roots: Vec<Root>,
}

impl CartanData {
    /// Reassemble `ad(h)` for `h = sum c_i t_i` from the root data.
    pub fn reassemble_ad(&self, alg: &MatrixLieAlgebra, coeffs: &DVector<f64>) -> DMatrix<f64> {
        let d = alg.dim();
        let q = alg.inner_product();
        let mut out = DMatrix::zeros(d, d);
        for root in self.roots.iter().step_by(2) {
            if root.merged {
                continue;
            }
            let a = root.functional.dot(coeffs);
            let (p1, p2) = (&root.plane[0], &root.plane[1]);
            // ad(h) p1 = a p2, ad(h) p2 = -a p1; dual vectors via q
            let q1 = q * p1;
            let q2 = q * p2;
            out += (p2 * q1.transpose() - p1 * q2.transpose()) * a;
        }
        out
    }

    /// Number of root pairs (each counted once).
    pub fn root_pairs(&self) -> usize {
        self.roots.len() / 2
    }
}

fn unit_c(n: usize, i: usize, j: usize, z: C64) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = z;
    m
}

fn diag_basis(n: usize, with_center: bool) -> Vec<DMatrix<C64>> {
    let i = C64::new(0.0, 1.0);
    let raw: Vec<DMatrix<C64>> = (0..n.saturating_sub(1))
        .map(|k| unit_c(n, k, k, i) - unit_c(n, k + 1, k + 1, i))
        .collect();
    let mut out: Vec<DMatrix<C64>> = Vec::new();
    for m in raw {
        let mut v = m.clone();
        for e in &out {
            let c = -0.5 * (e * &v).trace().re;
            v -= e * C64::new(c, 0.0);
        }
        let n2 = -0.5 * (&v * &v).trace().re;
        out.push(v * C64::new(1.0 / n2.sqrt(), 0.0));
    }
    if with_center {
        let s = (2.0 / n as f64).sqrt();
        out.push(DMatrix::from_diagonal_element(n, n, i * s));
    }
    out
}

fn off_diag_basis(n: usize, complex: bool) -> Vec<DMatrix<C64>> {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut out = Vec::new();
    for j in 0..n {
        for k in (j + 1)..n {
            out.push(unit_c(n, j, k, one) - unit_c(n, k, j, one));
            if complex {
                out.push(unit_c(n, j, k, i) + unit_c(n, k, j, i));
            }
        }
    }
    out
}

impl MatrixLieAlgebra {
    /// `u(n)`: traceless diagonal part, off-diagonal pairs, then the center.
    /// For `n = 2` the coordinates are `(a, b, c, d)` with element
    /// `[[i(a+d), b+ic], [-b+ic, i(-a+d)]]`.
    pub fn u(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Algebra("u(0)".into()));
        }
        let mut b = diag_basis(n, false);
        b.extend(off_diag_basis(n, true));
        b.extend(diag_basis(n, true).pop());
        Self::from_basis(format!("u({n})"), Field::Complex, n, b, None)
    }

    pub fn su(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Algebra("su(n) needs n >= 2".into()));
        }
        let mut b = diag_basis(n, false);
        b.extend(off_diag_basis(n, true));
        Self::from_basis(format!("su({n})"), Field::Complex, n, b, None)
    }

    pub fn so(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Algebra("so(n) needs n >= 2".into()));
        }
        Self::from_basis(format!("so({n})"), Field::Real, n, off_diag_basis(n, false), None)
    }

    /// Abelian algebra of dimension `k`, realized diagonally with unit-length basis.
    pub fn abelian(k: usize) -> Result<Self> {
        let s = C64::new(0.0, 2f64.sqrt());
        let b = (0..k).map(|j| unit_c(k, j, j, s)).collect();
        Self::from_basis(format!("abelian({k})"), Field::Complex, k, b, None)
    }

    /// Block-diagonal direct sum; the inner product is the orthogonal sum.
    pub fn direct_sum(parts: &[MatrixLieAlgebra]) -> Result<Self> {
        let n: usize = parts.iter().map(|p| p.ambient_size).sum();
        let d: usize = parts.iter().map(|p| p.dim()).sum();
        let field = if parts.iter().all(|p| p.field == Field::Real) { Field::Real } else { Field::Complex };
        let mut basis = Vec::with_capacity(d);
        let mut q = DMatrix::zeros(d, d);
        let (mut off, mut qoff) = (0, 0);
        for p in parts {
            for b in &p.basis {
                let mut m = DMatrix::zeros(n, n);
                m.view_mut((off, off), (p.ambient_size, p.ambient_size)).copy_from(b);
                basis.push(m);
            }
            q.view_mut((qoff, qoff), (p.dim(), p.dim())).copy_from(&p.inner_product);
            off += p.ambient_size;
            qoff += p.dim();
        }
        let label = parts.iter().map(|p| p.label.clone()).collect::<Vec<_>>().join("+");
        Self::from_basis(label, field, n, basis, Some(q))
    }

    /// Parse a built-in name: `u(n)`, `su(n)`, `so(n)`, `abelian(k)`, or a
    /// `+`-separated direct sum of these.
    pub fn builtin(name: &str) -> Result<Self> {
        let parts: Vec<&str> = name.split(['+', '⊕']).map(str::trim).collect();
        if parts.len() > 1 {
            let algs = parts.iter().map(|p| Self::builtin(p)).collect::<Result<Vec<_>>>()?;
            return Self::direct_sum(&algs);
        }
        let s = parts[0];
        let open = s.find('(').ok_or_else(|| Error::Label(s.into()))?;
        if !s.ends_with(')') {
            return Err(Error::Label(s.into()));
        }
        let n: usize = s[open + 1..s.len() - 1].trim().parse().map_err(|_| Error::Label(s.into()))?;
        match &s[..open] {
            "u" => Self::u(n),
            "su" => Self::su(n),
            "so" => Self::so(n),
            "abelian" | "R" | "t" => Self::abelian(n),
            _ => Err(Error::Label(s.into())),
        }
    }
}

/// Samples `Ad(g)` for `g` in the compact semisimple factor, as exponentials
/// of uniform points of a ball in `[g, g]` of radius `pi / max|ad X|` over
/// unit `X`. The center acts trivially and is skipped.
#[derive(Clone, Debug)]
pub struct GroupSampler {
    algebra: Arc<MatrixLieAlgebra>,
    derived: DMatrix<f64>,
    radius: f64,
}

impl GroupSampler {
    pub fn new(algebra: Arc<MatrixLieAlgebra>) -> Result<Self> {
        let chol = algebra
            .inner_product()
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Algebra("inner product is not positive definite".into()))?;
        let c = chol.l().transpose();
        let c_inv = c.clone().try_inverse().ok_or_else(|| Error::Algebra("singular inner product".into()))?;
        let derived = algebra.derived();
        let k = derived.ncols();
        let mut spec = 0.0f64;
        let mut r = util::rng(util::DEFAULT_SEED);
        if k > 0 {
            let mut probes: Vec<DVector<f64>> = (0..k).map(|i| util::unit(k, i)).collect();
            probes.extend((0..32).map(|_| util::random_unit(k, &mut r)));
            for p in probes {
                let x = &derived * p;
                let ad = &c * algebra.ad(&x)? * &c_inv;
                spec = spec.max(ad.singular_values().max());
            }
        }
        let radius = if spec > 0.0 { std::f64::consts::PI / spec } else { 0.0 };
        Ok(Self { algebra, derived, radius })
    }

    pub fn algebra(&self) -> &Arc<MatrixLieAlgebra> {
        &self.algebra
    }

    /// Q-orthonormal basis (columns) of `[g, g]`.
    pub fn derived_basis(&self) -> &DMatrix<f64> {
        &self.derived
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// True when `Ad` is trivial (abelian algebra).
    pub fn is_trivial(&self) -> bool {
        self.derived.ncols() == 0
    }

    /// `Ad(exp X)` for `X` uniform in the sampling ball.
    pub fn sample(&self, rng: &mut impl rand::Rng) -> DMatrix<f64> {
        let d = self.algebra.dim();
        if self.is_trivial() {
            return DMatrix::identity(d, d);
        }
        let x = &self.derived * util::random_in_ball(self.derived.ncols(), self.radius, rng);
        self.algebra.ad(&x).expect("derived element has algebra dimension").exp()
    }

    /// Product of two samples, closer to Haar measure than a single one.
    pub fn sample_product(&self, rng: &mut impl rand::Rng) -> DMatrix<f64> {
        let a = self.sample(rng);
        a * self.sample(rng)
    }
}

/// `g = h + m` with `h` a subalgebra, `m` a Q-orthogonal complement and
/// `[h, m]` contained in `m`.
#[derive(Clone, Debug)]
pub struct ReductiveDecomposition {
    algebra: Arc<MatrixLieAlgebra>,
    h: DMatrix<f64>,
    m: DMatrix<f64>,
    pr_h: DMatrix<f64>,
    pr_m: DMatrix<f64>,
    to_m: DMatrix<f64>,
}

impl ReductiveDecomposition {
    /// `h_basis` spans `h`; `m_basis` defaults to a Q-orthonormal basis of the
    /// orthogonal complement.
    pub fn new(
        algebra: Arc<MatrixLieAlgebra>,
        h_basis: &[DVector<f64>],
        m_basis: Option<&[DVector<f64>]>,
    ) -> Result<Self> {
        let d = algebra.dim();
        for v in h_basis {
            check_dim(d, v.len())?;
        }
        let h = columns(d, h_basis);
        let q = algebra.inner_product().clone();
        if !h_basis.is_empty() && util::inverse_condition(&h) < 1e-10 {
            return Err(Error::Decomposition("h basis is linearly dependent".into()));
        }
        let m = match m_basis {
            Some(mb) => {
                for v in mb {
                    check_dim(d, v.len())?;
                }
                columns(d, mb)
            }
            None => {
                let constraint = h.transpose() * &q;
                algebra.q_orthonormal(&null_space(&constraint, 1e-10))
            }
        };
        if h.ncols() + m.ncols() != d {
            return Err(Error::Decomposition(format!(
                "dim h + dim m = {} + {} differs from dim g = {d}",
                h.ncols(),
                m.ncols()
            )));
        }
        if m.ncols() > 0 && util::inverse_condition(&m) < 1e-10 {
            return Err(Error::Decomposition("m basis is linearly dependent".into()));
        }
        let cross = h.transpose() * &q * &m;
        if cross.norm() > 1e-10 {
            return Err(Error::Decomposition("h and m are not orthogonal".into()));
        }
        let gram = m.transpose() * &q * &m;
        let to_m = if m.ncols() == 0 {
            DMatrix::zeros(0, d)
        } else {
            gram.try_inverse()
                .ok_or_else(|| Error::Decomposition("singular m Gram matrix".into()))?
                * m.transpose()
                * &q
        };
        let pr_m = &m * &to_m;
        let pr_h = DMatrix::identity(d, d) - &pr_m;
        let dec = Self { algebra, h, m, pr_h, pr_m, to_m };
        dec.check_reductive()?;
        Ok(dec)
    }

    fn check_reductive(&self) -> Result<()> {
        let alg = &self.algebra;
        let hs = self.h_basis();
        let ms = self.m_basis();
        let scale = 1.0 + alg.ad_basis().iter().map(|a| a.norm()).fold(0.0, f64::max);
        for a in &hs {
            for b in &hs {
                let c = alg.bracket(a, b)?;
                if (&self.pr_m * &c).norm() > CLOSURE_TOL * scale {
                    return Err(Error::Decomposition("h is not a subalgebra".into()));
                }
            }
            for b in &ms {
                let c = alg.bracket(a, b)?;
                if (&self.pr_h * &c).norm() > CLOSURE_TOL * scale {
                    return Err(Error::Decomposition("[h, m] is not contained in m".into()));
                }
            }
        }
        Ok(())
    }

    /// Decomposition with `h = 0`.
    pub fn trivial(algebra: Arc<MatrixLieAlgebra>) -> Result<Self> {
        let d = algebra.dim();
        let m: Vec<DVector<f64>> = (0..d).map(|i| util::unit(d, i)).collect();
        Self::new(algebra, &[], Some(&m))
    }

    pub fn algebra(&self) -> &Arc<MatrixLieAlgebra> {
        &self.algebra
    }

    pub fn dim_h(&self) -> usize {
        self.h.ncols()
    }

    pub fn dim_m(&self) -> usize {
        self.m.ncols()
    }

    pub fn h_matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Columns are the m basis in algebra coordinates.
    pub fn m_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn h_basis(&self) -> Vec<DVector<f64>> {
        self.h.column_iter().map(|c| c.into_owned()).collect()
    }

    pub fn m_basis(&self) -> Vec<DVector<f64>> {
        self.m.column_iter().map(|c| c.into_owned()).collect()
    }

    pub fn pr_h(&self) -> &DMatrix<f64> {
        &self.pr_h
    }

    pub fn pr_m(&self) -> &DMatrix<f64> {
        &self.pr_m
    }

    /// Linear map from algebra coordinates to m-coordinates of the m-part.
    pub fn to_m(&self) -> &DMatrix<f64> {
        &self.to_m
    }

    /// Algebra vector of m-coordinates.
    pub fn from_m(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim_m(), u.len())?;
        Ok(&self.m * u)
    }

    /// m-coordinates of `pr_m(w)`.
    pub fn m_coords(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.algebra.dim(), w.len())?;
        Ok(&self.to_m * w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn u2_coordinates_match_the_standard_parametrization() {
        let g = MatrixLieAlgebra::u(2).unwrap();
        let (a, b, c, d) = (0.3, -0.7, 1.1, 0.4);
        let m = g.realize(&v(&[a, b, c, d])).unwrap();
        let i = C64::new(0.0, 1.0);
        let expect = DMatrix::from_row_slice(
            2,
            2,
            &[i * (a + d), C64::new(b, c), C64::new(-b, c), i * (-a + d)],
        );
        assert!((m - expect).norm() < 1e-14);
        assert!((g.inner_product() - DMatrix::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn builtin_parses_sums() {
        let g = MatrixLieAlgebra::builtin("su(2)+su(2)").unwrap();
        assert_eq!(g.dim(), 6);
        assert_eq!(g.rank(7), 2);
        assert!(MatrixLieAlgebra::builtin("sl(2)").is_err());
    }

    #[test]
    fn center_and_derived_of_u2() {
        let g = MatrixLieAlgebra::u(2).unwrap();
        let z = g.center();
        assert_eq!(z.ncols(), 1);
        assert!((z[(3, 0)].abs() - 1.0).abs() < 1e-12);
        assert_eq!(g.derived().ncols(), 3);
    }
}
