//! Ready-made algebras, decompositions and norms used by the tests and the CLI.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::lie::{MatrixLieAlgebra, ReductiveDecomposition};
use crate::norms::{NormHandle, Quadratic};

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

/// `S^3 = U(2)/U(1)` with `h = R(1,0,0,-1)` and m-basis
/// `(1,0,0,1), (0,1,0,0), (0,0,1,0)`, so that `pr_m(a,b,c,d)` has
/// m-coordinates `((a+d)/2, b, c)`.
pub fn u2_s3() -> Result<Arc<ReductiveDecomposition>> {
    let g = Arc::new(MatrixLieAlgebra::u(2)?);
    let h = [v(&[1.0, 0.0, 0.0, -1.0])];
    let m = [v(&[1.0, 0.0, 0.0, 1.0]), v(&[0.0, 1.0, 0.0, 0.0]), v(&[0.0, 0.0, 1.0, 0.0])];
    Ok(Arc::new(ReductiveDecomposition::new(g, &h, Some(&m))?))
}

/// `F_eps^2 = (4 - eps) a^2 + b^2 + c^2` in the m-coordinates of [`u2_s3`].
/// `eps = 0` is `F_0`, the round metric of the unit 3-sphere.
pub fn u2_f_epsilon(eps: f64) -> Result<NormHandle> {
    Ok(NormHandle::new(Quadratic::new(DMatrix::from_diagonal(&v(&[4.0 - eps, 1.0, 1.0])))?))
}

pub fn u2_f0() -> NormHandle {
    u2_f_epsilon(0.0).expect("diag(4,1,1) is positive definite")
}

/// `|pr_v w| + |d|` for `w = (a, b, c, d)`, the bi-invariant singular norm on
/// `u(2)` inducing [`u2_f0`].
pub fn u2_chebyshev_closed_form(w: &DVector<f64>) -> f64 {
    (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt() + w[3].abs()
}

/// `su(2)` with `h = 0`: the unit 3-sphere with its bi-invariant metric.
pub fn su2_biinvariant() -> Result<Arc<ReductiveDecomposition>> {
    let g = Arc::new(MatrixLieAlgebra::su(2)?);
    Ok(Arc::new(ReductiveDecomposition::trivial(g)?))
}

/// `SU(2)/U(1)` with `h` the Cartan circle: the 2-sphere of curvature 4.
pub fn su2_s2() -> Result<Arc<ReductiveDecomposition>> {
    let g = Arc::new(MatrixLieAlgebra::su(2)?);
    Ok(Arc::new(ReductiveDecomposition::new(g, &[v(&[1.0, 0.0, 0.0])], None)?))
}

/// `SO(3)/SO(2)`.
pub fn so3_s2() -> Result<Arc<ReductiveDecomposition>> {
    let g = Arc::new(MatrixLieAlgebra::so(3)?);
    Ok(Arc::new(ReductiveDecomposition::new(g, &[v(&[1.0, 0.0, 0.0])], None)?))
}

/// Abelian group with `h = 0`.
pub fn torus(k: usize) -> Result<Arc<ReductiveDecomposition>> {
    let g = Arc::new(MatrixLieAlgebra::abelian(k)?);
    Ok(Arc::new(ReductiveDecomposition::trivial(g)?))
}

/// `su(2) + su(2)` with `h = 0`.
pub fn s3xs3() -> Result<Arc<ReductiveDecomposition>> {
    let g = Arc::new(MatrixLieAlgebra::builtin("su(2)+su(2)")?);
    Ok(Arc::new(ReductiveDecomposition::trivial(g)?))
}

/// Euclidean norm in the Q-orthonormal m-coordinates of a decomposition.
pub fn normal_norm(decomp: &ReductiveDecomposition) -> Result<NormHandle> {
    let m = decomp.m_matrix();
    let gram = m.transpose() * decomp.algebra().inner_product() * m;
    Ok(NormHandle::new(Quadratic::new(gram)?))
}
