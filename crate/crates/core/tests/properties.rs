use std::sync::Arc;

use finslerlab::chebyshev::ChebyshevNorm;
use finslerlab::geometry::*;
use finslerlab::lie::MatrixLieAlgebra;
use finslerlab::norms::{self, FnNorm, MaxNorm, Smoothness, NormHandle, Polyhedral, Quadratic, Randers};
use finslerlab::presets;
use finslerlab::smoothing::{mollify, SmoothingConfig};
use finslerlab::submersion::LinearSubmersion;
use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;

fn vec_in(dim: usize, lo: f64, hi: f64) -> impl Strategy<Value = DVector<f64>> {
    proptest::collection::vec(lo..hi, dim).prop_map(DVector::from_vec)
}

fn nonzero(dim: usize) -> impl Strategy<Value = DVector<f64>> {
    vec_in(dim, -2.0, 2.0).prop_filter("away from the origin", |v| v.norm() > 0.2)
}

fn randers3() -> NormHandle {
    let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5]);
    NormHandle::new(Randers::new(q, DVector::from_row_slice(&[0.2, -0.1, 0.3])).unwrap())
}

fn smooth_norms() -> Vec<NormHandle> {
    vec![
        NormHandle::new(Quadratic::diagonal(&[1.0, 2.0, 0.5]).unwrap()),
        randers3(),
        NormHandle::new(FnNorm::new(3, Smoothness::Smooth, "quartic", |y| {
            let s = y.norm_squared();
            (s * s + y.iter().map(|t| t.powi(4)).sum::<f64>()).powf(0.25)
        })),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn adjoint_preserves_the_inner_product(x in vec_in(4, -2.0, 2.0)) {
        let g = MatrixLieAlgebra::u(2).unwrap();
        let ad = g.adjoint(&x).unwrap();
        let q = g.inner_product();
        prop_assert!((ad.transpose() * q * &ad - q).norm() <= 1e-8);
        prop_assert!(ad.determinant().abs() > 0.5);
    }

    #[test]
    fn rank_is_basis_independent(entries in proptest::collection::vec(-1.0f64..1.0, 9)) {
        let g = MatrixLieAlgebra::su(2).unwrap();
        let t = DMatrix::from_vec(3, 3, entries) + DMatrix::identity(3, 3) * 2.5;
        prop_assume!(t.determinant().abs() > 0.1);
        let basis: Vec<_> = (0..3)
            .map(|j| {
                let mut m = DMatrix::<Complex<f64>>::zeros(2, 2);
                for i in 0..3 {
                    m += &g.basis()[i] * Complex::new(t[(i, j)], 0.0);
                }
                m
            })
            .collect();
        let h = MatrixLieAlgebra::from_basis("su(2) rebased", g.field(), 2, basis, None).unwrap();
        prop_assert_eq!(h.rank(5), g.rank(5));
    }

    #[test]
    fn euler_identity_and_zero_homogeneity(y in nonzero(3), lambda in 0.2f64..5.0) {
        for f in smooth_norms() {
            let g = f.fundamental_tensor(&y).unwrap();
            let fy = f.eval(&y);
            prop_assert!((y.dot(&(&g * &y)) - fy * fy).abs() <= 1e-7 * fy * fy);
            let gl = f.fundamental_tensor(&(&y * lambda)).unwrap();
            prop_assert!((gl - &g).norm() <= 1e-7 * g.norm());
        }
    }

    #[test]
    fn c0_distance_triangle(a in 0.5f64..2.0, b in 0.5f64..2.0) {
        let f1 = NormHandle::new(MaxNorm::new(2));
        let f2 = NormHandle::new(Quadratic::diagonal(&[a, b]).unwrap());
        let f3 = NormHandle::new(norms::LpNorm::new(2, 1.5).unwrap());
        let d12 = norms::c0_distance(&f1, &f2, 64).unwrap();
        let d23 = norms::c0_distance(&f2, &f3, 64).unwrap();
        let d13 = norms::c0_distance(&f1, &f3, 64).unwrap();
        prop_assert!(d13 <= d12 + d23 + 1e-12);
    }

    #[test]
    fn planar_indicatrix_is_convex(b0 in -0.5f64..0.5, b1 in -0.5f64..0.5) {
        prop_assume!(b0 * b0 + b1 * b1 < 0.6);
        let f = NormHandle::new(Randers::new(DMatrix::identity(2, 2), DVector::from_row_slice(&[b0, b1])).unwrap());
        let pts = norms::indicatrix_sample(&f, 48).unwrap();
        let n = pts.len();
        for i in 0..n {
            let (p, q, r) = (&pts[i], &pts[(i + 1) % n], &pts[(i + 2) % n]);
            let cross = (q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0]);
            prop_assert!(cross > 0.0);
        }
    }

    #[test]
    fn spray_and_riemann_scale_with_y(x in vec_in(2, -0.4, 0.4), y in nonzero(2), lambda in 0.5f64..2.0) {
        let chart = ExplicitChart::randers_sphere(0.3);
        let g1 = spray_coefficients(&chart, &x, &y).unwrap();
        let g2 = spray_coefficients(&chart, &x, &(&y * lambda)).unwrap();
        prop_assert!((g2 - &g1 * (lambda * lambda)).norm() <= 1e-6 * (1.0 + g1.norm()) * lambda * lambda);
        let r1 = riemann_curvature(&chart, &x, &y).unwrap();
        let r2 = riemann_curvature(&chart, &x, &(&y * lambda)).unwrap();
        prop_assert!((r2 - &r1 * (lambda * lambda)).norm() <= 1e-4 * r1.norm() * lambda * lambda + 1e-8);
    }

    #[test]
    fn flag_curvature_ignores_reparametrization(
        x in vec_in(2, -0.4, 0.4),
        y in nonzero(2),
        v in nonzero(2),
        a in prop_oneof![-3.0f64..-0.3, 0.3f64..3.0],
        b in -3.0f64..3.0,
    ) {
        let chart = ExplicitChart::randers_sphere(0.3);
        let Ok(f1) = FlagTriple::new(x.clone(), y.clone(), v.clone()) else { return Ok(()); };
        let Ok(f2) = FlagTriple::new(x, y.clone(), &v * a + &y * b) else { return Ok(()); };
        let k1 = flag_curvature(&chart, &f1).unwrap();
        let k2 = flag_curvature(&chart, &f2).unwrap();
        prop_assert!((k1 - k2).abs() <= 1e-5 * k1.abs().max(1.0));
    }

    #[test]
    fn geodesics_have_constant_speed(x in vec_in(2, -0.3, 0.3), y in nonzero(2)) {
        let chart = ExplicitChart::randers_sphere(0.3);
        let y = y.normalize() * 0.5;
        let traj = geodesic_integrate(&chart, &x, &y, 0.5, 100).unwrap();
        prop_assert!(traj.speed_drift() <= 1e-5);
    }

    #[test]
    fn induced_norm_is_homogeneous_and_convex(u in nonzero(2), w in nonzero(2), lambda in 0.1f64..4.0) {
        let pi = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, -0.3]);
        let sub = LinearSubmersion::new(pi.clone(), randers3()).unwrap();
        let fu = sub.induced_norm(&u).unwrap();
        let fl = sub.induced_norm(&(&u * lambda)).unwrap();
        prop_assert!((fl - lambda * fu).abs() <= 1e-7 * lambda * fu);
        let fw = sub.induced_norm(&w).unwrap();
        let mid = sub.induced_norm(&((&u + &w) * 0.5)).unwrap();
        prop_assert!(mid <= 0.5 * (fu + fw) + 1e-9);
        let lift = sub.horizontal_lift(&u).unwrap();
        prop_assert!((&pi * &lift.lift - &u).norm() <= 1e-12 * (1.0 + u.norm()));
        prop_assert!((randers3().eval(&lift.lift) - fu).abs() <= 1e-7 * fu);
    }

    #[test]
    fn chebyshev_norm_is_invariant_and_convex(w in nonzero(4), z in nonzero(4), x in vec_in(4, -1.0, 1.0)) {
        let dec = presets::u2_s3().unwrap();
        let alg = dec.algebra().clone();
        let c = ChebyshevNorm::new(dec.clone(), presets::u2_f0()).unwrap();
        let fw = c.evaluate(&w).unwrap();
        let moved = alg.adjoint(&x).unwrap() * &w;
        prop_assert!((c.evaluate(&moved).unwrap() - fw).abs() <= 1e-4 * fw);
        let fz = c.evaluate(&z).unwrap();
        prop_assert!(c.evaluate(&((&w + &z) * 0.5)).unwrap() <= 0.5 * (fw + fz) + 1e-6);
    }

    #[test]
    fn chebyshev_pushes_down_to_the_base(u in nonzero(3)) {
        let dec = presets::u2_s3().unwrap();
        let c = ChebyshevNorm::new(dec.clone(), presets::u2_f0()).unwrap();
        let sub = LinearSubmersion::new(dec.to_m().clone(), c.handle()).unwrap();
        let induced = sub.induced_norm(&u).unwrap();
        let f = presets::u2_f0().eval(&u);
        prop_assert!((induced - f).abs() <= 1e-5 * f.max(1.0));
    }

    #[test]
    fn mollification_sandwich(x in vec_in(2, -2.0, 2.0), eps in 0.05f64..0.5) {
        // the max norm is 1-Lipschitz for the Euclidean norm, so L = 1
        let f = NormHandle::new(MaxNorm::new(2));
        let m = mollify(&f, &SmoothingConfig::new(eps)).unwrap();
        let (a, b) = (m.eval(&x), f.eval(&x));
        prop_assert!(a >= b - 1e-12 && a <= b + eps + 1e-12);
    }
}

#[test]
fn polyhedral_indicatrix_is_convex_but_not_strictly() {
    let f = NormHandle::new(
        Polyhedral::new(vec![
            DVector::from_row_slice(&[1.0, 0.0]),
            DVector::from_row_slice(&[0.0, 1.0]),
            DVector::from_row_slice(&[-1.0, -1.0]),
        ])
        .unwrap(),
    );
    let pts = norms::indicatrix_sample(&f, 60).unwrap();
    let n = pts.len();
    let mut straight = 0;
    for i in 0..n {
        let (p, q, r) = (&pts[i], &pts[(i + 1) % n], &pts[(i + 2) % n]);
        let cross = (q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0]);
        assert!(cross >= -1e-12);
        if cross.abs() < 1e-12 {
            straight += 1;
        }
    }
    assert!(straight > 0);
}

#[test]
fn averaging_twice_changes_little() {
    let alg = Arc::new(MatrixLieAlgebra::su(2).unwrap());
    let f = NormHandle::new(Quadratic::diagonal(&[1.0, 1.5, 2.0]).unwrap());
    let once = finslerlab::smoothing::ad_average(&f, alg.clone(), 1024, 1).unwrap();
    let twice = finslerlab::smoothing::ad_average(&once, alg, 1024, 2).unwrap();
    let gap = norms::c0_distance(&once, &twice, 64).unwrap();
    assert!(gap <= 2e-2, "{gap}");
}
