use std::sync::Arc;

use finslerlab::geometry::{HomogeneousChart, FlatChart};
use finslerlab::lie::{MatrixLieAlgebra, ReductiveDecomposition};
use finslerlab::norms::{FnNorm, MaxNorm, NormHandle, Quadratic, Randers, Smoothness};
use finslerlab::presets;
use finslerlab::submersion::*;
use nalgebra::{DMatrix, DVector};

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

fn drop_third() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
}

fn chebyshev_closed_form() -> NormHandle {
    NormHandle::new(FnNorm::new(4, Smoothness::Singular, "|v| + |d|", presets::u2_chebyshev_closed_form))
}

#[test]
fn identity_projection_keeps_the_norm() {
    let f = NormHandle::new(Randers::new(DMatrix::identity(2, 2), v(&[0.3, 0.1])).unwrap());
    let u = v(&[0.4, -1.2]);
    let val = induced_norm(&DMatrix::identity(2, 2), &f, &u).unwrap();
    assert!((val - f.eval(&u)).abs() < 1e-14);
}

#[test]
fn euclidean_projection_and_lift() {
    let f = NormHandle::new(Quadratic::euclidean(3));
    let lift = horizontal_lift(&drop_third(), &f, &v(&[1.0, 0.0])).unwrap();
    assert!((lift.lift - v(&[1.0, 0.0, 0.0])).norm() < 1e-9);
    assert!((lift.value - 1.0).abs() < 1e-12);
    assert!(!lift.non_unique);
}

#[test]
fn strictly_convex_lift_is_unique() {
    let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.3, 0.5, 1.0, 0.2, 0.3, 0.2, 3.0]);
    let f = NormHandle::new(Quadratic::new(q).unwrap());
    let lift = horizontal_lift(&drop_third(), &f, &v(&[0.7, -0.4])).unwrap();
    assert!(!lift.non_unique);
    assert!((drop_third() * &lift.lift - v(&[0.7, -0.4])).norm() < 1e-14);
}

#[test]
fn chebyshev_fiber_has_a_segment_of_minimizers() {
    let dec = presets::u2_s3().unwrap();
    let sub = LinearSubmersion::new(dec.to_m().clone(), chebyshev_closed_form()).unwrap();
    let lift = sub.horizontal_lift(&v(&[1.0, 0.0, 0.0])).unwrap();
    assert!((lift.value - 2.0).abs() < 1e-9);
    assert!(lift.non_unique);
    // the segment (1+t, 0, 0, 1-t), t in [-1, 1]
    assert!((lift.extent - 2.0 * 2f64.sqrt()).abs() < 1e-6, "{}", lift.extent);
}

#[test]
fn max_norm_corner_lift_is_unique() {
    let f = NormHandle::new(MaxNorm::new(2));
    let pi = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let lift = horizontal_lift(&pi, &f, &v(&[2.0])).unwrap();
    assert!((lift.value - 1.0).abs() < 1e-9);
    assert!(!lift.non_unique);
}

#[test]
fn u2_pushdown_to_the_bc_plane() {
    let dec = presets::u2_s3().unwrap();
    let k = [v(&[1.0, 0.0, 0.0, -1.0]), v(&[1.0, 0.0, 0.0, 1.0])];
    let push = homogeneous_pushdown(&dec, &k, &presets::u2_f0()).unwrap();
    assert_eq!(push.target.dim_m(), 2);
    let f = push.norm();
    for p in [v(&[1.0, 0.0]), v(&[0.3, -0.8]), v(&[2.0, 1.0])] {
        assert!((f.eval(&p) - p.norm()).abs() < 1e-9);
    }
    assert!(push.invariance_defect < 1e-6);
}

#[test]
fn pushdown_to_g_is_rejected() {
    let dec = presets::u2_s3().unwrap();
    let k: Vec<DVector<f64>> = (0..4).map(|i| finslerlab::util::unit(4, i)).collect();
    assert!(homogeneous_pushdown(&dec, &k, &presets::u2_f0()).is_err());
}

#[test]
fn pushdown_composes() {
    let g = Arc::new(MatrixLieAlgebra::u(2).unwrap());
    let dec = ReductiveDecomposition::trivial(g).unwrap();
    let q = DMatrix::from_diagonal(&v(&[1.0, 2.0, 0.5, 3.0]));
    let f = NormHandle::new(Quadratic::new(q).unwrap());
    let k1 = [v(&[1.0, 0.0, 0.0, -1.0])];
    let k2 = [v(&[1.0, 0.0, 0.0, -1.0]), v(&[1.0, 0.0, 0.0, 1.0])];
    let once = homogeneous_pushdown(&dec, &k2, &f).unwrap();
    let step = homogeneous_pushdown(&dec, &k1, &f).unwrap();
    let twice = homogeneous_pushdown(&step.target, &k2, &step.norm()).unwrap();
    for p in [v(&[1.0, 0.0]), v(&[0.3, -0.8])] {
        assert!((once.norm().eval(&p) - twice.norm().eval(&p)).abs() < 1e-6);
    }
}

#[test]
fn randers_image_condition() {
    let f = NormHandle::new(Randers::new(DMatrix::identity(3, 3), v(&[0.2, 0.3, -0.4])).unwrap());
    let sub = LinearSubmersion::new(drop_third(), f).unwrap();
    let rep = sub.image_condition_check(50, 1).unwrap();
    assert!(rep.forward_excess <= 1e-7);
    assert!(rep.unit_fiber_gap <= 1e-6);
}

#[test]
fn hopf_quotient_satisfies_inequality() {
    let total = HomogeneousChart::new(presets::su2_biinvariant().unwrap(), NormHandle::new(Quadratic::euclidean(3))).unwrap();
    let base_dec = presets::su2_s2().unwrap();
    let base = HomogeneousChart::new(base_dec.clone(), presets::normal_norm(&base_dec).unwrap()).unwrap();
    let cfg = SubmersionCheckConfig { flags: 4, ..Default::default() };
    let rep = submersion_inequality_check(&total, &base, base_dec.to_m(), &cfg).unwrap();
    assert!(rep.pass());
    assert!(rep.induced_gap < 1e-9);
    for s in &rep.samples {
        assert!((s.k_total - 1.0).abs() < 1e-4 && (s.k_base - 4.0).abs() < 1e-3, "{} {}", s.k_total, s.k_base);
    }
}

#[test]
fn flat_identity_submersion_is_equality() {
    let f = NormHandle::new(Randers::new(DMatrix::identity(2, 2), v(&[0.3, 0.1])).unwrap());
    let chart = FlatChart::new(f);
    let cfg = SubmersionCheckConfig { flags: 3, x_radius: 1.0, ..Default::default() };
    let rep = submersion_inequality_check(&chart, &chart, &DMatrix::identity(2, 2), &cfg).unwrap();
    assert!(rep.pass());
    assert!(rep.worst_gap.abs() < 1e-12);
}
