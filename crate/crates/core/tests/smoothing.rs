use std::time::Instant;

use finslerlab::lie::MatrixLieAlgebra;
use finslerlab::norms::{self, MaxNorm, NormHandle, Quadratic};
use finslerlab::presets;
use finslerlab::smoothing::*;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

#[test]
fn mollifier_mass_and_support() {
    for dim in 1..=4 {
        let m = Mollifier::new(dim, &SmoothingConfig::new(0.3)).unwrap();
        let total: f64 = m.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(m.nodes.iter().all(|y| y.norm() <= 0.3));
        assert!(m.weights.iter().all(|w| *w >= 0.0));
        assert!(m.mass_error < 0.05, "dim {dim}: {}", m.mass_error);
    }
    assert!(Mollifier::new(5, &SmoothingConfig::new(0.3)).is_err());
}

#[test]
fn euclidean_mollification_stays_close() {
    let f = NormHandle::new(Quadratic::euclidean(2));
    let m = mollify(&f, &SmoothingConfig::new(0.1)).unwrap();
    assert!(m.eval(&DVector::zeros(2)) > 0.0);
    for k in 0..32 {
        let t = k as f64 * 0.2;
        let x = v(&[t.cos(), t.sin()]);
        assert!((m.eval(&x) - 1.0).abs() <= 0.1);
    }
}

#[test]
fn rehomogenized_norm_is_homogeneous() {
    let f = NormHandle::new(MaxNorm::new(2));
    let m = mollify(&f, &SmoothingConfig::new(0.1)).unwrap();
    let f2 = rehomogenize(&m, 1e-15).unwrap();
    let x = v(&[0.3, -0.7]);
    assert!((f2.eval(&(&x * 2.0)) - 2.0 * f2.eval(&x)).abs() < 1e-13);
    let r = ray_root(&m, &x.normalize(), 1e-15).unwrap();
    assert!((m.eval(&(x.normalize() * r)) - 1.0).abs() < 1e-13);
    let c = f2.eval(&v(&[1.0, 1.0]));
    eprintln!("F_2(1,1) = {c}");
    assert!(c > 1.0);
}

#[test]
fn large_epsilon_fails_bracketing() {
    let f = NormHandle::new(MaxNorm::new(2));
    let m = mollify(&f, &SmoothingConfig::new(6.0)).unwrap();
    assert!(rehomogenize(&m, 1e-12).is_err());
}

#[test]
fn regularize_euclidean_and_guard() {
    let f = NormHandle::new(Quadratic::euclidean(3));
    let r = regularize(&f, 0.2).unwrap();
    let x = v(&[0.3, 1.0, -2.0]);
    assert!((r.eval(&x) - 1.2f64.sqrt() * x.norm()).abs() < 1e-14);
    assert!(regularize(&f, 0.0).is_err());
}

#[test]
fn max_norm_schedule() {
    let f = NormHandle::new(MaxNorm::new(2));
    let t = Instant::now();
    let stages = approximate_singular_norm(&f, &[0.4, 0.2, 0.1, 0.05], 9).unwrap();
    for s in &stages {
        eprintln!("eps {} gap {} sc {} mass {}", s.epsilon, s.sup_gap, s.strong_convexity, s.mass_error);
        assert!(s.strong_convexity >= s.epsilon * 0.999);
    }
    assert!(stages.windows(2).all(|w| w[1].sup_gap <= w[0].sup_gap * 1.1));
    assert!(stages.last().unwrap().sup_gap < 0.05);
    eprintln!("{:?}", t.elapsed());
}

#[test]
fn averaging_quadratic_on_su2() {
    let alg = Arc::new(MatrixLieAlgebra::su(2).unwrap());
    let q = DMatrix::from_diagonal(&v(&[1.0, 1.5, 2.0]));
    let f = NormHandle::new(Quadratic::new(q).unwrap());
    let avg = ad_average(&f, alg.clone(), 4096, 1).unwrap();
    let oracle = NormHandle::new(Quadratic::new(DMatrix::identity(3, 3) * 1.5).unwrap());
    let gap = norms::c0_distance(&avg, &oracle, 64).unwrap();
    let defect = ad_invariance_defect(&avg, alg.clone(), 64, 2).unwrap();
    eprintln!("oracle gap {gap}, defect {defect}");
    assert!(defect <= 5e-3);
    assert!(gap <= 5e-3 * 1.5f64.sqrt());
    let small = ad_invariance_defect(&ad_average(&f, alg.clone(), 64, 1).unwrap(), alg, 64, 2).unwrap();
    assert!(small > defect);
}

#[test]
fn averaging_is_trivial_on_abelian() {
    let alg = Arc::new(MatrixLieAlgebra::abelian(2).unwrap());
    let f = NormHandle::new(MaxNorm::new(2));
    let avg = ad_average(&f, alg, 16, 1).unwrap();
    let x = v(&[0.3, -2.0]);
    assert_eq!(avg.eval(&x), f.eval(&x));
}

#[test]
fn u2_sequence_two_stages() {
    let cfg = SequenceConfig { schedule: vec![0.4, 0.2], directions: 0, ..SequenceConfig::default() };
    let rep = normal_to_delta_sequence(presets::u2_s3().unwrap(), &presets::u2_f0(), &cfg).unwrap();
    assert_eq!(rep.stages.len(), 2);
    assert!(rep.decreasing);
    assert!(rep.stages[1].sup_gap < 0.2);
}
