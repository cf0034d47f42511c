use std::time::Instant;

use finslerlab::chebyshev::*;
use finslerlab::norms::{NormHandle, Quadratic};
use finslerlab::presets;
use finslerlab::util;
use nalgebra::DVector;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

fn u2() -> ChebyshevNorm {
    ChebyshevNorm::new(presets::u2_s3().unwrap(), presets::u2_f0()).unwrap()
}

#[test]
fn bi_invariant_su2_is_its_own_chebyshev_norm() {
    let c = ChebyshevNorm::new(presets::su2_biinvariant().unwrap(), NormHandle::new(Quadratic::euclidean(3))).unwrap();
    assert!((c.evaluate(&v(&[1.0, 0.0, 0.0])).unwrap() - 1.0).abs() < 1e-12);
    let w = v(&[0.3, -0.4, 1.2]);
    assert!((c.evaluate(&w).unwrap() - w.norm()).abs() < 1e-12);
}

#[test]
fn u2_closed_form() {
    let c = u2();
    assert!((c.evaluate(&v(&[0.0, 0.0, 0.0, 1.0])).unwrap() - 1.0).abs() < 1e-12);
    assert!((c.evaluate(&v(&[1.0, 0.0, 0.0, 1.0])).unwrap() - 2.0).abs() < 1e-9);
    let mut r = util::rng(3);
    let t = Instant::now();
    for _ in 0..100 {
        let w = util::gaussian_vector(4, &mut r);
        let val = chebyshev_evaluate(&c, &w).unwrap();
        let exact = presets::u2_chebyshev_closed_form(&w);
        assert!((val.value - exact).abs() < 1e-8, "{} vs {exact}", val.value);
        assert!((c.projected(&val.orbit_point) - val.value).abs() < 1e-12);
        assert!((&val.adjoint * &w - &val.orbit_point).norm() < 1e-9);
    }
    eprintln!("100 evaluations: {:?}", t.elapsed());
}

#[test]
fn budget_monotone() {
    let base = u2();
    let w = v(&[0.2, -0.7, 0.4, 0.1]);
    let mut last = 0.0;
    for b in [1, 2, 4, 8, 16, 32] {
        let c = base.reconfigured(ChebyshevConfig { budget: b, restarts: 2, levels: 6, ..Default::default() }).unwrap();
        let val = c.evaluate(&w).unwrap();
        assert!(val >= last);
        last = val;
    }
}

#[test]
fn delta_vector_for_central_example() {
    let c = u2();
    let dv = delta_vector_search(&c, &v(&[1.0, 0.0, 0.0])).unwrap();
    assert!(dv.gap <= 1e-5 && dv.certificate <= 1e-5);
    let l = &dv.lift;
    assert!((l[1]).abs() < 1e-12 && (l[2]).abs() < 1e-12);
    assert!((l[0] + l[3] - 2.0).abs() < 1e-9 && l[0] >= -1e-9 && l[3] >= -1e-9);
}

#[test]
fn delta_vector_for_off_diagonal_direction() {
    let c = u2();
    let dv = delta_vector_search(&c, &v(&[0.0, 1.0, 0.0])).unwrap();
    assert!((dv.value - 1.0).abs() < 1e-9);
    assert!((&dv.lift - v(&[0.0, 1.0, 0.0, 0.0])).norm() < 1e-6);
}

#[test]
fn non_delta_vector_is_detected() {
    let c = u2();
    // (2,0,0,0) projects to (1,0,0) and has gap 0 by the closed form
    let cert = verify_delta_vector(&c, &v(&[2.0, 0.0, 0.0, 0.0]), 64, 1).unwrap();
    assert!(cert.gap.abs() < 1e-9);
    let cert = verify_delta_vector(&c, &v(&[1.0, 1.0, 0.0, 1.0]), 64, 1).unwrap();
    let expect = 2f64.sqrt() + 1.0 - 5f64.sqrt();
    assert!((cert.gap - expect).abs() < 1e-8);
    assert!(!cert.pass);
}

#[test]
fn ball_projection_u2() {
    let rep = chebyshev_submersion_check(&u2(), 10, 4).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn indicatrix_containments_and_crease() {
    let c = u2();
    let sphere: Vec<DVector<f64>> = util::sphere_directions(3, 20)
        .into_iter()
        .map(|s| v(&[s[0], s[1], s[2], 0.0]))
        .collect();
    let rep = indicatrix_smoothness_probe(&c, 50, &sphere).unwrap();
    assert!(rep.projection_slack >= -1e-6);
    assert!(rep.candidate_slack >= -1e-6);
    let on_sphere = rep.creases.iter().filter(|cr| cr.point[3].abs() < 1e-9 && cr.direction[3] == 1.0).count();
    assert_eq!(on_sphere, sphere.len());
}
