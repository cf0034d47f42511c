use finslerlab::geometry::*;
use finslerlab::norms::{LpNorm, NormHandle, Quadratic, Randers};
use finslerlab::presets;
use finslerlab::util;
use nalgebra::{DMatrix, DVector};

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

#[test]
fn flat_randers_has_zero_spray_and_curvature() {
    let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5]);
    let chart = FlatChart::new(NormHandle::new(Randers::new(q, v(&[0.2, -0.1, 0.3])).unwrap()));
    for f in sample_flags(3, 5, 1.0, 3) {
        let r = curvature_report(&chart, &f).unwrap();
        assert_eq!(r.spray.amax(), 0.0);
        assert!(r.flag.abs() < 1e-12);
    }
}

#[test]
fn stereographic_sphere_has_unit_curvature() {
    let chart = ExplicitChart::round_sphere(2);
    for f in sample_flags(2, 5, 0.8, 7) {
        let r = curvature_report(&chart, &f).unwrap();
        assert!((r.flag - 1.0).abs() < 1e-4, "K = {}", r.flag);
        let fy = pullback_metric(&chart, &f.x, &f.y).unwrap();
        assert!((r.ricci - fy * fy).abs() < 1e-4 * fy * fy);
        assert!(r.flagpole_residual < 1e-4);
    }
}

#[test]
fn stereographic_spray_matches_christoffel_oracle() {
    // g = l^2 I with l = 2/(1+|x|^2): 2G = 2 (d log l . y) y - |y|^2 grad log l
    let chart = ExplicitChart::round_sphere(2);
    let (x, y) = (v(&[0.3, -0.2]), v(&[0.7, 0.4]));
    let grad_log = &x * (-2.0 / (1.0 + x.norm_squared()));
    let expect = (&y * (2.0 * grad_log.dot(&y)) - &grad_log * y.norm_squared()) * 0.5;
    let g = spray_coefficients(&chart, &x, &y).unwrap();
    assert!((g - expect).norm() < 1e-8);
}

#[test]
fn homogeneous_chart_is_base_norm_at_origin() {
    let dec = presets::u2_s3().unwrap();
    let chart = HomogeneousChart::new(dec, presets::u2_f0()).unwrap();
    let y = v(&[0.3, -1.0, 0.5]);
    let a = pullback_metric(&chart, &DVector::zeros(3), &y).unwrap();
    assert!((a - presets::u2_f0().eval(&y)).abs() < 1e-12);
    assert!(chart.radius() > 0.5);
}

#[test]
fn su2_transport_matches_matrix_exponential() {
    let dec = presets::su2_biinvariant().unwrap();
    let alg = dec.algebra().clone();
    let chart = HomogeneousChart::new(dec, NormHandle::new(Quadratic::euclidean(3))).unwrap();
    let x = v(&[0.3, 0.0, 0.0]);
    let y = v(&[0.0, 1.0, 0.0]);
    // exp(-x) d/dt exp(x + t y) at t = 0, by central differences of matrix exponentials
    let h = 1e-5;
    let e = |z: &DVector<f64>| (alg.realize(z).unwrap()).exp();
    let d = (e(&(&x + &y * h)) - e(&(&x - &y * h))) / nalgebra::Complex::new(2.0 * h, 0.0);
    let g_inv = e(&(-&x));
    let (coords, resid) = alg.coordinates(&(g_inv * d)).unwrap();
    assert!(resid < 1e-8);
    let transported = chart.transport(&x).unwrap() * &y;
    assert!((transported - &coords).norm() < 1e-8);
    // the Euclidean length equals 2 sin(theta/2)/theta with theta = 2 |x|
    let th = 0.6f64;
    let f = pullback_metric(&chart, &x, &y).unwrap();
    assert!((f - 2.0 * (th / 2.0).sin() / th).abs() < 1e-10);
}

#[test]
fn su2_geodesic_through_origin_is_straight() {
    let dec = presets::su2_biinvariant().unwrap();
    let chart = HomogeneousChart::new(dec, NormHandle::new(Quadratic::euclidean(3))).unwrap();
    let u = v(&[0.4, -0.3, 0.5]);
    let traj = geodesic_integrate(&chart, &DVector::zeros(3), &u, 1.0, 100).unwrap();
    for (t, x) in traj.times.iter().zip(&traj.points) {
        assert!((x - &u * *t).norm() < 1e-6);
    }
    assert!(traj.speed_drift() < 1e-5);
}

#[test]
fn geodesic_leaving_chart_reports_exit_time() {
    let chart = ExplicitChart::randers_sphere(0.3);
    let traj = geodesic_integrate(&chart, &v(&[0.5, 0.0]), &v(&[1.0, 0.0]), 5.0, 200).unwrap();
    assert!(traj.exit_time.is_some());
}

#[test]
fn round_s3_has_constant_unit_curvature() {
    let chart = HomogeneousChart::new(presets::u2_s3().unwrap(), presets::u2_f0()).unwrap();
    let rad = 0.3 * chart.radius();
    for f in sample_flags(3, 4, rad, 11) {
        let k = flag_curvature(&chart, &f).unwrap();
        assert!((k - 1.0).abs() < 1e-4, "K = {k}");
    }
}

#[test]
fn localization_of_riemannian_sphere_is_exact() {
    let chart = ExplicitChart::round_sphere(2);
    let f = FlagTriple::new(v(&[0.2, 0.1]), v(&[0.6, -0.3]), v(&[0.1, 1.0])).unwrap();
    let (a, b) = localization_check(&chart, &f).unwrap();
    assert!((a - 1.0).abs() < 1e-4 && (b - 1.0).abs() < 1e-4, "{a} {b}");
}

#[test]
fn localization_agrees_on_randers_sphere() {
    let chart = ExplicitChart::randers_sphere(0.3);
    for f in sample_flags(2, 3, 0.4, 5) {
        let (a, b) = localization_check(&chart, &f).unwrap();
        assert!((a - b).abs() < 1e-3, "{a} {b}");
    }
}

#[test]
fn flat_lp_chart_localizes_to_zero() {
    let chart = FlatChart::new(NormHandle::new(LpNorm::new(2, 4.0).unwrap()));
    let f = FlagTriple::new(v(&[0.0, 0.0]), v(&[1.0, 0.5]), v(&[0.0, 1.0])).unwrap();
    let (a, b) = localization_check(&chart, &f).unwrap();
    assert!(a.abs() < 1e-9 && b.abs() < 1e-6, "{a} {b}");
}

#[test]
fn torus_flat_is_totally_geodesic_and_fails_fp() {
    let chart = HomogeneousChart::new(presets::torus(2).unwrap(), NormHandle::new(Quadratic::euclidean(2))).unwrap();
    let rep = totally_geodesic_flat_check(&chart, &DMatrix::identity(2, 2), 5, 1).unwrap();
    assert!(rep.pass);
    let fp = fp_condition_sample(&chart, 3, 4, 1).unwrap();
    assert!(!fp.verdict);
}

#[test]
fn round_sphere_satisfies_fp() {
    let fp = fp_condition_sample(&ExplicitChart::round_sphere(2), 3, 4, 2).unwrap();
    assert!(fp.verdict);
}

#[test]
fn spray_is_two_homogeneous() {
    let chart = ExplicitChart::randers_sphere(0.3);
    let mut r = util::rng(9);
    let x = util::random_in_ball(2, 0.5, &mut r);
    let y = util::random_unit(2, &mut r);
    let g1 = spray_coefficients(&chart, &x, &y).unwrap();
    let g2 = spray_coefficients(&chart, &x, &(&y * 2.0)).unwrap();
    assert!((g2 - &g1 * 4.0).norm() < 1e-5 * g1.norm() * 4.0);
}
