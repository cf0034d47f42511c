//! Acceptance criteria, run in sequence so that the wall-clock limits are
//! measured without interference. Each criterion prints one line.

use std::time::{Duration, Instant};

use finslerlab::chebyshev::*;
use finslerlab::geometry::*;
use finslerlab::norms::{self, FnNorm, MaxNorm, NormHandle, Quadratic, Randers, Smoothness};
use finslerlab::obstruction::*;
use finslerlab::presets;
use finslerlab::smoothing::*;
use finslerlab::submersion::*;
use finslerlab::util;
use nalgebra::{DMatrix, DVector};

type Outcome = Result<String, String>;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

fn ensure(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err(e: finslerlab::Error) -> String {
    e.to_string()
}

/// `(|y|^4 + sum y_i^4)^(1/4)`, strongly convex unlike the plain l^4 norm.
fn quartic() -> NormHandle {
    NormHandle::new(FnNorm::new(3, Smoothness::Smooth, "quartic", |y| {
        let s = y.norm_squared();
        (s * s + y.iter().map(|t| t.powi(4)).sum::<f64>()).powf(0.25)
    }))
}

fn flat_zero_curvature() -> Outcome {
    let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5]);
    let charts = [
        ("randers", FlatChart::new(NormHandle::new(Randers::new(q.clone(), v(&[0.2, -0.1, 0.3])).map_err(err)?))),
        ("quadratic", FlatChart::new(NormHandle::new(Quadratic::new(q).map_err(err)?))),
        ("quartic", FlatChart::new(quartic())),
    ];
    let mut worst = 0.0f64;
    for (seed, (_, chart)) in charts.iter().enumerate() {
        for f in sample_flags(3, 200, 1.0, 100 + seed as u64) {
            worst = worst.max(flag_curvature(chart, &f).map_err(err)?.abs());
        }
    }
    ensure(worst <= 1e-6, format!("max |K| = {worst:.3e} over 3 x 200 flags"))
}

fn round_sphere_oracle() -> Outcome {
    let chart = ExplicitChart::round_sphere(2);
    let (mut dk, mut dric) = (0.0f64, 0.0f64);
    for f in sample_flags(2, 100, 0.9, 2) {
        let r = curvature_report(&chart, &f).map_err(err)?;
        let fy = pullback_metric(&chart, &f.x, &f.y).map_err(err)?;
        dk = dk.max((r.flag - 1.0).abs());
        dric = dric.max((r.ricci - fy * fy).abs());
    }
    ensure(dk <= 1e-3 && dric <= 1e-3, format!("max |K - 1| = {dk:.3e}, max |Ric - F^2| = {dric:.3e}"))
}

fn u2_chebyshev() -> Result<ChebyshevNorm, String> {
    ChebyshevNorm::new(presets::u2_s3().map_err(err)?, presets::u2_f0()).map_err(err)
}

fn chebyshev_closed_form() -> Outcome {
    let c = u2_chebyshev()?;
    let mut r = util::rng(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let w = util::gaussian_vector(4, &mut r);
        let val = chebyshev_evaluate(&c, &w).map_err(err)?;
        worst = worst.max((val.value - presets::u2_chebyshev_closed_form(&w)).abs());
    }
    let sphere: Vec<DVector<f64>> =
        util::sphere_directions(3, 500).into_iter().map(|s| v(&[s[0], s[1], s[2], 0.0])).collect();
    let rep = indicatrix_smoothness_probe(&c, 500, &sphere).map_err(err)?;
    ensure(
        worst <= 1e-5 && rep.projection_slack >= -1e-6 && rep.candidate_slack >= -1e-6,
        format!(
            "max |F~ - closed form| = {worst:.3e}, projection slack {:.3e}, sphere slack {:.3e}",
            rep.projection_slack, rep.candidate_slack
        ),
    )
}

fn delta_certificates() -> Outcome {
    let c = u2_chebyshev()?
        .reconfigured(ChebyshevConfig { restarts: 4, budget: 64, ..Default::default() })
        .map_err(err)?;
    let mut r = util::rng(4);
    let (mut gap, mut cert) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let u = util::gaussian_vector(3, &mut r);
        let dv = delta_vector_search(&c, &u).map_err(err)?;
        gap = gap.max(dv.gap);
        cert = cert.max(dv.certificate);
    }
    ensure(gap <= 1e-5 && cert <= 1e-5, format!("max gap {gap:.3e}, max certificate {cert:.3e} over 50 vectors"))
}

fn hopf_submersion() -> Outcome {
    let total = HomogeneousChart::new(presets::su2_biinvariant().map_err(err)?, NormHandle::new(Quadratic::euclidean(3)))
        .map_err(err)?;
    let base_dec = presets::su2_s2().map_err(err)?;
    let base = HomogeneousChart::new(base_dec.clone(), presets::normal_norm(&base_dec).map_err(err)?).map_err(err)?;
    let cfg = SubmersionCheckConfig { flags: 100, slack: 1e-5, ..Default::default() };
    let rep = submersion_inequality_check(&total, &base, base_dec.to_m(), &cfg).map_err(err)?;
    ensure(
        rep.pass() && rep.samples.len() == 100,
        format!("{} flags, worst K_total - K_base = {:.3e}", rep.samples.len(), rep.worst_gap),
    )
}

fn nonnegative_delta_curvature() -> Outcome {
    let chart = HomogeneousChart::new(presets::u2_s3().map_err(err)?, presets::u2_f0()).map_err(err)?;
    let rad = 0.3 * chart.radius();
    let mut min = f64::INFINITY;
    for f in sample_flags(3, 200, rad, 6) {
        min = min.min(flag_curvature(&chart, &f).map_err(err)?);
    }
    ensure(min >= -1e-5, format!("min K = {min:.6} over 200 flags"))
}

fn max_norm_smoothing() -> Outcome {
    let f = NormHandle::new(MaxNorm::new(2));
    let stages = approximate_singular_norm(&f, &[0.4, 0.2, 0.1, 0.05], 9).map_err(err)?;
    let convex = stages.iter().all(|s| s.strong_convexity >= s.epsilon * 0.999);
    let last = stages.last().map(|s| s.sup_gap).unwrap_or(f64::INFINITY);
    let gaps: Vec<String> = stages.iter().map(|s| format!("{:.4}", s.sup_gap)).collect();
    ensure(convex && last < 0.05, format!("sup gaps [{}], strongly convex stages: {convex}", gaps.join(", ")))
}

fn normal_to_delta() -> Outcome {
    let rep = normal_to_delta_sequence(presets::u2_s3().map_err(err)?, &presets::u2_f0(), &SequenceConfig::default())
        .map_err(err)?;
    let gaps: Vec<String> = rep.stages.iter().map(|s| format!("{:.4}", s.sup_gap)).collect();
    let f0 = presets::u2_f0();
    let mut family = Vec::new();
    for eps in [0.5, 0.2, 0.1, 0.05] {
        family.push(norms::c0_distance(&presets::u2_f_epsilon(eps).map_err(err)?, &f0, 512).map_err(err)?);
    }
    let monotone = family.windows(2).all(|w| w[1] < w[0]);
    let fam: Vec<String> = family.iter().map(|g| format!("{g:.4}")).collect();
    ensure(
        rep.decreasing && rep.final_gap < 0.05 && monotone,
        format!("sequence gaps [{}], F_eps gaps [{}]", gaps.join(", "), fam.join(", ")),
    )
}

fn fss_suite() -> Outcome {
    let positives = [
        ("torus", presets::torus(2).map_err(err)?),
        ("su(2)+su(2)", presets::s3xs3().map_err(err)?),
    ];
    let negatives = [
        ("su(2)/0", presets::su2_biinvariant().map_err(err)?),
        ("u(2)/u(1)", presets::u2_s3().map_err(err)?),
        ("so(3)/so(2)", presets::so3_s2().map_err(err)?),
    ];
    let (mut worst_g, mut worst_k) = (0.0f64, 0.0f64);
    for (name, d) in &positives {
        let cert = fss_search(d, DEFAULT_BUDGET).ok_or(format!("{name}: no certificate"))?;
        if !cert.verdict() {
            return Err(format!("{name}: certificate fails its checks"));
        }
        let chart = HomogeneousChart::new(d.clone(), presets::normal_norm(d).map_err(err)?).map_err(err)?;
        let rep = totally_geodesic_flat_check(&chart, &cert.flat_subspace(d), 20, 9).map_err(err)?;
        if !rep.pass {
            return Err(format!("{name}: flat check failed {rep:?}"));
        }
        worst_g = worst_g.max(rep.max_normal_spray);
        worst_k = worst_k.max(rep.max_flat_curvature);
    }
    for (name, d) in &negatives {
        if fss_search(d, DEFAULT_BUDGET).is_some() {
            return Err(format!("{name}: unexpected certificate"));
        }
    }
    Ok(format!("2 certificates, 3 negatives; max normal spray {worst_g:.3e}, max in-flat |K| {worst_k:.3e}"))
}

fn localization() -> Outcome {
    let chart = ExplicitChart::randers_sphere(0.3);
    let mut worst = 0.0f64;
    for f in sample_flags(2, 20, 0.4, 10) {
        let (a, b) = localization_check(&chart, &f).map_err(err)?;
        worst = worst.max((a - b).abs());
    }
    ensure(worst <= 1e-3, format!("max |K - K_loc| = {worst:.3e} over 20 flags"))
}

fn classification() -> Outcome {
    let spots = [
        ("SO(n)", "SO(n−1)", 1),
        ("SU(n)", "SU(n−1)", 2),
        ("Sp(2)", "SU(2)", 3),
        ("SU(5)", "Sp(2)S¹", 3),
        ("SU(3)×SO(3)", "U(2)", 4),
    ];
    for (g, h, family) in spots {
        let m = classification_lookup(g, h).map_err(err)?.ok_or(format!("{g}/{h}: no entry"))?;
        if m.entry.family != family {
            return Err(format!("{g}/{h}: family {} instead of {family}", m.entry.family));
        }
    }
    let mut count = 0;
    for entry in classification_table() {
        for (g, h) in entry.presentations {
            let m = classification_lookup(g, h).map_err(err)?.ok_or(format!("{g}/{h}: no entry"))?;
            if m.entry.family != entry.family || m.entry.space != entry.space {
                return Err(format!("{g}/{h}: matched {}", m.entry.space));
            }
            count += 1;
        }
    }
    if classification_lookup("SU(2)×SU(2)", "trivial").map_err(err)?.is_some() {
        return Err("SU(2)×SU(2)/e should not match".into());
    }
    Ok(format!("5 spot checks and {count} table presentations"))
}

type Criterion = (usize, &'static str, u64, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        (1, "flat metrics have zero curvature", 5, flat_zero_curvature),
        (2, "round sphere oracle", 10, round_sphere_oracle),
        (3, "Chebyshev closed form and indicatrix", 30, chebyshev_closed_form),
        (4, "delta-vector certificates", 60, delta_certificates),
        (5, "submersion inequality", 60, hopf_submersion),
        (6, "non-negative delta-homogeneous curvature", 60, nonnegative_delta_curvature),
        (7, "max-norm smoothing pipeline", 60, max_norm_smoothing),
        (8, "normal to delta approximation", 120, normal_to_delta),
        (9, "FSS obstruction suite", 60, fss_suite),
        (10, "localization consistency", 60, localization),
        (11, "classification table", 1, classification),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, run) in criteria {
        let t = Instant::now();
        let outcome = run();
        let elapsed = t.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let (pass, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        println!(
            "criterion {id}: {} {name}: {detail} ({:.2} s, limit {limit} s)",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        if !pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
