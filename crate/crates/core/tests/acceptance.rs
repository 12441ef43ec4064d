//! The ten acceptance criteria. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cw_randers::cosets::{AlgebraElement, ModelSpace};
use cw_randers::flows::{
    apply_flow, commutator_eig1_persistence, cs_unitary, endpoint_spread, geodesic_nonintersection_probe,
    phase_bound_trials, random_su2, random_unit_su2, FlowIsometry, FlowPoint,
};
use cw_randers::geodesy::{build_graph, displacement_profile, distance, refined_distance};
use cw_randers::killing::{
    central_kvf_phases, constant_length_identity, eq_root_pair, orbit_length_report, solve_metric,
    sp_central_only_scan, sp_witness_pair, OrbitParams, Verdict,
};
use cw_randers::matrixcore::{max_abs, ComplexMatrix, SkewHermitian};
use cw_randers::quaternion::{Quaternion, QuaternionMatrix};
use cw_randers::randers::RandersSpec;
use cw_randers::rng::RngStream;
use cw_randers::Error;
use num_complex::Complex64;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn random_params(rng: &mut RngStream) -> OrbitParams {
    loop {
        let l = 1 + rng.index(7);
        let m = 1 + rng.index(7);
        if l + m > 8 {
            continue;
        }
        let x2 = rng.uniform_in(0.1, 3.0) * if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        let (from, to) = (-(l as f64) * x2, m as f64 * x2);
        let x1 = from + rng.uniform_in(0.02, 0.98) * (to - from);
        return OrbitParams::new(l, m, x1, x2, rng.uniform_in(0.1, 10.0)).unwrap();
    }
}

fn max_abs3(r: [f64; 3]) -> f64 {
    r.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(101);
    let worst = (0..100)
        .map(|_| {
            let p = random_params(&mut rng);
            max_abs3(constant_length_identity(&solve_metric(&p).unwrap(), &p).unwrap())
        })
        .fold(0.0, f64::max);
    let t = start.elapsed();
    outcome(
        worst <= 1e-10 && within(t, Duration::from_secs(1)),
        format!("worst residual {worst:.2e} over 100 params, {t:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let p = OrbitParams::new(1, 1, 0.5, 1.0, 1.0).unwrap();
    let s = solve_metric(&p).unwrap();
    let expected = RandersSpec::USphere { n: 1, a: 16.0 / 9.0, b: 4.0 / 3.0, c: -2.0 / 3.0 };
    let coeff_err = match (s, expected) {
        (RandersSpec::USphere { a, b, c, .. }, RandersSpec::USphere { a: ea, b: eb, c: ec, .. }) => {
            (a - ea).abs().max((b - eb).abs()).max((c - ec).abs())
        }
        _ => f64::INFINITY,
    };
    let report =
        orbit_length_report(&s, &AlgebraElement::unitary(p.generator()), 1.0, 1000, &mut RngStream::new(102)).unwrap();
    let t = start.elapsed();
    outcome(
        coeff_err <= 1e-12 && report.gap() <= 1e-8 && within(t, Duration::from_secs(5)),
        format!("(a,b,c) error {coeff_err:.1e}, max-min {:.2e} over 1000 conjugates, {t:.2?}", report.gap()),
    )
}

fn same_pair(p: (f64, f64), q: (f64, f64)) -> f64 {
    let sort = |(a, b): (f64, f64)| if a <= b { (a, b) } else { (b, a) };
    let (p, q) = (sort(p), sort(q));
    (p.0 - q.0).abs().max((p.1 - q.1).abs())
}

fn criterion_3() -> Outcome {
    let mut rng = RngStream::new(103);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let (b, c, length) = (rng.uniform_in(0.1, 4.0), rng.uniform_in(-2.0, 2.0), rng.uniform_in(0.1, 5.0));
        let s = RandersSpec::USphere { n: 1 + rng.index(5), a: b + c * c, b, c };
        worst = worst.max(same_pair(central_kvf_phases(&s, length).unwrap(), eq_root_pair(&s, length).unwrap()));
    }
    let mut rejected = 0;
    let mut min_gap = f64::INFINITY;
    let perturbed = 20;
    for i in 0..perturbed {
        let (b, c) = (rng.uniform_in(0.5, 2.0), rng.uniform_in(-0.8, 0.8));
        let delta = if i < 5 { 1e-3 } else { rng.uniform_in(1e-3, 0.5) };
        let n = 1 + rng.index(3);
        let s = RandersSpec::USphere { n, a: b + c * c + delta, b, c };
        if matches!(central_kvf_phases(&s, 1.0), Err(Error::NotKvfAdmissible { .. })) {
            rejected += 1;
        }
        let (plus, minus) = eq_root_pair(&s, 1.0).unwrap();
        let l = 1 + rng.index(n);
        let mut phases = vec![minus; l];
        phases.extend(vec![plus; n + 1 - l]);
        let x = SkewHermitian::diag_imag(&phases).unwrap();
        let report = orbit_length_report(&s, &AlgebraElement::unitary(x), 1.0, 1000, &mut rng).unwrap();
        min_gap = min_gap.min(report.gap());
    }
    outcome(
        worst <= 1e-10 && rejected == perturbed && min_gap >= 1e-4,
        format!(
            "root mismatch {worst:.1e}; {rejected}/{perturbed} perturbed specs rejected, smallest candidate gap {min_gap:.2e}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = RngStream::new(104);
    let v = SkewHermitian::diag_imag(&[0.5, -0.5]).unwrap();
    let mut spread = 0.0_f64;
    let mut closed = 0.0_f64;
    for _ in 0..5 {
        let g = random_su2(&mut rng);
        let xs: Vec<SkewHermitian> = (0..100).map(|_| random_unit_su2(&mut rng)).collect();
        spread = spread.max(endpoint_spread(&v, &g, &xs).unwrap());
        // -g exp(-pi V) with exp(-pi V) = diag(e^{-i pi/2}, e^{i pi/2}).
        let e = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::from_polar(1.0, -PI * 0.5),
            Complex64::from_polar(1.0, PI * 0.5),
        ]));
        let want = -(g.matrix() * e);
        for x in &xs[..10] {
            let f = FlowIsometry::su2(x.clone(), v.clone(), PI).unwrap();
            if let FlowPoint::Group(h) = apply_flow(&f, &FlowPoint::Group(g.clone())).unwrap() {
                closed = closed.max(max_abs(&(h.matrix() - &want)));
            }
        }
    }
    outcome(
        spread <= 1e-10 && closed <= 1e-12,
        format!("endpoint spread {spread:.2e}, distance to -g exp(-pi V) {closed:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(105);
    let mut violations = 0;
    for n in 2..=6 {
        let rows = phase_bound_trials(&[n], 10_000, &mut rng).unwrap();
        violations += rows.iter().filter(|r| !r.verdict).count();
    }
    let t = start.elapsed();
    outcome(
        violations == 0 && within(t, Duration::from_secs(60)),
        format!("{violations} violations over 5 x 10^4 Haar pairs, {t:.2?}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = RngStream::new(106);
    let mut singular_ok = 0;
    let mut worst_residual = 0.0_f64;
    let mut invertible_ok = 0;
    let mut min_distance = f64::INFINITY;
    for i in 0..200 {
        let k = 1 + i % 3;
        let u = cs_unitary(k, true, &mut rng).unwrap();
        let r = commutator_eig1_persistence(&u, k, k, None).unwrap();
        worst_residual = worst_residual.max(r.common_residual);
        if r.t_grid.len() == 32 && r.has_eig1.iter().all(|&h| h) && r.shared_eigenvector {
            singular_ok += 1;
        }
        let u = cs_unitary(k, false, &mut rng).unwrap();
        let r = commutator_eig1_persistence(&u, k, k, None).unwrap();
        let d = r.distances.iter().copied().fold(f64::INFINITY, f64::min);
        min_distance = min_distance.min(d);
        if d >= 1e-9 {
            invertible_ok += 1;
        }
    }
    outcome(
        singular_ok == 200 && worst_residual <= 1e-8 && invertible_ok == 200,
        format!(
            "singular {singular_ok}/200 persist (residual {worst_residual:.1e}), invertible {invertible_ok}/200 clear (min distance {min_distance:.2e})"
        ),
    )
}

fn criterion_7() -> Outcome {
    let r = geodesic_nonintersection_probe(0.5, 1, 1, 1000, &mut RngStream::new(107)).unwrap();
    outcome(
        r.failures == 0,
        format!("{} eigenvalue-1 events in {} trials, min distance {:.2e}", r.failures, r.trials, r.min_distance),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = RngStream::new(108);
    let mut worst = 0.0_f64;
    let mut count = 0;
    for n in 1..=3 {
        for _ in 0..100 {
            let c = rng.uniform_in(0.05, 0.9) * if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
            let b = rng.uniform_in(0.5, 2.0);
            let s = RandersSpec::SpSphere { n, a1: rng.uniform_in(1.0, 3.0), a2: b + rng.uniform_in(0.1, 1.0), b, c };
            let diag: Vec<Quaternion> = (0..=n)
                .map(|_| {
                    if rng.uniform() < 0.3 {
                        Quaternion::real(0.0)
                    } else {
                        Quaternion::imaginary([rng.normal(), rng.normal(), rng.normal()])
                    }
                })
                .collect();
            let size = diag.iter().map(Quaternion::norm).fold(0.0, f64::max);
            if size == 0.0 {
                continue;
            }
            let w = sp_witness_pair(&QuaternionMatrix::from_diagonal(&diag), &s).unwrap();
            worst = worst.max((w.gap() - 2.0 * c.abs() * size).abs());
            count += 1;
        }
    }
    let s = RandersSpec::SpSphere { n: 2, a1: 1.5, a2: 2.0, b: 1.0, c: 0.4 };
    let mut candidates = vec![AlgebraElement::symplectic(QuaternionMatrix::zeros(3, 3), 0.7).unwrap()];
    candidates.push(AlgebraElement::symplectic_scalar_i(3, 0.6, 0.1).unwrap());
    for _ in 0..4 {
        let diag: Vec<Quaternion> =
            (0..3).map(|_| Quaternion::imaginary([rng.normal(), rng.normal(), rng.normal()])).collect();
        candidates.push(AlgebraElement::symplectic(QuaternionMatrix::from_diagonal(&diag), rng.normal()).unwrap());
    }
    let reports = sp_central_only_scan(&s, &candidates, 1.0, 1000, &mut rng).unwrap();
    let non_central: Vec<_> = reports.iter().filter(|r| !r.central).collect();
    let flagged = non_central.iter().filter(|r| r.report.verdict == Verdict::NonConstant).count();
    let central_ok = reports.iter().filter(|r| r.central).all(|r| r.report.verdict == Verdict::Constant);
    outcome(
        worst <= 1e-12 && flagged == non_central.len() && central_ok,
        format!(
            "witness gap error {worst:.1e} over {count} diagonal X; {flagged}/{} non-central candidates non-constant",
            non_central.len()
        ),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let space = ModelSpace::USphere { n: 1 };
    let g = build_graph(&space, &RandersSpec::round(1), 20_000, 12, &mut RngStream::new(109)).unwrap();
    let mut rng = RngStream::new(209);
    let mut antipodal_err = 0.0_f64;
    let mut raw_err = 0.0_f64;
    for _ in 0..5 {
        let i = rng.index(g.len());
        let x = g.point(i).to_vec();
        let anti: Vec<f64> = x.iter().map(|v| -v).collect();
        let d = refined_distance(&g, &x, &anti).unwrap();
        antipodal_err = antipodal_err.max((d - PI).abs() / PI);
        let (j, _) = g.nearest(&anti);
        let (dist, _) = g.shortest_from(i);
        raw_err = raw_err.max((dist[j] - PI).abs() / PI);
    }
    let mut asym = 0.0_f64;
    for _ in 0..20 {
        let (i, j) = (rng.index(g.len()), rng.index(g.len()));
        if i == j {
            continue;
        }
        let (dij, dji) = (distance(&g, i, j).unwrap().distance, distance(&g, j, i).unwrap().distance);
        asym = asym.max((dij - dji).abs() / dij.max(dji));
    }
    let hopf = FlowIsometry::u_sphere(SkewHermitian::diag_imag(&[1.0, 1.0]).unwrap(), 0.5).unwrap();
    let profile = displacement_profile(&g, &hopf, 50, &mut rng).unwrap();
    let t = start.elapsed();
    outcome(
        antipodal_err <= 0.05 && asym <= 0.01 && profile.spread <= 0.07 && within(t, Duration::from_secs(180)),
        format!(
            "antipodal error {:.2}% (raw shortest path {:.1}%), asymmetry {:.2}%, Hopf spread {:.2}%, {t:.2?}",
            100.0 * antipodal_err,
            100.0 * raw_err,
            100.0 * asym,
            100.0 * profile.spread
        ),
    )
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let p = OrbitParams::new(1, 1, 0.5, 1.0, 1.0).unwrap();
    let s = solve_metric(&p).unwrap();
    let g = build_graph(&p.space(), &s, 20_000, 12, &mut RngStream::new(110)).unwrap();
    let f = FlowIsometry::u_sphere(p.generator(), 0.3).unwrap();
    let profile = displacement_profile(&g, &f, 50, &mut RngStream::new(210)).unwrap();
    let t = start.elapsed();
    outcome(
        profile.spread <= 0.07 && within(t, Duration::from_secs(180)),
        format!(
            "mean displacement {:.5}, (max-min)/mean {:.2e}, snap uncertainty {:.3}, {t:.2?}",
            profile.mean, profile.spread, profile.snap_uncertainty
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("closed-form round trip", criterion_1),
        ("orbit sampling of the solved instance", criterion_2),
        ("central phases versus root pair", criterion_3),
        ("endpoint focusing on SU(2)", criterion_4),
        ("phase-interval bound", criterion_5),
        ("eigenvalue-1 persistence", criterion_6),
        ("geodesic non-intersection", criterion_7),
        ("symplectic witness pairs and scan", criterion_8),
        ("distance oracle on round S^3", criterion_9),
        ("Clifford-Wolf displacement", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("{} criterion {:>2} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {}/10 passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
