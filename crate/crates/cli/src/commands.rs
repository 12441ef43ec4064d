use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use cw_randers::cosets::{su2_axis, AlgebraElement, ModelSpace};
use cw_randers::flows::{
    commutator_trials, endpoint_focus_check, geodesic_nonintersection_probe, phase_bound_trials, write_checker_csv,
    CheckerRow, FlowIsometry,
};
use cw_randers::geodesy::{build_graph, displacement_profile_with, write_displacement_csv, DISPLACEMENT_TOL};
use cw_randers::killing::{
    constant_length_identity, orbit_length_report, solve_metric, sp_central_only_scan, write_reports_csv,
    CandidateReport, OrbitParams, Verdict, CONSTANT_TOL,
};
use cw_randers::matrixcore::SkewHermitian;
use cw_randers::quaternion::{Quaternion, QuaternionMatrix};
use cw_randers::randers::{validate_spec, RandersSpec};
use cw_randers::rng::RngStream;
use serde::Serialize;

use crate::config::{RunConfig, Settings};
use crate::{CliError, ParamArgs};

const SOLVE_TOL: f64 = 1e-10;
const FOCUS_TOL: f64 = 1e-10;
const ORBIT_TRIALS: usize = 1000;
const CHECKER_TRIALS: usize = 1000;
const COMMUTATOR_TRIALS: usize = 200;

/// Runs `f` against `--out` or stdout.
fn emit(settings: &Settings, f: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
    match &settings.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn params(settings: &Settings, args: &ParamArgs) -> Result<OrbitParams, CliError> {
    let base = settings.params;
    let pick = |flag: Option<f64>, from: Option<f64>, name: &str| {
        flag.or(from).ok_or_else(|| CliError::Usage(format!("missing --{name}")))
    };
    let l = args
        .l
        .or(base.map(|p| p.l))
        .ok_or_else(|| CliError::Usage("missing --l".into()))?;
    let m = args
        .m
        .or(base.map(|p| p.m))
        .ok_or_else(|| CliError::Usage("missing --m".into()))?;
    let p = OrbitParams {
        l,
        m,
        x1: pick(args.x1, base.map(|p| p.x1), "x1")?,
        x2: pick(args.x2, base.map(|p| p.x2), "x2")?,
        length: pick(args.length, base.map(|p| p.length), "L")?,
    };
    p.validate()?;
    Ok(p)
}

fn has_params(settings: &Settings, args: &ParamArgs) -> bool {
    settings.params.is_some()
        || args.l.is_some()
        || args.m.is_some()
        || args.x1.is_some()
        || args.x2.is_some()
        || args.length.is_some()
}

pub fn validate(settings: &Settings, path: Option<&Path>) -> Result<(), CliError> {
    let spec = match path {
        Some(p) => RunConfig::load(p)?.spec,
        None => settings.spec,
    }
    .ok_or_else(|| CliError::Usage("no spec given".into()))?;
    let violations = validate_spec(&spec);
    emit(settings, |w| {
        for v in &violations {
            writeln!(w, "{v}")?;
        }
        Ok(())
    })?;
    if violations.is_empty() {
        eprintln!("valid {} spec", spec.family_name());
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} violation(s)", violations.len())))
    }
}

#[derive(Serialize)]
struct SolveOutput {
    spec: RandersSpec,
    residuals: [f64; 3],
    max_residual: f64,
}

pub fn solve(settings: &Settings, args: &ParamArgs) -> Result<(), CliError> {
    let p = params(settings, args)?;
    let spec = solve_metric(&p)?;
    let residuals = constant_length_identity(&spec, &p)?;
    let max_residual = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let out = SolveOutput {
        spec,
        residuals,
        max_residual,
    };
    emit(settings, |w| {
        serde_json::to_writer_pretty(&mut *w, &out).map_err(|e| CliError::Usage(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })?;
    let tol = settings.tolerance_or(SOLVE_TOL);
    if max_residual <= tol {
        Ok(())
    } else {
        Err(CliError::Failed(format!("max residual {max_residual:e} exceeds {tol:e}")))
    }
}

pub fn orbit(settings: &Settings, args: &ParamArgs) -> Result<(), CliError> {
    let p = params(settings, args)?;
    let spec = match settings.spec {
        Some(s) => s,
        None => solve_metric(&p)?,
    };
    let element = AlgebraElement::unitary(p.generator());
    let mut rng = RngStream::new(settings.seed);
    let report = orbit_length_report(&spec, &element, p.length, settings.trials_or(ORBIT_TRIALS), &mut rng)?
        .with_tolerance(settings.tolerance_or(CONSTANT_TOL));
    let verdict = report.verdict;
    let gap = report.gap();
    let rows = [CandidateReport {
        candidate_id: 0,
        central: false,
        report,
    }];
    emit(settings, |w| Ok(write_reports_csv(w, &rows)?))?;
    eprintln!("orbit: {verdict}, max - min = {gap:e}");
    match verdict {
        Verdict::Constant => Ok(()),
        Verdict::NonConstant => Err(CliError::Failed("length is not constant on the orbit".into())),
    }
}

/// Fixed candidates (one central, two not) followed by `extra` random
/// diagonal non-central ones.
fn sp_candidates(n: usize, extra: usize, rng: &mut RngStream) -> Result<Vec<AlgebraElement>, CliError> {
    let dim = n + 1;
    let mut first = QuaternionMatrix::zeros(dim, dim);
    first.set(0, 0, Quaternion::I);
    let mut out = vec![
        AlgebraElement::symplectic(QuaternionMatrix::zeros(dim, dim), 0.8)?,
        AlgebraElement::symplectic_scalar_i(dim, 0.5, 0.2)?,
        AlgebraElement::symplectic(first, 0.0)?,
    ];
    for _ in 0..extra {
        let diag: Vec<Quaternion> = (0..dim)
            .map(|_| {
                let w = rng.unit_vector(3);
                Quaternion::imaginary([w[0], w[1], w[2]]).scale(rng.uniform_in(0.2, 1.0))
            })
            .collect();
        out.push(AlgebraElement::symplectic(
            QuaternionMatrix::from_diagonal(&diag),
            rng.uniform_in(-1.0, 1.0),
        )?);
    }
    Ok(out)
}

pub fn sp_scan(settings: &Settings, extra: usize) -> Result<(), CliError> {
    let spec = settings
        .spec
        .ok_or_else(|| CliError::Usage("sp-scan needs an sp_sphere spec in --config".into()))?;
    let RandersSpec::SpSphere { n, .. } = spec else {
        return Err(CliError::Usage("sp-scan needs an sp_sphere spec".into()));
    };
    let mut rng = RngStream::new(settings.seed);
    let candidates = sp_candidates(n, extra, &mut rng)?;
    let rel = settings.tolerance_or(CONSTANT_TOL);
    let reports: Vec<CandidateReport> =
        sp_central_only_scan(&spec, &candidates, 1.0, settings.trials_or(ORBIT_TRIALS), &mut rng)?
            .into_iter()
            .map(|mut r| {
                r.report = r.report.with_tolerance(rel);
                r
            })
            .collect();
    emit(settings, |w| Ok(write_reports_csv(w, &reports)?))?;
    let wrong: Vec<usize> = reports
        .iter()
        .filter(|r| r.central != (r.report.verdict == Verdict::Constant))
        .map(|r| r.candidate_id)
        .collect();
    eprintln!("sp-scan: {} candidates, {} misclassified", reports.len(), wrong.len());
    if wrong.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("candidates {wrong:?} break central-only")))
    }
}

fn checker_result(name: &str, rows: &[CheckerRow]) -> Result<(), CliError> {
    let failures = rows.iter().filter(|r| !r.verdict).count();
    let worst = rows.iter().map(|r| r.worst_residual).fold(f64::NEG_INFINITY, f64::max);
    eprintln!("{name}: {} trials, {failures} violations, worst residual {worst:e}", rows.len());
    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{failures} violations")))
    }
}

pub fn eigenlemma(settings: &Settings, dims: &[usize]) -> Result<(), CliError> {
    let mut rng = RngStream::new(settings.seed);
    let rows = phase_bound_trials(dims, settings.trials_or(CHECKER_TRIALS), &mut rng)?;
    emit(settings, |w| Ok(write_checker_csv(w, &rows)?))?;
    checker_result("eigenlemma", &rows)
}

pub fn commutator(settings: &Settings, k: usize) -> Result<(), CliError> {
    let mut rng = RngStream::new(settings.seed);
    let rows = commutator_trials(k, settings.trials_or(COMMUTATOR_TRIALS), &mut rng)?;
    emit(settings, |w| Ok(write_checker_csv(w, &rows)?))?;
    checker_result("commutator", &rows)
}

fn write_row<T: Serialize>(w: &mut dyn Write, row: &T) -> Result<(), CliError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.serialize(row).map_err(|e| CliError::Usage(e.to_string()))?;
    csv.flush()?;
    Ok(())
}

pub fn nonintersection(settings: &Settings, x: f64, l: usize, m: usize) -> Result<(), CliError> {
    let mut rng = RngStream::new(settings.seed);
    let report = geodesic_nonintersection_probe(x, l, m, settings.trials_or(CHECKER_TRIALS), &mut rng)?;
    emit(settings, |w| write_row(w, &report))?;
    eprintln!(
        "nonintersection: {} trials, {} coincidences, min distance {:e}",
        report.trials, report.failures, report.min_distance
    );
    if report.verdict {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} coincidences", report.failures)))
    }
}

#[derive(Serialize)]
struct FocusRow {
    v: f64,
    samples: usize,
    spread: f64,
    verdict: bool,
}

pub fn focus(settings: &Settings, v: f64, samples: usize) -> Result<(), CliError> {
    if samples < 2 {
        return Err(CliError::Usage("need at least 2 samples".into()));
    }
    let mut rng = RngStream::new(settings.seed);
    let spread = endpoint_focus_check(&su2_axis().scale(v), samples, &mut rng)?;
    let row = FocusRow {
        v,
        samples,
        spread,
        verdict: spread <= settings.tolerance_or(FOCUS_TOL),
    };
    emit(settings, |w| write_row(w, &row))?;
    eprintln!("focus: endpoint spread {spread:e}");
    if row.verdict {
        Ok(())
    } else {
        Err(CliError::Failed(format!("endpoint spread {spread:e}")))
    }
}

/// Flow and spec for `verify displacement`: the solved metric with its
/// generator when parameters are given, otherwise the configured (or round
/// `S^3`) `U(n+1)` spec with the central circle.
fn displacement_setup(settings: &Settings, args: &ParamArgs, t: f64) -> Result<(RandersSpec, FlowIsometry), CliError> {
    if has_params(settings, args) {
        let p = params(settings, args)?;
        let spec = match settings.spec {
            Some(s) => s,
            None => solve_metric(&p)?,
        };
        return Ok((spec, FlowIsometry::u_sphere(p.generator(), t)?));
    }
    let spec = settings.spec.unwrap_or(RandersSpec::round(1));
    let RandersSpec::USphere { n, .. } = spec else {
        return Err(CliError::Usage(
            "displacement without orbit parameters needs a u_sphere spec".into(),
        ));
    };
    let central = SkewHermitian::diag_imag(&vec![1.0; n + 1])?;
    Ok((spec, FlowIsometry::u_sphere(central, t)?))
}

pub fn displacement(
    settings: &Settings,
    args: &ParamArgs,
    t: f64,
    points: usize,
    k: usize,
    samples: usize,
) -> Result<(), CliError> {
    let (spec, flow) = displacement_setup(settings, args, t)?;
    let mut rng = RngStream::new(settings.seed);
    let graph = build_graph(&ModelSpace::of_spec(&spec), &spec, points, k, &mut rng)?;
    log::info!("graph: {} vertices, median edge {:.4}", graph.len(), graph.h());
    let profile =
        displacement_profile_with(&graph, &flow, samples, settings.tolerance_or(DISPLACEMENT_TOL), &mut rng)?;
    emit(settings, |w| Ok(write_displacement_csv(w, &profile)?))?;
    eprintln!(
        "displacement: mean {:.6}, spread {:.4} (tolerance {}), snap uncertainty {:.4}",
        profile.mean, profile.spread, profile.tolerance, profile.snap_uncertainty
    );
    if profile.constant {
        Ok(())
    } else {
        Err(CliError::Failed(format!("displacement spread {:.4}", profile.spread)))
    }
}
