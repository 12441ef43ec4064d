//! Killing fields of constant length.
//!
//! A Killing field generated by `X` has constant length `L` exactly when
//! every projection of `Ad(G) X` to `m` lies on the level set `F = L`.
//! For `X = i(x1 I + x2 diag(-m I_l, l I_m))` on `U(n+1)/U(n)` this reduces
//! to a quadratic identity in the parameter `t` of the orbit projections.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cosets::{
    orbit_projection_sample, project_to_m, su2_axis, su2_eq_norm, weyl_sign_flip, weyl_transposition_sp,
    AlgebraElement, AlgebraMatrix, ModelSpace,
};
use crate::error::{invalid, Error, Result};
use crate::matrixcore::SkewHermitian;
use crate::quaternion::{Quaternion, QuaternionMatrix, SymplecticMatrix};
use crate::randers::{validate_spec, RandersSpec, TangentVector};
use crate::rng::RngStream;

/// Relative spread below which sampled lengths count as constant.
pub const CONSTANT_TOL: f64 = 1e-8;
/// Relative spread above which sampled lengths certify non-constancy.
pub const NON_CONSTANT_GAP: f64 = 1e-4;
/// Fewest trials accepted by [`orbit_length_report`].
pub const MIN_TRIALS: usize = 100;

/// `X = i(x1 I + x2 diag(-m I_l, l I_m))` with target length `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    pub l: usize,
    pub m: usize,
    pub x1: f64,
    pub x2: f64,
    #[serde(rename = "L")]
    pub length: f64,
}

impl OrbitParams {
    pub fn new(l: usize, m: usize, x1: f64, x2: f64, length: f64) -> Result<Self> {
        let p = Self { l, m, x1, x2, length };
        p.validate()?;
        Ok(p)
    }

    /// Both eigenvalues must be nonzero with opposite signs.
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || self.m == 0 {
            return Err(invalid("l and m must be positive"));
        }
        if !(self.x1.is_finite() && self.x2.is_finite() && self.length.is_finite()) {
            return Err(invalid("non-finite orbit parameters"));
        }
        if self.x2 == 0.0 {
            return Err(Error::InfeasibleParams("x2 must be nonzero".into()));
        }
        if self.length <= 0.0 {
            return Err(Error::InfeasibleParams("L must be positive".into()));
        }
        let (lo, hi) = self.eigenvalues();
        if lo * hi >= 0.0 {
            return Err(Error::InfeasibleParams(format!(
                "(x1 - m x2)(x1 + l x2) = {} must be negative",
                lo * hi
            )));
        }
        Ok(())
    }

    /// `n` with `l + m = n + 1`.
    pub fn n(&self) -> usize {
        self.l + self.m - 1
    }

    /// `(x1 - m x2, x1 + l x2)`, with multiplicities `l` and `m`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        (
            self.x1 - self.m as f64 * self.x2,
            self.x1 + self.l as f64 * self.x2,
        )
    }

    pub fn generator(&self) -> SkewHermitian {
        let (lo, hi) = self.eigenvalues();
        let mut phases = vec![lo; self.l];
        phases.extend(std::iter::repeat_n(hi, self.m));
        SkewHermitian::diag_imag(&phases).expect("diagonal imaginary matrix is skew")
    }

    pub fn space(&self) -> ModelSpace {
        ModelSpace::USphere { n: self.n() }
    }

    /// `((n+1) x2 / 2)^2 - ((l-m) x2 / 2 + x1)^2`.
    fn denominator(&self) -> f64 {
        let half_width = (self.n() + 1) as f64 * self.x2 / 2.0;
        half_width * half_width - self.shift() * self.shift()
    }

    /// `(l-m) x2 / 2 + x1`, the midpoint of the two eigenvalues.
    fn shift(&self) -> f64 {
        (self.l as f64 - self.m as f64) * self.x2 / 2.0 + self.x1
    }
}

/// The unique `U(n+1)`-invariant Randers metric for which `p.generator()`
/// has constant length `p.length`.
pub fn solve_metric(p: &OrbitParams) -> Result<RandersSpec> {
    p.validate()?;
    let den = p.denominator();
    if den <= 0.0 {
        return Err(Error::InfeasibleParams(format!("denominator {den} is not positive")));
    }
    let b = p.length * p.length / den;
    let c = -(b / p.length) * p.shift();
    let spec = RandersSpec::USphere {
        n: p.n(),
        a: b + c * c,
        b,
        c,
    };
    let violations = validate_spec(&spec);
    if let Some(v) = violations.first() {
        return Err(Error::InfeasibleParams(v.to_string()));
    }
    Ok(spec)
}

fn u_sphere_coeffs(s: &RandersSpec) -> Result<(f64, f64, f64)> {
    match *s {
        RandersSpec::USphere { a, b, c, .. } => Ok((a, b, c)),
        _ => Err(invalid(format!("expected a u_sphere spec, got {}", s.family_name()))),
    }
}

/// Coefficients `(k2, k1, k0)` of `F^2`-numerator `f(t)` along the orbit.
pub fn f_poly(s: &RandersSpec, p: &OrbitParams) -> Result<[f64; 3]> {
    let (a, b, _) = u_sphere_coeffs(s)?;
    let (l, m) = (p.l as f64, p.m as f64);
    let (x1, x2) = (p.x1, p.x2);
    Ok([
        (a - b) * x2 * x2,
        (l - m) * x2 * x2 * b + 2.0 * a * x1 * x2,
        x2 * x2 * b * m * l + a * x1 * x1,
    ])
}

/// Coefficient-wise `f(t) - (L - c(x2 t + x1))^2`.
pub fn constant_length_identity(s: &RandersSpec, p: &OrbitParams) -> Result<[f64; 3]> {
    let (_, _, c) = u_sphere_coeffs(s)?;
    let k = f_poly(s, p)?;
    let (x1, x2, l) = (p.x1, p.x2, p.length);
    let rhs = [
        c * c * x2 * x2,
        -2.0 * c * x2 * (l - c * x1),
        (l - c * x1) * (l - c * x1),
    ];
    Ok([k[0] - rhs[0], k[1] - rhs[1], k[2] - rhs[2]])
}

/// The two solutions of `sqrt(a)|x| + c x = L`.
pub fn eq_root_pair(s: &RandersSpec, length: f64) -> Result<(f64, f64)> {
    let (a, _, c) = u_sphere_coeffs(s)?;
    let ra = a.sqrt();
    Ok((length / (ra + c), -length / (ra - c)))
}

/// Eigenvalue pair `-Lc/b +- sqrt(L^2/b + L^2 c^2/b^2)` of a constant-length
/// generator; defined only when `a = b + c^2`.
pub fn central_kvf_phases(s: &RandersSpec, length: f64) -> Result<(f64, f64)> {
    let (a, b, c) = u_sphere_coeffs(s)?;
    let residual = a - b - c * c;
    if residual.abs() > 1e-10 {
        return Err(Error::NotKvfAdmissible { residual });
    }
    let centre = -length * c / b;
    let radius = (length * length / b + length * length * c * c / (b * b)).sqrt();
    Ok((centre + radius, centre - radius))
}

/// Generators of constant-length fields for an admissible spec, one per
/// reading of the two-eigenvalue statement.
#[derive(Debug, Clone)]
pub struct KvfFamilies {
    /// `i mu I` for each root `mu`: the centre of `u(n+1)`.
    pub central: Vec<SkewHermitian>,
    /// `i diag(mu_- I_l, mu_+ I_m)` for every split `l + m = n + 1`.
    pub two_eigenvalue: Vec<(usize, usize, SkewHermitian)>,
}

pub fn kvf_families(s: &RandersSpec, length: f64) -> Result<KvfFamilies> {
    let (mu_plus, mu_minus) = central_kvf_phases(s, length)?;
    let dim = s.m1_len() + 1;
    let central = [mu_plus, mu_minus]
        .iter()
        .map(|&mu| SkewHermitian::diag_imag(&vec![mu; dim]))
        .collect::<Result<_>>()?;
    let two_eigenvalue = (1..dim)
        .map(|l| {
            let mut phases = vec![mu_minus; l];
            phases.extend(std::iter::repeat_n(mu_plus, dim - l));
            Ok((l, dim - l, SkewHermitian::diag_imag(&phases)?))
        })
        .collect::<Result<_>>()?;
    Ok(KvfFamilies { central, two_eigenvalue })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Constant,
    NonConstant,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Constant => "constant",
            Verdict::NonConstant => "non-constant",
        })
    }
}

/// Statistics of `F` over sampled orbit projections.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantLengthReport {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub stddev: f64,
    pub trials: usize,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub length: f64,
}

impl ConstantLengthReport {
    pub fn from_values(values: &[f64], length: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("no samples"));
        }
        let len = values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = (values.iter().sum::<f64>() / len).clamp(min, max);
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len;
        let tolerance = CONSTANT_TOL * length.abs();
        let verdict = if max - min <= tolerance {
            Verdict::Constant
        } else {
            Verdict::NonConstant
        };
        Ok(Self {
            min,
            max,
            mean,
            stddev: var.sqrt(),
            trials: values.len(),
            verdict,
            tolerance,
            length,
        })
    }

    pub fn gap(&self) -> f64 {
        self.max - self.min
    }

    /// The same statistics judged with relative tolerance `rel`.
    pub fn with_tolerance(mut self, rel: f64) -> Self {
        self.tolerance = rel * self.length.abs();
        self.verdict = if self.gap() <= self.tolerance {
            Verdict::Constant
        } else {
            Verdict::NonConstant
        };
        self
    }

    pub fn certifies_non_constant(&self) -> bool {
        self.gap() > NON_CONSTANT_GAP * self.length.abs()
    }
}

/// Samples `trials` Haar conjugates of `e`, projects them and evaluates `F`.
pub fn orbit_length_report(
    s: &RandersSpec,
    e: &AlgebraElement,
    length: f64,
    trials: usize,
    rng: &mut RngStream,
) -> Result<ConstantLengthReport> {
    if trials < MIN_TRIALS {
        return Err(invalid(format!("at least {MIN_TRIALS} trials required, got {trials}")));
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(invalid("L must be positive"));
    }
    let norm = s.norm()?;
    let space = ModelSpace::of_spec(s);
    let points = orbit_projection_sample(&space, e, trials, rng)?;
    let values = points.iter().map(|y| norm.eval(y)).collect::<Result<Vec<_>>>()?;
    ConstantLengthReport::from_values(&values, length)
}

/// Randers metric on `S^3` whose indicatrix is the standard sphere of
/// radius `radius` centred at `-V`, `V = v diag(i, -i)`.
///
/// With `s = r^2 - v^2`: `a = r^2/s^2`, `b = 1/s`, `c = v/s`.
pub fn su2_cw_spec(v: &SkewHermitian, radius: f64) -> Result<RandersSpec> {
    if v.dim() != 2 {
        return Err(invalid("V must be 2x2"));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    let vv = v.matrix()[(0, 0)].im;
    let off_axis = v.sub_axis(vv);
    if off_axis > 1e-12 {
        return Err(invalid(format!("V must be a multiple of diag(i, -i), off-axis part {off_axis:e}")));
    }
    if su2_eq_norm(v) >= radius {
        return Err(Error::InfeasibleParams(format!(
            "|V| = {} must be below the radius {radius}",
            su2_eq_norm(v)
        )));
    }
    let s = radius * radius - vv * vv;
    Ok(RandersSpec::Su2 {
        a: radius * radius / (s * s),
        b: 1.0 / s,
        c: vv / s,
    })
}

trait AxisPart {
    fn sub_axis(&self, v: f64) -> f64;
}

impl AxisPart for SkewHermitian {
    fn sub_axis(&self, v: f64) -> f64 {
        crate::matrixcore::max_abs(&(self.matrix() - su2_axis().scale(v).matrix()))
    }
}

/// Two conjugates of `X` whose projections are opposite points on the
/// `i` axis of `m0`, with their lengths.
#[derive(Debug, Clone)]
pub struct WitnessPair {
    pub y1: TangentVector,
    pub y2: TangentVector,
    pub f1: f64,
    pub f2: f64,
}

impl WitnessPair {
    pub fn gap(&self) -> f64 {
        (self.f1 - self.f2).abs()
    }
}

/// For a nonzero diagonal `X` in `sp(n+1)`, exhibits conjugates projecting
/// to `|x| i` and `-|x| i`; their lengths differ by `2|c||x|`.
pub fn sp_witness_pair(x: &QuaternionMatrix, s: &RandersSpec) -> Result<WitnessPair> {
    let n = match *s {
        RandersSpec::SpSphere { n, .. } => n,
        _ => return Err(invalid("witness pair needs an sp_sphere spec")),
    };
    let norm = s.norm()?;
    if s.c() == 0.0 {
        return Err(Error::NotApplicable("c = 0: the metric is Riemannian".into()));
    }
    let dim = n + 1;
    if x.nrows() != dim || x.ncols() != dim {
        return Err(invalid(format!("X must be {dim}x{dim}")));
    }
    let e = AlgebraElement::symplectic(x.clone(), 0.0)?;
    let off_diag = (0..dim)
        .flat_map(|r| (0..dim).filter(move |&c| c != r).map(move |c| (r, c)))
        .map(|(r, c)| x.get(r, c).norm())
        .fold(0.0, f64::max);
    if off_diag > 1e-12 {
        return Err(invalid("X must be diagonal"));
    }
    let (k, entry) = (0..dim)
        .map(|k| (k, x.get(k, k)))
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("dim >= 1");
    let size = entry.norm();
    if size == 0.0 {
        return Err(invalid("X must be nonzero"));
    }
    let perm = weyl_transposition_sp(dim, k, n)?;
    let mut rot = vec![Quaternion::ONE; dim];
    rot[n] = Quaternion::rotation_between(entry.scale(1.0 / size), Quaternion::I);
    let g1 = SymplecticMatrix::diagonal(&rot)?.mul(&perm)?;
    let g2 = weyl_sign_flip(dim, n)?.mul(&g1)?;
    let space = ModelSpace::SpSphere { n };
    let y1 = project_to_m(&space, &e.conjugate_symplectic(&g1)?)?;
    let y2 = project_to_m(&space, &e.conjugate_symplectic(&g2)?)?;
    let f1 = norm.eval(&y1)?;
    let f2 = norm.eval(&y2)?;
    Ok(WitnessPair { y1, y2, f1, f2 })
}

/// Per-candidate result of [`sp_central_only_scan`].
#[derive(Debug, Clone)]
pub struct CandidateReport {
    pub candidate_id: usize,
    pub central: bool,
    pub report: ConstantLengthReport,
}

/// Length statistics for each candidate generator on a symplectic sphere
/// with `a2 != b`. Only central candidates should come out constant.
pub fn sp_central_only_scan(
    s: &RandersSpec,
    candidates: &[AlgebraElement],
    length: f64,
    trials: usize,
    rng: &mut RngStream,
) -> Result<Vec<CandidateReport>> {
    match *s {
        RandersSpec::SpSphere { a2, b, .. } if (a2 - b).abs() <= 1e-12 * a2.abs().max(b.abs()) => {
            return Err(invalid("scan requires a2 != b"))
        }
        RandersSpec::SpSphere { .. } => {}
        _ => return Err(invalid("scan needs an sp_sphere spec")),
    }
    candidates
        .iter()
        .enumerate()
        .map(|(candidate_id, e)| {
            if !matches!(e.matrix(), AlgebraMatrix::Quaternion(_)) {
                return Err(invalid(format!("candidate {candidate_id} is not in sp(n+1) + R")));
            }
            let report = orbit_length_report(s, e, length, trials, rng)?;
            log::debug!("candidate {candidate_id}: gap {:e}", report.gap());
            Ok(CandidateReport {
                candidate_id,
                central: e.is_central(1e-12),
                report,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct CsvRow {
    candidate_id: usize,
    min: f64,
    max: f64,
    mean: f64,
    stddev: f64,
    verdict: Verdict,
}

/// Writes `candidate_id,min,max,mean,stddev,verdict` rows.
pub fn write_reports_csv<W: Write>(out: W, reports: &[CandidateReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(CsvRow {
            candidate_id: r.candidate_id,
            min: r.report.min,
            max: r.report.max,
            mean: r.report.mean,
            stddev: r.report.stddev,
            verdict: r.report.verdict,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn params(l: usize, m: usize, x1: f64, x2: f64, length: f64) -> OrbitParams {
        OrbitParams::new(l, m, x1, x2, length).unwrap()
    }

    fn coeffs(s: &RandersSpec) -> (f64, f64, f64) {
        u_sphere_coeffs(s).unwrap()
    }

    #[test]
    fn solve_metric_examples() {
        let (a, b, c) = coeffs(&solve_metric(&params(1, 1, 0.5, 1.0, 1.0)).unwrap());
        assert_abs_diff_eq!(a, 16.0 / 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b, 4.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c, -2.0 / 3.0, epsilon = 1e-14);

        let (a, b, c) = coeffs(&solve_metric(&params(2, 1, 0.0, 1.0, 1.0)).unwrap());
        assert_abs_diff_eq!(a, 0.5625, epsilon = 1e-14);
        assert_abs_diff_eq!(b, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(c, -0.25, epsilon = 1e-14);

        // Symmetric eigenvalues give the round family.
        let (a, b, c) = coeffs(&solve_metric(&params(3, 1, -1.0, 1.0, 1.0)).unwrap());
        assert_eq!(c, 0.0);
        assert_abs_diff_eq!(a, 0.25, epsilon = 1e-15);
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_params_rejected() {
        for p in [
            OrbitParams { l: 1, m: 1, x1: 2.0, x2: 1.0, length: 1.0 },
            OrbitParams { l: 1, m: 1, x1: 1.0, x2: 1.0, length: 1.0 },
            OrbitParams { l: 1, m: 1, x1: 0.0, x2: 0.0, length: 1.0 },
            OrbitParams { l: 1, m: 1, x1: 0.0, x2: 1.0, length: -1.0 },
        ] {
            assert!(matches!(solve_metric(&p), Err(Error::InfeasibleParams(_))), "{p:?}");
        }
    }

    #[test]
    fn f_poly_examples() {
        let p = params(1, 1, 0.5, 1.0, 1.0);
        let k = f_poly(&solve_metric(&p).unwrap(), &p).unwrap();
        for (got, want) in k.iter().zip([4.0 / 9.0, 16.0 / 9.0, 16.0 / 9.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        assert_eq!(f_poly(&RandersSpec::round(1), &p).unwrap()[0], 0.0);
        assert_eq!(f_poly(&RandersSpec::round(1), &params(1, 1, 0.0, 1.0, 1.0)).unwrap()[1], 0.0);
        assert!(f_poly(&RandersSpec::Su2 { a: 1.0, b: 1.0, c: 0.0 }, &p).is_err());
    }

    #[test]
    fn identity_residuals() {
        let p = params(1, 1, 0.5, 1.0, 1.0);
        let s = solve_metric(&p).unwrap();
        assert!(constant_length_identity(&s, &p).unwrap().iter().all(|r| r.abs() < 1e-12));
        let round = constant_length_identity(&RandersSpec::round(1), &p).unwrap();
        assert!(round.iter().any(|r| r.abs() > 0.1));
        let (a, b, c) = coeffs(&s);
        let bumped = RandersSpec::USphere { n: 1, a, b: b + 1e-3, c };
        let r = constant_length_identity(&bumped, &p).unwrap();
        let worst = r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(worst > 1e-4 && worst < 1e-2, "{worst}");
    }

    #[test]
    fn root_pairs() {
        let s = RandersSpec::USphere { n: 1, a: 16.0 / 9.0, b: 4.0 / 3.0, c: -2.0 / 3.0 };
        let (p, m) = eq_root_pair(&s, 1.0).unwrap();
        assert_abs_diff_eq!(p, 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m, -0.5, epsilon = 1e-14);
        let (p, m) = eq_root_pair(&RandersSpec::round(1), 1.0).unwrap();
        assert_eq!((p, m), (1.0, -1.0));
        let s = RandersSpec::USphere { n: 2, a: 0.5625, b: 0.5, c: -0.25 };
        let (p, m) = eq_root_pair(&s, 1.0).unwrap();
        assert_abs_diff_eq!(p, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn central_phase_examples() {
        let s = RandersSpec::USphere { n: 2, a: 0.5625, b: 0.5, c: -0.25 };
        let (p, m) = central_kvf_phases(&s, 1.0).unwrap();
        assert_abs_diff_eq!(p, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m, -1.0, epsilon = 1e-14);
        assert_eq!(central_kvf_phases(&RandersSpec::round(3), 1.0).unwrap(), (1.0, -1.0));
        let s = RandersSpec::USphere { n: 1, a: 16.0 / 9.0, b: 4.0 / 3.0, c: -2.0 / 3.0 };
        let (p, m) = central_kvf_phases(&s, 1.0).unwrap();
        assert_abs_diff_eq!(p, 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m, -0.5, epsilon = 1e-14);
        let bad = RandersSpec::USphere { n: 1, a: 2.0, b: 1.0, c: 0.5 };
        assert!(matches!(central_kvf_phases(&bad, 1.0), Err(Error::NotKvfAdmissible { .. })));
    }

    #[test]
    fn orbit_reports() {
        let mut rng = RngStream::new(5);
        let p = params(1, 1, 0.5, 1.0, 1.0);
        let s = solve_metric(&p).unwrap();
        let e = AlgebraElement::unitary(p.generator());
        let r = orbit_length_report(&s, &e, 1.0, 1000, &mut rng).unwrap();
        assert_eq!(r.verdict, Verdict::Constant);
        assert_abs_diff_eq!(r.mean, 1.0, epsilon = 1e-10);

        let flip = AlgebraElement::unitary(SkewHermitian::diag_imag(&[1.0, -1.0]).unwrap());
        let r = orbit_length_report(&RandersSpec::round(1), &flip, 1.0, 200, &mut rng).unwrap();
        assert_eq!(r.verdict, Verdict::Constant);
        let r = orbit_length_report(&s, &flip, 1.0, 200, &mut rng).unwrap();
        assert_eq!(r.verdict, Verdict::NonConstant);
        assert!(r.certifies_non_constant());
        assert!(r.min <= r.mean && r.mean <= r.max);

        assert!(orbit_length_report(&s, &e, 1.0, 99, &mut rng).is_err());
    }

    #[test]
    fn both_family_readings_are_constant() {
        let s = RandersSpec::USphere { n: 2, a: 0.5625, b: 0.5, c: -0.25 };
        let fam = kvf_families(&s, 1.0).unwrap();
        let mut rng = RngStream::new(8);
        for x in fam.central.iter().chain(fam.two_eigenvalue.iter().map(|(_, _, x)| x)) {
            let r = orbit_length_report(&s, &AlgebraElement::unitary(x.clone()), 1.0, 300, &mut rng).unwrap();
            assert_eq!(r.verdict, Verdict::Constant);
            assert_abs_diff_eq!(r.mean, 1.0, epsilon = 1e-10);
        }
        assert_eq!(fam.two_eigenvalue.len(), 2);
    }

    #[test]
    fn su2_spec_examples() {
        let s = su2_cw_spec(&SkewHermitian::zeros(2), 1.0).unwrap();
        assert_eq!(s.c(), 0.0);

        let v = su2_axis().scale(0.5);
        let s = su2_cw_spec(&v, 1.0).unwrap();
        let norm = s.norm().unwrap();
        let mut rng = RngStream::new(3);
        for _ in 0..100 {
            let w = rng.unit_vector(3);
            let u = nalgebra::DVector::from_element(1, Complex64::new(w[1], w[2]));
            let y = TangentVector::complex(-0.5 + w[0], u);
            assert_abs_diff_eq!(norm.eval(&y).unwrap(), 1.0, epsilon = 1e-12);
        }

        let x = crate::cosets::su2_element(0.3, Complex64::new(0.4, -0.866_025_403_784_438_6)).unwrap();
        let e = AlgebraElement::su2(x, 1.0).unwrap();
        let r = orbit_length_report(&s, &e, 1.0, 500, &mut rng).unwrap();
        assert_eq!(r.verdict, Verdict::Constant);
        assert_abs_diff_eq!(r.mean, 1.0, epsilon = 1e-10);

        assert!(matches!(su2_cw_spec(&su2_axis(), 1.0), Err(Error::InfeasibleParams(_))));
        let off = crate::cosets::su2_element(0.0, Complex64::new(0.1, 0.0)).unwrap();
        assert!(su2_cw_spec(&off, 1.0).is_err());
    }

    fn sp_spec(n: usize, c: f64) -> RandersSpec {
        RandersSpec::SpSphere { n, a1: 1.0 + c * c, a2: 2.0, b: 1.0, c }
    }

    #[test]
    fn witness_pair_gap() {
        let mut x = QuaternionMatrix::zeros(3, 3);
        x.set(0, 0, Quaternion::I);
        let w = sp_witness_pair(&x, &sp_spec(2, 0.3)).unwrap();
        assert_abs_diff_eq!(w.gap(), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(w.y1.m0()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.y2.m0()[0], -1.0, epsilon = 1e-12);

        let q = Quaternion::imaginary([0.2, -0.4, 0.4]);
        let x = QuaternionMatrix::from_diagonal(&[q, q]);
        let w = sp_witness_pair(&x, &sp_spec(1, -0.5)).unwrap();
        assert_abs_diff_eq!(w.gap(), 2.0 * 0.5 * 0.6, epsilon = 1e-12);

        assert!(matches!(sp_witness_pair(&x, &sp_spec(1, 0.0)), Err(Error::NotApplicable(_))));
        assert!(matches!(
            sp_witness_pair(&QuaternionMatrix::zeros(2, 2), &sp_spec(1, 0.3)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn central_scan() {
        let s = sp_spec(1, 0.3);
        let mut first = QuaternionMatrix::zeros(2, 2);
        first.set(0, 0, Quaternion::I);
        let candidates = vec![
            AlgebraElement::symplectic(QuaternionMatrix::zeros(2, 2), 0.8).unwrap(),
            AlgebraElement::symplectic_scalar_i(2, 0.5, 0.2).unwrap(),
            AlgebraElement::symplectic(first, 0.0).unwrap(),
        ];
        let reports = sp_central_only_scan(&s, &candidates, 1.0, 300, &mut RngStream::new(4)).unwrap();
        let verdicts: Vec<_> = reports.iter().map(|r| (r.central, r.report.verdict)).collect();
        assert_eq!(
            verdicts,
            vec![
                (true, Verdict::Constant),
                (false, Verdict::NonConstant),
                (false, Verdict::NonConstant)
            ]
        );
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, &reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("candidate_id,min,max,mean,stddev,verdict\n"));
        assert!(text.contains(",non-constant\n"));

        let flat = RandersSpec::SpSphere { n: 1, a1: 1.0, a2: 1.0, b: 1.0, c: 0.0 };
        assert!(sp_central_only_scan(&flat, &candidates, 1.0, 300, &mut RngStream::new(4)).is_err());
    }
}
