//! Flows of Clifford-Wolf translations and numerical checkers for the two
//! eigenvalue lemmas behind the non-intersection arguments.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cosets::{su2_element, su2_eq_norm};
use crate::error::{invalid, Error, Result};
use crate::matrixcore::{
    expm_skew, haar_unitary, unitary_defect, unitary_eigenvalues, unitary_phases, ComplexMatrix, ComplexVector,
    Conjugate, SkewHermitian, UnitaryMatrix,
};
use crate::rng::RngStream;

/// Tolerance for a point to count as lying on the model sphere.
pub const SPHERE_TOL: f64 = 1e-10;
/// Slack on the interval test of [`phase_bound_check`].
pub const PHASE_EPS: f64 = 1e-9;
/// Largest step count tried by [`eigenvalue_tracking`].
pub const MAX_TRACKING_STEPS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub enum FlowGenerator {
    /// `g -> exp(tX) g exp(-tV)` on `SU(2)`.
    Su2 { x: SkewHermitian, v: SkewHermitian },
    /// `v -> exp(tX') v` on `S^{2n+1}`.
    USphere { x: SkewHermitian },
}

/// A flow generator evaluated at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowIsometry {
    pub generator: FlowGenerator,
    pub t: f64,
}

impl FlowIsometry {
    pub fn su2(x: SkewHermitian, v: SkewHermitian, t: f64) -> Result<Self> {
        if x.dim() != 2 || v.dim() != 2 {
            return Err(invalid("SU(2) flow generators must be 2x2"));
        }
        Self::checked(FlowGenerator::Su2 { x, v }, t)
    }

    pub fn u_sphere(x: SkewHermitian, t: f64) -> Result<Self> {
        Self::checked(FlowGenerator::USphere { x }, t)
    }

    fn checked(generator: FlowGenerator, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(invalid("non-finite flow time"));
        }
        Ok(Self { generator, t })
    }

    pub fn at(&self, t: f64) -> Result<Self> {
        Self::checked(self.generator.clone(), t)
    }
}

/// A point of the sphere: an `SU(2)` matrix or a unit vector.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowPoint {
    Group(UnitaryMatrix),
    Vector(ComplexVector),
}

/// `[[alpha, -conj(beta)], [beta, conj(alpha)]]` from its first column.
pub fn su2_from_column(z: &ComplexVector) -> Result<UnitaryMatrix> {
    if z.len() != 2 {
        return Err(invalid("SU(2) column must have length 2"));
    }
    let (a, b) = (z[0], z[1]);
    UnitaryMatrix::new(ComplexMatrix::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()]))
}

fn check_unit(v: &ComplexVector) -> Result<()> {
    let norm = v.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > SPHERE_TOL {
        return Err(invalid(format!("point is off the sphere: |v| = {norm}")));
    }
    Ok(())
}

fn check_su2(g: &UnitaryMatrix) -> Result<()> {
    if g.dim() != 2 {
        return Err(invalid("SU(2) point must be 2x2"));
    }
    let det = g.determinant();
    if unitary_defect(g.matrix()) > SPHERE_TOL || (det - 1.0).norm() > SPHERE_TOL {
        return Err(invalid("point is not in SU(2)"));
    }
    Ok(())
}

/// Applies the flow and renormalizes the result onto the sphere.
pub fn apply_flow(f: &FlowIsometry, point: &FlowPoint) -> Result<FlowPoint> {
    match (&f.generator, point) {
        (FlowGenerator::Su2 { x, v }, FlowPoint::Group(g)) => {
            check_su2(g)?;
            let left = expm_skew(x, f.t)?;
            let right = expm_skew(v, -f.t)?;
            let h = left.matrix() * g.matrix() * right.matrix();
            let col: ComplexVector = h.column(0).into_owned();
            Ok(FlowPoint::Group(su2_from_column(&col.normalize())?))
        }
        (FlowGenerator::Su2 { .. }, FlowPoint::Vector(z)) => {
            if z.len() != 2 {
                return Err(invalid("SU(2) point vector must have length 2"));
            }
            check_unit(z)?;
            let g = su2_from_column(z)?;
            match apply_flow(f, &FlowPoint::Group(g))? {
                FlowPoint::Group(h) => Ok(FlowPoint::Vector(h.matrix().column(0).into_owned())),
                FlowPoint::Vector(_) => unreachable!("group input maps to a group point"),
            }
        }
        (FlowGenerator::USphere { x }, FlowPoint::Vector(z)) => {
            if z.len() != x.dim() {
                return Err(invalid("point dimension does not match the generator"));
            }
            check_unit(z)?;
            let out = expm_skew(x, f.t)?.apply(z)?;
            Ok(FlowPoint::Vector(out.normalize()))
        }
        (FlowGenerator::USphere { .. }, FlowPoint::Group(_)) => {
            Err(invalid("unit-sphere flows act on vectors"))
        }
    }
}

/// Random element of `SU(2)`.
pub fn random_su2(rng: &mut RngStream) -> UnitaryMatrix {
    let w = rng.unit_vector(4);
    let z = ComplexVector::from_vec(vec![Complex64::new(w[0], w[1]), Complex64::new(w[2], w[3])]);
    su2_from_column(&z).expect("unit column gives an SU(2) matrix")
}

/// Random `X` in `su(2)` with standard length 1.
pub fn random_unit_su2(rng: &mut RngStream) -> SkewHermitian {
    let w = rng.unit_vector(3);
    su2_element(w[0], Complex64::new(w[1], w[2])).expect("su(2) element")
}

/// Largest pairwise distance between the time-`pi` endpoints of the flows
/// generated by `(X, V)` for each `X` in `xs`, started at `g`.
pub fn endpoint_spread(v: &SkewHermitian, g: &UnitaryMatrix, xs: &[SkewHermitian]) -> Result<f64> {
    let ends = xs
        .iter()
        .map(|x| match apply_flow(&FlowIsometry::su2(x.clone(), v.clone(), PI)?, &FlowPoint::Group(g.clone()))? {
            FlowPoint::Group(h) => Ok(h.into_matrix()),
            FlowPoint::Vector(_) => unreachable!("group input maps to a group point"),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut spread = 0.0_f64;
    for (i, a) in ends.iter().enumerate() {
        for b in &ends[i + 1..] {
            spread = spread.max((a - b).norm());
        }
    }
    Ok(spread)
}

/// Number of base points drawn by [`endpoint_focus_check`].
const FOCUS_BASE_POINTS: usize = 8;

/// Maximum over random base points `g` of the endpoint spread of `samples`
/// random unit generators. All geodesics from `g` meet at time `pi`, so the
/// result is at rounding level.
pub fn endpoint_focus_check(v: &SkewHermitian, samples: usize, rng: &mut RngStream) -> Result<f64> {
    if v.dim() != 2 {
        return Err(invalid("V must be 2x2"));
    }
    if su2_eq_norm(v) >= 1.0 {
        return Err(Error::InfeasibleParams(format!("|V| = {} must be below 1", su2_eq_norm(v))));
    }
    let mut worst = 0.0_f64;
    for _ in 0..FOCUS_BASE_POINTS {
        let g = random_su2(rng);
        let xs: Vec<SkewHermitian> = (0..samples).map(|_| random_unit_su2(rng)).collect();
        worst = worst.max(endpoint_spread(v, &g, &xs)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseInterval {
    pub lo: f64,
    pub hi: f64,
}

impl PhaseInterval {
    /// Distance from `x` to the interval, zero inside.
    pub fn excess(&self, x: f64) -> f64 {
        (self.lo - x).max(x - self.hi).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBoundReport {
    /// `[a_i + min b, a_i + max b]` for the sorted phases `a_i` of `P`.
    pub intervals: Vec<PhaseInterval>,
    /// Phases of `PQ`, lifted by multiples of `2 pi` and ordered so that
    /// the `i`th lies closest to the `i`th interval.
    pub phases: Vec<f64>,
    /// Smallest achievable worst excess over all assignments and lifts.
    pub worst_excess: f64,
    pub verdict: bool,
}

fn check_branch(u: &UnitaryMatrix) -> Result<Vec<f64>> {
    if unitary_eigenvalues(u).iter().any(|z| (z + 1.0).norm() <= 1e-12) {
        return Err(Error::BranchUndefined);
    }
    Ok(unitary_phases(u))
}

fn phase_intervals(p: &UnitaryMatrix, q: &UnitaryMatrix) -> Result<(Vec<PhaseInterval>, Vec<f64>)> {
    if p.dim() != q.dim() {
        return Err(invalid("P and Q must have the same size"));
    }
    let a = check_branch(p)?;
    let b = check_branch(q)?;
    let lo = b.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let intervals = a.iter().map(|ai| PhaseInterval { lo: ai + lo, hi: ai + hi }).collect();
    let c = unitary_phases(&p.mul(q)?);
    Ok((intervals, c))
}

/// Checks that the eigenvalues of `PQ` are `exp(i c_i)` with `c_i` in the
/// `i`th interval, for some matching of eigenvalues to intervals and some
/// choice of `2 pi` lifts.
pub fn phase_bound_check(p: &UnitaryMatrix, q: &UnitaryMatrix) -> Result<PhaseBoundReport> {
    let (intervals, c) = phase_intervals(p, q)?;
    let n = c.len();
    // cost[i][j]: best excess of eigenphase j against interval i.
    let lifted = |i: usize, j: usize| -> (f64, f64) {
        [-TAU, 0.0, TAU]
            .iter()
            .map(|k| c[j] + k)
            .map(|x| (intervals[i].excess(x), x))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("three lifts")
    };
    let cost: Vec<Vec<(f64, f64)>> = (0..n).map(|i| (0..n).map(|j| lifted(i, j)).collect()).collect();
    let mut thresholds: Vec<f64> = cost.iter().flatten().map(|x| x.0).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    // Bottleneck assignment: the smallest threshold admitting a perfect matching.
    let (mut lo, mut hi) = (0, thresholds.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(n, |i, j| cost[i][j].0 <= thresholds[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let worst_excess = thresholds[lo];
    let matching = perfect_matching(n, |i, j| cost[i][j].0 <= worst_excess).expect("threshold admits a matching");
    let phases = (0..n).map(|i| cost[i][matching[i]].1).collect();
    Ok(PhaseBoundReport {
        intervals,
        phases,
        worst_excess,
        verdict: worst_excess <= PHASE_EPS,
    })
}

/// The same test on the principal branch: the `i`th smallest principal
/// phase of `PQ` against the `i`th interval, without lifting.
pub fn phase_bound_check_raw(p: &UnitaryMatrix, q: &UnitaryMatrix) -> Result<PhaseBoundReport> {
    let (intervals, phases) = phase_intervals(p, q)?;
    let worst_excess = intervals
        .iter()
        .zip(&phases)
        .map(|(iv, &x)| iv.excess(x))
        .fold(0.0, f64::max);
    Ok(PhaseBoundReport {
        intervals,
        phases,
        worst_excess,
        verdict: worst_excess <= PHASE_EPS,
    })
}

/// Kuhn's augmenting-path matching; `result[i]` is the column matched to row `i`.
fn perfect_matching(n: usize, allowed: impl Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    fn augment(i: usize, n: usize, allowed: &dyn Fn(usize, usize) -> bool, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for j in 0..n {
            if allowed(i, j) && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, n, allowed, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; n];
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, n, &allowed, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut rows = vec![0; n];
    for (j, o) in owner.iter().enumerate() {
        rows[o.expect("perfect matching")] = j;
    }
    Some(rows)
}

/// Continuous eigenphase paths of `P exp(tB)` on `t in [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePaths {
    /// `paths[i][k]` is the `i`th phase at `t = k / steps`.
    pub paths: Vec<Vec<f64>>,
    pub steps: usize,
    /// Eigenphases of `B`, ascending.
    pub b: Vec<f64>,
}

impl PhasePaths {
    /// Forward differences `(c(t_{k+1}) - c(t_k)) * steps`.
    pub fn derivatives(&self) -> Vec<Vec<f64>> {
        let h = self.steps as f64;
        self.paths
            .iter()
            .map(|p| p.windows(2).map(|w| (w[1] - w[0]) * h).collect())
            .collect()
    }

    /// Backward difference at `t = 1` for each path.
    pub fn endpoint_derivatives(&self) -> Vec<f64> {
        self.derivatives().iter().map(|d| *d.last().expect("steps >= 1")).collect()
    }

    /// Largest excess of any difference quotient over `[min b, max b]`.
    pub fn derivative_excess(&self) -> f64 {
        let iv = PhaseInterval {
            lo: self.b.first().copied().unwrap_or(0.0),
            hi: self.b.last().copied().unwrap_or(0.0),
        };
        self.derivatives().iter().flatten().map(|&d| iv.excess(d)).fold(0.0, f64::max)
    }
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Tracks the eigenphases of `P exp(tB)` by nearest matching on the circle,
/// doubling the step count whenever a step jumps by `pi/2` or more.
pub fn eigenvalue_tracking(p: &UnitaryMatrix, b: &SkewHermitian, steps: usize) -> Result<PhasePaths> {
    if steps < 16 {
        return Err(invalid("eigenvalue tracking needs at least 16 steps"));
    }
    if p.dim() != b.dim() {
        return Err(invalid("P and B must have the same size"));
    }
    let mut steps = steps;
    loop {
        if steps > MAX_TRACKING_STEPS {
            return Err(Error::TrackingFailed { steps: MAX_TRACKING_STEPS });
        }
        if let Some(paths) = track_once(p, b, steps)? {
            let mut bs = b.eigen_phases();
            bs.sort_by(f64::total_cmp);
            return Ok(PhasePaths { paths, steps, b: bs });
        }
        log::debug!("eigenvalue tracking: refining to {} steps", steps * 2);
        steps *= 2;
    }
}

fn track_once(p: &UnitaryMatrix, b: &SkewHermitian, steps: usize) -> Result<Option<Vec<Vec<f64>>>> {
    let n = p.dim();
    let start = unitary_phases(p);
    let mut paths: Vec<Vec<f64>> = start.iter().map(|&c| vec![c]).collect();
    let frames: Vec<Vec<f64>> = (1..=steps)
        .into_par_iter()
        .map(|k| Ok(unitary_phases(&p.mul(&expm_skew(b, k as f64 / steps as f64)?)?)))
        .collect::<Result<_>>()?;
    for next in frames {
        let prev: Vec<f64> = paths.iter().map(|p| *p.last().expect("non-empty path")).collect();
        let mut pairs: Vec<(f64, usize, usize)> = (0..n)
            .flat_map(|i| next.iter().enumerate().map(move |(j, &c)| (i, j, c)))
            .map(|(i, j, c)| (wrap(c - prev[i]).abs(), i, j))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut taken_row = vec![false; n];
        let mut taken_col = vec![false; n];
        let mut step = vec![0.0; n];
        for (_, i, j) in pairs {
            if !taken_row[i] && !taken_col[j] {
                taken_row[i] = true;
                taken_col[j] = true;
                step[i] = wrap(next[j] - prev[i]);
            }
        }
        if step.iter().any(|d| d.abs() >= PI / 2.0) {
            return Ok(None);
        }
        for (path, d) in paths.iter_mut().zip(step) {
            let last = *path.last().expect("non-empty path");
            path.push(last + d);
        }
    }
    Ok(Some(paths))
}

/// `t_k = pi k / 33` for `k = 1..=32`.
pub fn default_t_grid() -> Vec<f64> {
    (1..=32).map(|k| PI * k as f64 / 33.0).collect()
}

/// `i diag(-I_l, I_m)`.
pub fn block_generator(l: usize, m: usize) -> SkewHermitian {
    let mut phases = vec![-1.0; l];
    phases.extend(std::iter::repeat_n(1.0, m));
    SkewHermitian::diag_imag(&phases).expect("diagonal imaginary matrix is skew")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorReport {
    pub t_grid: Vec<f64>,
    /// Distance of the spectrum from 1 at each grid point.
    pub distances: Vec<f64>,
    pub has_eig1: Vec<bool>,
    /// Best common unit vector and its worst residual `|Mv - v|`.
    pub common_vector: ComplexVector,
    pub common_residual: f64,
    pub shared_eigenvector: bool,
}

impl CommutatorReport {
    /// Eigenvalue 1 at every grid point or at none.
    pub fn all_or_nothing(&self) -> bool {
        self.has_eig1.iter().all(|&h| h) || self.has_eig1.iter().all(|&h| !h)
    }
}

/// Spectral distance from 1 of `exp(tX) U exp(-tX) U^*` on a grid, with
/// `X = i diag(-I_l, I_m)`.
pub fn commutator_eig1_persistence(
    u: &UnitaryMatrix,
    l: usize,
    m: usize,
    t_grid: Option<&[f64]>,
) -> Result<CommutatorReport> {
    if l == 0 || m == 0 || u.dim() != l + m {
        return Err(invalid(format!("U must be (l+m)x(l+m) with l, m >= 1; got {} for l={l}, m={m}", u.dim())));
    }
    let t_grid = t_grid.map(<[f64]>::to_vec).unwrap_or_else(default_t_grid);
    if t_grid.is_empty() || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(invalid("t grid must be non-empty and finite"));
    }
    let x = block_generator(l, m);
    let dim = l + m;
    let ms = t_grid
        .iter()
        .map(|&t| {
            let e = expm_skew(&x, t)?;
            Ok(e.matrix() * u.matrix() * e.adjoint().matrix() * u.adjoint().matrix())
        })
        .collect::<Result<Vec<ComplexMatrix>>>()?;
    let distances: Vec<f64> = ms
        .iter()
        .map(|m| {
            let w = UnitaryMatrix::new(m.clone())?;
            Ok(unitary_eigenvalues(&w).iter().map(|z| (z - 1.0).norm()).fold(f64::INFINITY, f64::min))
        })
        .collect::<Result<_>>()?;
    let has_eig1 = distances.iter().map(|&d| d <= 1e-9).collect();
    let mut gram = ComplexMatrix::zeros(dim, dim);
    for m in &ms {
        let d = m - ComplexMatrix::identity(dim, dim);
        gram += d.adjoint() * d;
    }
    let eig = SymmetricEigen::new(gram);
    let k = eig.eigenvalues.imin();
    let v: ComplexVector = eig.eigenvectors.column(k).into_owned();
    let common_residual = ms.iter().map(|m| (m * &v - &v).norm()).fold(0.0, f64::max);
    Ok(CommutatorReport {
        t_grid,
        distances,
        has_eig1,
        common_vector: v,
        common_residual,
        shared_eigenvector: common_residual <= 1e-8,
    })
}

/// `diag(A, B) [[C, -S], [S, C]] diag(D, E)` with Haar blocks of size `k`
/// and `S = diag(sin theta)`. `singular` forces `sin theta_0 = 0`; otherwise
/// every `sin theta_i` lies in `[0.1, 1]`.
pub fn cs_unitary(k: usize, singular: bool, rng: &mut RngStream) -> Result<UnitaryMatrix> {
    if k == 0 {
        return Err(invalid("block size must be positive"));
    }
    let blocks = |rng: &mut RngStream| -> Result<ComplexMatrix> {
        let a = haar_unitary(k, rng)?;
        let b = haar_unitary(k, rng)?;
        let mut m = ComplexMatrix::zeros(2 * k, 2 * k);
        m.view_mut((0, 0), (k, k)).copy_from(a.matrix());
        m.view_mut((k, k), (k, k)).copy_from(b.matrix());
        Ok(m)
    };
    let left = blocks(rng)?;
    let right = blocks(rng)?;
    let mut middle = ComplexMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        let s = if singular && i == 0 { 0.0 } else { rng.uniform_in(0.1, 1.0) };
        let c = (1.0 - s * s).max(0.0).sqrt();
        middle[(i, i)] = c.into();
        middle[(k + i, k + i)] = c.into();
        middle[(i, k + i)] = (-s).into();
        middle[(k + i, i)] = s.into();
    }
    UnitaryMatrix::new(left * middle * right)
}

/// Spectral distance from 1 of `exp(t1 X1) exp(-t2 X2)`.
pub fn nonintersection_distance(x1: &SkewHermitian, x2: &SkewHermitian, t1: f64, t2: f64) -> Result<f64> {
    let m = expm_skew(x1, t1)?.mul(&expm_skew(x2, -t2)?)?;
    Ok(unitary_eigenvalues(&m).iter().map(|z| (z - 1.0).norm()).fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub trials: usize,
    pub failures: usize,
    pub min_distance: f64,
    pub verdict: bool,
}

/// Random conjugates `X1, X2` of `X = i(x I + diag(-I_l, I_m))` and times
/// `pi > t1 > t2 > 0`: `exp(t1 X1)` and `exp(t2 X2)` never coincide.
pub fn geodesic_nonintersection_probe(
    x: f64,
    l: usize,
    m: usize,
    trials: usize,
    rng: &mut RngStream,
) -> Result<ProbeReport> {
    if !(x.is_finite() && x != 0.0 && x.abs() < 1.0) {
        return Err(invalid("x must satisfy 0 < |x| < 1"));
    }
    if l == 0 || l != m {
        return Err(invalid("probe requires l = m >= 1"));
    }
    let dim = l + m;
    let base = SkewHermitian::diag_imag(&vec![x; dim])?.add(&block_generator(l, m))?;
    let distances = rng
        .children(trials)
        .into_par_iter()
        .map(|mut r| {
            let x1 = haar_unitary(dim, &mut r)?.conjugate(&base)?;
            let x2 = haar_unitary(dim, &mut r)?.conjugate(&base)?;
            let (t1, t2) = loop {
                let (a, b) = (r.uniform_in(0.0, PI), r.uniform_in(0.0, PI));
                if a != b && a > 0.0 && b > 0.0 {
                    break (a.max(b), a.min(b));
                }
            };
            nonintersection_distance(&x1, &x2, t1, t2)
        })
        .collect::<Result<Vec<f64>>>()?;
    let failures = distances.iter().filter(|&&d| d < 1e-9).count();
    Ok(ProbeReport {
        trials,
        failures,
        min_distance: distances.iter().copied().fold(f64::INFINITY, f64::min),
        verdict: failures == 0,
    })
}

/// Short SHA-256 digest of matrix entries, for traceable checker rows.
pub fn inputs_hash(mats: &[&ComplexMatrix]) -> String {
    let mut h = Sha256::new();
    for m in mats {
        h.update((m.nrows() as u64).to_le_bytes());
        h.update((m.ncols() as u64).to_le_bytes());
        for z in m.iter() {
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// One checker trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckerRow {
    pub trial_id: usize,
    pub inputs_hash: String,
    pub verdict: bool,
    pub worst_residual: f64,
}

pub fn write_checker_csv<W: Write>(out: W, rows: &[CheckerRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// [`phase_bound_check`] on `trials` Haar pairs with sizes cycling through
/// `dims`.
pub fn phase_bound_trials(dims: &[usize], trials: usize, rng: &mut RngStream) -> Result<Vec<CheckerRow>> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(invalid("dimensions must be positive"));
    }
    rng.children(trials)
        .into_par_iter()
        .enumerate()
        .map(|(trial_id, mut r)| {
            let n = dims[trial_id % dims.len()];
            let p = haar_unitary(n, &mut r)?;
            let q = haar_unitary(n, &mut r)?;
            let report = phase_bound_check(&p, &q)?;
            Ok(CheckerRow {
                trial_id,
                inputs_hash: inputs_hash(&[p.matrix(), q.matrix()]),
                verdict: report.verdict,
                worst_residual: report.worst_excess,
            })
        })
        .collect()
}

/// [`commutator_eig1_persistence`] on `trials` constructed unitaries with
/// a singular off-diagonal block (`l = m = k`). The verdict is that
/// eigenvalue 1 persists on the whole grid with a shared eigenvector.
pub fn commutator_trials(k: usize, trials: usize, rng: &mut RngStream) -> Result<Vec<CheckerRow>> {
    rng.children(trials)
        .into_par_iter()
        .enumerate()
        .map(|(trial_id, mut r)| {
            let u = cs_unitary(k, true, &mut r)?;
            let report = commutator_eig1_persistence(&u, k, k, None)?;
            let worst = report.distances.iter().copied().fold(0.0, f64::max).max(report.common_residual);
            Ok(CheckerRow {
                trial_id,
                inputs_hash: inputs_hash(&[u.matrix()]),
                verdict: report.has_eig1.iter().all(|&h| h) && report.shared_eigenvector,
                worst_residual: worst,
            })
        })
        .collect()
}
