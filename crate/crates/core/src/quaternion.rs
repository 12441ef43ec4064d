//! Quaternions and quaternion matrices in the complex-pair model.
//!
//! A quaternion is stored as `z1 + z2 j` with `z1, z2` complex and the
//! complex unit identified with `i`. Since `j z = conj(z) j`,
//!
//! ```text
//! (z1 + z2 j)(w1 + w2 j) = (z1 w1 - z2 conj(w2)) + (z1 w2 + z2 conj(w1)) j
//! ```
//!
//! and a quaternion matrix `Q = Q1 + Q2 j` multiplies by the same rule with
//! conjugation applied entrywise. `Q^* = Q1^* - Q2^T j`, so `Q^* Q = I`
//! splits into the complex conditions
//! `Q1^* Q2 - Q2^T conj(Q1) = 0` and `Q1^* Q1 + Q2^T conj(Q2) = I`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::matrixcore::{max_abs, ComplexMatrix, Conjugate, UNITARY_TOL};
use crate::rng::RngStream;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion { z1: ZERO, z2: ZERO };
    pub const ONE: Quaternion = Quaternion { z1: ONE, z2: ZERO };
    pub const I: Quaternion = Quaternion { z1: Complex64 { re: 0.0, im: 1.0 }, z2: ZERO };
    pub const J: Quaternion = Quaternion { z1: ZERO, z2: ONE };
    pub const K: Quaternion = Quaternion { z1: ZERO, z2: Complex64 { re: 0.0, im: 1.0 } };

    pub fn from_pair(z1: Complex64, z2: Complex64) -> Self {
        Self { z1, z2 }
    }

    /// `w + x i + y j + z k`.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self {
            z1: Complex64::new(w, x),
            z2: Complex64::new(y, z),
        }
    }

    /// Pure imaginary quaternion `l1 i + l2 j + l3 k`.
    pub fn imaginary(parts: [f64; 3]) -> Self {
        Self::new(0.0, parts[0], parts[1], parts[2])
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self { z1: z, z2: ZERO }
    }

    pub fn real(s: f64) -> Self {
        Self::new(s, 0.0, 0.0, 0.0)
    }

    /// `[w, x, y, z]`.
    pub fn components(&self) -> [f64; 4] {
        [self.z1.re, self.z1.im, self.z2.re, self.z2.im]
    }

    pub fn re(&self) -> f64 {
        self.z1.re
    }

    /// Coefficients along `i, j, k`.
    pub fn imag_parts(&self) -> [f64; 3] {
        [self.z1.im, self.z2.re, self.z2.im]
    }

    pub fn conj(&self) -> Self {
        Self {
            z1: self.z1.conj(),
            z2: -self.z2,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.z1.norm_sqr() + self.z2.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            z1: self.z1 * s,
            z2: self.z2 * s,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|x| x.is_finite())
    }

    /// Unit quaternion `mu` with `mu a conj(mu) = b` for unit imaginary `a, b`.
    pub fn rotation_between(a: Quaternion, b: Quaternion) -> Quaternion {
        let candidate = Quaternion::ONE - b * a;
        let n = candidate.norm();
        if n > 1e-8 {
            return candidate.scale(1.0 / n);
        }
        // a = -b: half turn about any axis orthogonal to a.
        let [x, y, z] = a.imag_parts();
        let trial = if x.abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let dot = x * trial[0] + y * trial[1] + z * trial[2];
        let axis = Quaternion::imaginary([trial[0] - dot * x, trial[1] - dot * y, trial[2] - dot * z]);
        axis.scale(1.0 / axis.norm())
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion {
            z1: self.z1 + o.z1,
            z2: self.z2 + o.z2,
        }
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion {
            z1: self.z1 - o.z1,
            z2: self.z2 - o.z2,
        }
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion { z1: -self.z1, z2: -self.z2 }
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion {
            z1: self.z1 * o.z1 - self.z2 * o.z2.conj(),
            z2: self.z1 * o.z2 + self.z2 * o.z1.conj(),
        }
    }
}

/// `sum_k conj(x_k) y_k`.
pub fn quat_inner(x: &[Quaternion], y: &[Quaternion]) -> Quaternion {
    x.iter().zip(y).fold(Quaternion::ZERO, |acc, (a, b)| acc + a.conj() * *b)
}

pub fn quat_norm(x: &[Quaternion]) -> f64 {
    x.iter().map(Quaternion::norm_sqr).sum::<f64>().sqrt()
}

/// A quaternion matrix `Q1 + Q2 j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionMatrix {
    q1: ComplexMatrix,
    q2: ComplexMatrix,
}

impl QuaternionMatrix {
    pub fn new(q1: ComplexMatrix, q2: ComplexMatrix) -> Result<Self> {
        if q1.shape() != q2.shape() {
            return Err(invalid(format!(
                "quaternion parts differ in shape: {:?} vs {:?}",
                q1.shape(),
                q2.shape()
            )));
        }
        Ok(Self { q1, q2 })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            q1: ComplexMatrix::zeros(rows, cols),
            q2: ComplexMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            q1: ComplexMatrix::identity(n, n),
            q2: ComplexMatrix::zeros(n, n),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Quaternion) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    pub fn from_diagonal(entries: &[Quaternion]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |r, c| if r == c { entries[r] } else { Quaternion::ZERO })
    }

    pub fn from_columns(cols: &[Vec<Quaternion>]) -> Result<Self> {
        let rows = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != rows) {
            return Err(invalid("ragged quaternion columns"));
        }
        Ok(Self::from_fn(rows, cols.len(), |r, c| cols[c][r]))
    }

    pub fn q1(&self) -> &ComplexMatrix {
        &self.q1
    }

    pub fn q2(&self) -> &ComplexMatrix {
        &self.q2
    }

    pub fn nrows(&self) -> usize {
        self.q1.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.q1.ncols()
    }

    pub fn get(&self, r: usize, c: usize) -> Quaternion {
        Quaternion::from_pair(self.q1[(r, c)], self.q2[(r, c)])
    }

    pub fn set(&mut self, r: usize, c: usize, q: Quaternion) {
        self.q1[(r, c)] = q.z1;
        self.q2[(r, c)] = q.z2;
    }

    pub fn column(&self, c: usize) -> Vec<Quaternion> {
        (0..self.nrows()).map(|r| self.get(r, c)).collect()
    }

    pub fn row(&self, r: usize) -> Vec<Quaternion> {
        (0..self.ncols()).map(|c| self.get(r, c)).collect()
    }

    pub fn mul(&self, o: &QuaternionMatrix) -> Result<QuaternionMatrix> {
        if self.ncols() != o.nrows() {
            return Err(invalid("quaternion matrix product shape mismatch"));
        }
        Ok(QuaternionMatrix {
            q1: &self.q1 * &o.q1 - &self.q2 * o.q2.conjugate(),
            q2: &self.q1 * &o.q2 + &self.q2 * o.q1.conjugate(),
        })
    }

    pub fn apply(&self, v: &[Quaternion]) -> Result<Vec<Quaternion>> {
        if v.len() != self.ncols() {
            return Err(invalid("quaternion vector length mismatch"));
        }
        Ok((0..self.nrows())
            .map(|r| (0..self.ncols()).fold(Quaternion::ZERO, |acc, c| acc + self.get(r, c) * v[c]))
            .collect())
    }

    /// Quaternionic conjugate transpose.
    pub fn adjoint(&self) -> QuaternionMatrix {
        QuaternionMatrix {
            q1: self.q1.adjoint(),
            q2: -self.q2.transpose(),
        }
    }

    pub fn add(&self, o: &QuaternionMatrix) -> Result<QuaternionMatrix> {
        if self.q1.shape() != o.q1.shape() {
            return Err(invalid("quaternion matrix sum shape mismatch"));
        }
        Ok(QuaternionMatrix {
            q1: &self.q1 + &o.q1,
            q2: &self.q2 + &o.q2,
        })
    }

    pub fn sub(&self, o: &QuaternionMatrix) -> Result<QuaternionMatrix> {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> QuaternionMatrix {
        QuaternionMatrix {
            q1: self.q1.scale(s),
            q2: self.q2.scale(s),
        }
    }

    /// Largest entry norm.
    pub fn max_abs(&self) -> f64 {
        self.q1
            .iter()
            .zip(self.q2.iter())
            .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.q1.iter().chain(self.q2.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max |Q + Q^*|`.
    pub fn skew_defect(&self) -> f64 {
        self.add(&self.adjoint()).map_or(f64::INFINITY, |m| m.max_abs())
    }

    /// `(Q - Q^*)/2`.
    pub fn skew_part(&self) -> QuaternionMatrix {
        let adj = self.adjoint();
        QuaternionMatrix {
            q1: (&self.q1 - &adj.q1).scale(0.5),
            q2: (&self.q2 - &adj.q2).scale(0.5),
        }
    }

    /// The `2n x 2n` complex matrix `[[Q1, Q2], [-conj(Q2), conj(Q1)]]`.
    /// It is a ring homomorphism; the crate uses it as an independent check
    /// of the pair arithmetic.
    pub fn complex_embedding(&self) -> ComplexMatrix {
        let (r, c) = self.q1.shape();
        let mut out = ComplexMatrix::zeros(2 * r, 2 * c);
        out.view_mut((0, 0), (r, c)).copy_from(&self.q1);
        out.view_mut((0, c), (r, c)).copy_from(&self.q2);
        out.view_mut((r, 0), (r, c)).copy_from(&(-self.q2.conjugate()));
        out.view_mut((r, c), (r, c)).copy_from(&self.q1.conjugate());
        out
    }
}

/// Residuals of the two complex symplectic conditions.
pub fn symplectic_defects(q: &QuaternionMatrix) -> (f64, f64) {
    let q1 = q.q1();
    let q2 = q.q2();
    let n = q.ncols();
    let cross = q1.adjoint() * q2 - q2.transpose() * q1.conjugate();
    let gram = q1.adjoint() * q1 + q2.transpose() * q2.conjugate() - ComplexMatrix::identity(n, n);
    (max_abs(&cross), max_abs(&gram))
}

/// An element of `Sp(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix(QuaternionMatrix);

impl SymplecticMatrix {
    pub fn new(q: QuaternionMatrix) -> Result<Self> {
        if q.nrows() != q.ncols() || q.nrows() == 0 {
            return Err(invalid("symplectic matrix must be square and non-empty"));
        }
        if !q.is_finite() {
            return Err(invalid("non-finite matrix entry"));
        }
        let (cross, gram) = symplectic_defects(&q);
        if cross > UNITARY_TOL || gram > UNITARY_TOL {
            return Err(invalid(format!(
                "matrix is not symplectic: cross defect {cross:e}, gram defect {gram:e}"
            )));
        }
        Ok(Self(q))
    }

    pub fn identity(n: usize) -> Self {
        Self(QuaternionMatrix::identity(n))
    }

    /// Diagonal matrix of unit quaternions.
    pub fn diagonal(entries: &[Quaternion]) -> Result<Self> {
        Self::new(QuaternionMatrix::from_diagonal(entries))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &QuaternionMatrix {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn mul(&self, o: &SymplecticMatrix) -> Result<SymplecticMatrix> {
        Ok(Self(self.0.mul(&o.0)?))
    }
}

/// Haar-distributed element of `Sp(n)`: Gram-Schmidt over the quaternions
/// applied to a Gaussian quaternion matrix.
pub fn haar_symplectic(n: usize, rng: &mut RngStream) -> Result<SymplecticMatrix> {
    if n == 0 {
        return Err(invalid("haar_symplectic requires n >= 1"));
    }
    let mut cols: Vec<Vec<Quaternion>> = Vec::with_capacity(n);
    while cols.len() < n {
        let v: Vec<Quaternion> = (0..n)
            .map(|_| Quaternion::new(rng.normal(), rng.normal(), rng.normal(), rng.normal()))
            .collect();
        if let Some(u) = orthonormalize(&v, &cols) {
            cols.push(u);
        }
    }
    SymplecticMatrix::new(QuaternionMatrix::from_columns(&cols)?)
}

/// Removes the components of `v` along the orthonormal `basis` (scalars act
/// on the right) and normalizes. Two passes of modified Gram-Schmidt.
/// Returns `None` when `v` is numerically in the span of `basis`.
pub(crate) fn orthonormalize(v: &[Quaternion], basis: &[Vec<Quaternion>]) -> Option<Vec<Quaternion>> {
    let start = quat_norm(v);
    let mut w = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let coef = quat_inner(b, &w);
            for (wk, bk) in w.iter_mut().zip(b) {
                *wk = *wk - *bk * coef;
            }
        }
    }
    let norm = quat_norm(&w);
    if norm <= 1e-10 * start.max(1e-300) {
        return None;
    }
    Some(w.into_iter().map(|q| q.scale(1.0 / norm)).collect())
}

impl Conjugate<QuaternionMatrix> for SymplecticMatrix {
    fn conjugate(&self, x: &QuaternionMatrix) -> Result<QuaternionMatrix> {
        if x.nrows() != self.dim() || x.ncols() != self.dim() {
            return Err(invalid(format!(
                "cannot conjugate a {}x{} quaternion matrix by Sp({})",
                x.nrows(),
                x.ncols(),
                self.dim()
            )));
        }
        let m = self.0.mul(x)?.mul(&self.0.adjoint())?;
        Ok(m.skew_part())
    }
}
