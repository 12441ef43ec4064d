//! Coset presentations of the spheres and the projection `g -> m`.
//!
//! Base points: `e_{n+1}` in `C^{n+1}` for `U(n+1)/U(n)`, `e_{n+1}` in
//! `H^{n+1}` for `Sp(n+1)U(1)/Sp(n)U(1)`, and the identity for `SU(2)`.
//! The projection is the differential of the orbit map at the base point:
//!
//! * unitary sphere: `X e_{n+1}`; `q` is the imaginary part of the last
//!   coordinate and `u` the first `n` coordinates,
//! * symplectic sphere: `X e_{n+1} + e_{n+1} (x i)` where `x` is the `u(1)`
//!   scalar acting by right multiplication,
//! * `SU(2)` with isotropy generated by `(V, 1)`: `(X, x) -> X - x V`.
//!   `V = v diag(i, -i)` lies on the fixed axis of `m0`.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::matrixcore::{
    haar_unitary, ComplexMatrix, ComplexVector, Conjugate, SkewHermitian, UnitaryMatrix, I, SKEW_TOL,
};
use crate::quaternion::{
    haar_symplectic, orthonormalize, quat_norm, Quaternion, QuaternionMatrix, SymplecticMatrix,
};
use crate::randers::{RandersSpec, TangentVector};
use crate::rng::RngStream;

/// A sphere presented as a coset space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpace {
    /// `S^{2n+1} = U(n+1)/U(n)`.
    USphere { n: usize },
    /// `S^{4n+3} = Sp(n+1)U(1)/Sp(n)U(1)`.
    SpSphere { n: usize },
    /// `S^3 = (SU(2) x S^1)/<(V, 1)>`, `V = v diag(i, -i)`.
    Su2 { v: f64 },
}

impl ModelSpace {
    /// The presentation on which `spec` is invariant. For `SU(2)` the
    /// isotropy generator is `V = (c/b) diag(i, -i)`.
    pub fn of_spec(spec: &RandersSpec) -> Self {
        match *spec {
            RandersSpec::USphere { n, .. } => ModelSpace::USphere { n },
            RandersSpec::SpSphere { n, .. } => ModelSpace::SpSphere { n },
            RandersSpec::Su2 { b, c, .. } => ModelSpace::Su2 { v: c / b },
        }
    }

    /// Size of the matrix part of an algebra element.
    pub fn matrix_dim(&self) -> usize {
        match *self {
            ModelSpace::USphere { n } | ModelSpace::SpSphere { n } => n + 1,
            ModelSpace::Su2 { .. } => 2,
        }
    }

    fn check(&self) -> Result<()> {
        match *self {
            ModelSpace::USphere { n } | ModelSpace::SpSphere { n } if n < 1 => {
                Err(invalid("model sphere requires n >= 1"))
            }
            ModelSpace::Su2 { v } if !v.is_finite() => Err(invalid("non-finite isotropy generator")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlgebraMatrix {
    Complex(SkewHermitian),
    Quaternion(QuaternionMatrix),
}

/// An element `(X, x)` of the isometry Lie algebra: a matrix part and the
/// scalar of the extra `R` summand (zero when the family has none).
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    matrix: AlgebraMatrix,
    scalar: f64,
}

impl AlgebraElement {
    /// Element of `u(n+1)`.
    pub fn unitary(x: SkewHermitian) -> Self {
        Self {
            matrix: AlgebraMatrix::Complex(x),
            scalar: 0.0,
        }
    }

    /// Element `(X, x)` of `su(2) + R`.
    pub fn su2(x: SkewHermitian, scalar: f64) -> Result<Self> {
        if x.dim() != 2 {
            return Err(invalid("su(2) element must be 2x2"));
        }
        if x.matrix().trace().norm() > SKEW_TOL {
            return Err(invalid("su(2) element must be traceless"));
        }
        if !scalar.is_finite() {
            return Err(invalid("non-finite scalar part"));
        }
        Ok(Self {
            matrix: AlgebraMatrix::Complex(x),
            scalar,
        })
    }

    /// Element `(X, x)` of `sp(n+1) + R`.
    pub fn symplectic(x: QuaternionMatrix, scalar: f64) -> Result<Self> {
        if x.nrows() != x.ncols() || x.nrows() == 0 {
            return Err(invalid("sp(n+1) element must be square"));
        }
        if !x.is_finite() || !scalar.is_finite() {
            return Err(invalid("non-finite algebra element"));
        }
        let defect = x.skew_defect();
        if defect > SKEW_TOL {
            return Err(invalid(format!("quaternion matrix is not skew: {defect:e}")));
        }
        Ok(Self {
            matrix: AlgebraMatrix::Quaternion(x),
            scalar,
        })
    }

    /// `(x' i I, x)` in `sp(n+1) + R`.
    pub fn symplectic_scalar_i(dim: usize, xprime: f64, scalar: f64) -> Result<Self> {
        let entries = vec![Quaternion::I.scale(xprime); dim];
        Self::symplectic(QuaternionMatrix::from_diagonal(&entries), scalar)
    }

    pub fn matrix(&self) -> &AlgebraMatrix {
        &self.matrix
    }

    pub fn scalar(&self) -> f64 {
        self.scalar
    }

    pub fn dim(&self) -> usize {
        match &self.matrix {
            AlgebraMatrix::Complex(x) => x.dim(),
            AlgebraMatrix::Quaternion(x) => x.nrows(),
        }
    }

    /// Central in `u(n+1)` means a multiple of `iI`; in `su(2) + R` and
    /// `sp(n+1) + R` the matrix part must vanish.
    pub fn is_central(&self, tol: f64) -> bool {
        match &self.matrix {
            AlgebraMatrix::Complex(x) => {
                let m = x.matrix();
                let mean = m.trace() / m.nrows() as f64;
                let centre = ComplexMatrix::identity(m.nrows(), m.ncols()) * mean;
                crate::matrixcore::max_abs(&(m - centre)) <= tol
            }
            AlgebraMatrix::Quaternion(x) => x.max_abs() <= tol,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let matrix = match &self.matrix {
            AlgebraMatrix::Complex(x) => AlgebraMatrix::Complex(x.scale(s)),
            AlgebraMatrix::Quaternion(x) => AlgebraMatrix::Quaternion(x.scale(s)),
        };
        Self {
            matrix,
            scalar: self.scalar * s,
        }
    }

    pub fn add(&self, o: &AlgebraElement) -> Result<Self> {
        let matrix = match (&self.matrix, &o.matrix) {
            (AlgebraMatrix::Complex(a), AlgebraMatrix::Complex(b)) => AlgebraMatrix::Complex(a.add(b)?),
            (AlgebraMatrix::Quaternion(a), AlgebraMatrix::Quaternion(b)) => AlgebraMatrix::Quaternion(a.add(b)?),
            _ => return Err(invalid("cannot add complex and quaternion algebra elements")),
        };
        Ok(Self {
            matrix,
            scalar: self.scalar + o.scalar,
        })
    }

    /// `Ad_g` for a unitary `g`; the scalar part is fixed.
    pub fn conjugate_unitary(&self, g: &UnitaryMatrix) -> Result<Self> {
        match &self.matrix {
            AlgebraMatrix::Complex(x) => Ok(Self {
                matrix: AlgebraMatrix::Complex(g.conjugate(x)?),
                scalar: self.scalar,
            }),
            AlgebraMatrix::Quaternion(_) => Err(invalid("unitary conjugation of a quaternion element")),
        }
    }

    /// `Ad_g` for a symplectic `g`; the scalar part is fixed.
    pub fn conjugate_symplectic(&self, g: &SymplecticMatrix) -> Result<Self> {
        match &self.matrix {
            AlgebraMatrix::Quaternion(x) => Ok(Self {
                matrix: AlgebraMatrix::Quaternion(g.conjugate(x)?),
                scalar: self.scalar,
            }),
            AlgebraMatrix::Complex(_) => Err(invalid("symplectic conjugation of a complex element")),
        }
    }
}

/// `diag(i, -i)`, the `m0` axis of `su(2)`.
pub fn su2_axis() -> SkewHermitian {
    SkewHermitian::diag_imag(&[1.0, -1.0]).expect("diagonal imaginary matrix is skew")
}

/// `[[i alpha, beta], [-conj(beta), -i alpha]]`; its standard length is
/// `sqrt(alpha^2 + |beta|^2)`.
pub fn su2_element(alpha: f64, beta: Complex64) -> Result<SkewHermitian> {
    let m = ComplexMatrix::from_row_slice(2, 2, &[I * alpha, beta, -beta.conj(), -I * alpha]);
    SkewHermitian::new(m)
}

/// Standard length on `su(2)`, `sqrt(-tr(X^2)/2)`.
pub fn su2_eq_norm(x: &SkewHermitian) -> f64 {
    let m = x.matrix();
    (-(m * m).trace().re / 2.0).max(0.0).sqrt()
}

/// Projection of `e` to the tangent model space at the base point.
pub fn project_to_m(space: &ModelSpace, e: &AlgebraElement) -> Result<TangentVector> {
    space.check()?;
    if e.dim() != space.matrix_dim() {
        return Err(invalid(format!(
            "algebra element of size {} does not act on this model space (size {})",
            e.dim(),
            space.matrix_dim()
        )));
    }
    match (space, &e.matrix) {
        (ModelSpace::USphere { n }, AlgebraMatrix::Complex(x)) => {
            if e.scalar != 0.0 {
                return Err(invalid("u(n+1) has no separate scalar summand"));
            }
            let col = x.matrix().column(*n);
            Ok(TangentVector::complex(col[*n].im, col.rows(0, *n).into_owned()))
        }
        (ModelSpace::Su2 { v }, AlgebraMatrix::Complex(x)) => {
            if x.matrix().trace().norm() > SKEW_TOL {
                return Err(invalid("su(2) element must be traceless"));
            }
            let xi = x.matrix() - su2_axis().matrix() * Complex64::from(e.scalar * v);
            Ok(TangentVector::complex(xi[(0, 0)].im, DVector::from_element(1, xi[(0, 1)])))
        }
        (ModelSpace::SpSphere { n }, AlgebraMatrix::Quaternion(x)) => {
            let q = x.get(*n, *n) + Quaternion::I.scale(e.scalar);
            let u = (0..*n).map(|r| x.get(r, *n)).collect();
            Ok(TangentVector::quaternion(q.imag_parts(), u))
        }
        _ => Err(invalid("algebra element family does not match the model space")),
    }
}

/// Projections of `trials` Haar conjugates of `e`.
pub fn orbit_projection_sample(
    space: &ModelSpace,
    e: &AlgebraElement,
    trials: usize,
    rng: &mut RngStream,
) -> Result<Vec<TangentVector>> {
    // Surface shape errors even when trials == 0.
    project_to_m(space, e)?;
    let dim = space.matrix_dim();
    rng.children(trials)
        .into_par_iter()
        .map(|mut child| {
            let conj = match space {
                ModelSpace::SpSphere { .. } => e.conjugate_symplectic(&haar_symplectic(dim, &mut child)?)?,
                _ => e.conjugate_unitary(&haar_unitary(dim, &mut child)?)?,
            };
            project_to_m(space, &conj)
        })
        .collect()
}

/// Permutation matrix exchanging coordinates `i` and `j`.
pub fn weyl_transposition(dim: usize, i: usize, j: usize) -> Result<UnitaryMatrix> {
    if i >= dim || j >= dim {
        return Err(invalid("transposition index out of range"));
    }
    let mut m = ComplexMatrix::identity(dim, dim);
    m.swap_columns(i, j);
    UnitaryMatrix::new(m)
}

/// Quaternionic permutation matrix exchanging coordinates `i` and `j`.
pub fn weyl_transposition_sp(dim: usize, i: usize, j: usize) -> Result<SymplecticMatrix> {
    let p = weyl_transposition(dim, i, j)?;
    SymplecticMatrix::new(QuaternionMatrix::new(p.into_matrix(), ComplexMatrix::zeros(dim, dim))?)
}

/// `diag(1, .., j, .., 1)`: conjugation flips the sign of an `i`-valued
/// diagonal entry at `index`, since `j i conj(j) = -i`.
pub fn weyl_sign_flip(dim: usize, index: usize) -> Result<SymplecticMatrix> {
    if index >= dim {
        return Err(invalid("sign flip index out of range"));
    }
    let mut d = vec![Quaternion::ONE; dim];
    d[index] = Quaternion::J;
    SymplecticMatrix::diagonal(&d)
}

/// Conjugates of a diagonal `X` that bring each diagonal entry to the
/// bottom-right corner.
pub fn weyl_corner_images(x: &SkewHermitian) -> Result<Vec<SkewHermitian>> {
    let dim = x.dim();
    (0..dim)
        .map(|k| weyl_transposition(dim, k, dim - 1)?.conjugate(x))
        .collect()
}

/// Closed-form projection of `(Q^* (x' i I) Q, x)` where `Q` has last
/// column `(q'', 0, .., 0, q)` with `q''` in `span{j, k}` and last row
/// `(sqrt(1-|q|^2) w, q)`:
///
/// ```text
/// m0 = (x'(2|q1|^2 - 1) + x) i + 2 x' conj(q1) q2 k
/// u  = 2 x' sqrt(1 - |q|^2) conj(w_a) i q1
/// ```
///
/// with `q = q1 + q2 j`. Points sweep the standard sphere of radius `x'`
/// centred at `x i`.
pub fn sp_orbit_projection(xprime: f64, x: f64, q: Quaternion, w: &[Quaternion]) -> Result<TangentVector> {
    if !xprime.is_finite() || !x.is_finite() || !q.is_finite() || w.iter().any(|z| !z.is_finite()) {
        return Err(invalid("non-finite input"));
    }
    if q.norm() > 1.0 + 1e-12 {
        return Err(invalid(format!("|q| = {} exceeds 1", q.norm())));
    }
    if w.is_empty() || (quat_norm(w) - 1.0).abs() > 1e-10 {
        return Err(invalid("w must be a unit quaternion vector"));
    }
    let rest = (1.0 - q.norm_sqr()).max(0.0).sqrt();
    let q1 = Quaternion::from_complex(q.z1);
    let q2 = Quaternion::from_complex(q.z2);
    let m0 = Quaternion::I.scale(xprime * (2.0 * q.z1.norm_sqr() - 1.0) + x)
        + (q1.conj() * q2 * Quaternion::K).scale(2.0 * xprime);
    let u = w
        .iter()
        .map(|wa| (wa.conj() * Quaternion::I * q1).scale(2.0 * xprime * rest))
        .collect();
    Ok(TangentVector::quaternion(m0.imag_parts(), u))
}

/// The symplectic matrix realizing the parameters of [`sp_orbit_projection`]:
/// `symplectic_completion((sqrt(1-|q|^2) w, q))`.
pub fn sp_orbit_frame(q: Quaternion, w: &[Quaternion]) -> Result<SymplecticMatrix> {
    let rest = (1.0 - q.norm_sqr()).max(0.0).sqrt();
    let mut row: Vec<Quaternion> = w.iter().map(|z| z.scale(rest)).collect();
    row.push(q);
    symplectic_completion(&row)
}

/// A matrix of `Sp(n)` with the given last row whose last column is
/// `(q'', 0, .., 0, q)` with `q''` in `span{j, k}`.
///
/// Built on `P = Q^*`: its last column is the conjugate of the row, its
/// first column the unit vector of `span{p, e_n}` orthogonal to `p`
/// (right-multiplied by `j`), and the middle columns complete the basis
/// inside `{p, e_n}^perp`.
pub fn symplectic_completion(last_row: &[Quaternion]) -> Result<SymplecticMatrix> {
    let n = last_row.len();
    if n == 0 {
        return Err(invalid("empty row"));
    }
    if last_row.iter().any(|q| !q.is_finite()) {
        return Err(invalid("non-finite row"));
    }
    let norm = quat_norm(last_row);
    if norm < 1e-12 {
        return Err(invalid("degenerate (zero) row"));
    }
    if (norm - 1.0).abs() > 1e-10 {
        return Err(invalid(format!("row must have unit norm, got {norm}")));
    }
    if n == 1 {
        return SymplecticMatrix::new(QuaternionMatrix::from_diagonal(last_row));
    }

    let unit = |k: usize| -> Vec<Quaternion> {
        let mut e = vec![Quaternion::ZERO; n];
        e[k] = Quaternion::ONE;
        e
    };
    let p: Vec<Quaternion> = last_row.iter().map(Quaternion::conj).collect();
    let first = match orthonormalize(&unit(n - 1), std::slice::from_ref(&p)) {
        Some(w) => w.into_iter().map(|z| z * Quaternion::J).collect(),
        None => (0..n - 1)
            .find_map(|k| orthonormalize(&unit(k), std::slice::from_ref(&p)))
            .ok_or_else(|| invalid("failed to complete the basis"))?,
    };
    let mut basis = vec![p.clone(), first.clone()];
    let mut middle = Vec::with_capacity(n - 2);
    for k in 0..n {
        if middle.len() == n - 2 {
            break;
        }
        if let Some(v) = orthonormalize(&unit(k), &basis) {
            basis.push(v.clone());
            middle.push(v);
        }
    }
    if middle.len() != n - 2 {
        return Err(invalid("failed to complete the basis"));
    }
    let mut cols = Vec::with_capacity(n);
    cols.push(first);
    cols.extend(middle);
    cols.push(p);
    let pmat = QuaternionMatrix::from_columns(&cols)?;
    SymplecticMatrix::new(pmat.adjoint())
}

/// Vector `(0, .., 0, 1)` of length `dim`.
pub fn base_vector(dim: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    v[dim - 1] = Complex64::new(1.0, 0.0);
    v
}
