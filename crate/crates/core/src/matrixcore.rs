//! Dense complex matrix algebra for the unitary groups.
//!
//! Exponentials of skew-Hermitian matrices are computed from the Hermitian
//! eigendecomposition of `-iA`, so `exp(tA)` is unitary to rounding and its
//! eigenphases are known exactly. Eigenphases of general unitary matrices
//! come from the complex Schur form, which is diagonal for normal matrices.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, QR};
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::rng::RngStream;

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Construction tolerance for `A + A^* = 0`.
pub const SKEW_TOL: f64 = 1e-12;
/// Construction tolerance for `U^* U = I`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance for algebraic identities (phase recovery, similarity invariance).
pub const IDENTITY_TOL: f64 = 1e-9;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `max |A + A^*|`.
pub fn skew_defect(m: &ComplexMatrix) -> f64 {
    max_abs(&(m + m.adjoint()))
}

/// `max |U^* U - I|`.
pub fn unitary_defect(m: &ComplexMatrix) -> f64 {
    let n = m.ncols();
    max_abs(&(m.adjoint() * m - ComplexMatrix::identity(n, n)))
}

/// Principal argument in `(-pi, pi]`. Arguments within `1e-12` of `-pi`
/// are reported as `pi`.
pub fn principal_phase(z: Complex64) -> f64 {
    let phi = z.arg();
    if phi <= -PI + 1e-12 {
        PI
    } else {
        phi
    }
}

/// A skew-Hermitian matrix, an element of `u(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewHermitian(ComplexMatrix);

impl SkewHermitian {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(invalid(format!(
                "skew-Hermitian matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !is_finite(&m) {
            return Err(invalid("non-finite matrix entry"));
        }
        let defect = skew_defect(&m);
        if defect > SKEW_TOL {
            return Err(invalid(format!("matrix is not skew-Hermitian: |A + A*| = {defect:e}")));
        }
        Ok(Self(m))
    }

    /// Projects onto the skew-Hermitian part, `(M - M^*)/2`.
    pub fn skew_part(m: &ComplexMatrix) -> Result<Self> {
        Self::new((m - m.adjoint()).scale(0.5))
    }

    /// `i * diag(phases)`.
    pub fn diag_imag(phases: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(phases.len(), phases.iter().map(|&p| Complex64::new(0.0, p)));
        Self::new(DMatrix::from_diagonal(&d))
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(invalid("dimension mismatch in skew-Hermitian sum"));
        }
        Ok(Self(&self.0 + &other.0))
    }

    /// Eigenvalues of `-iA`, i.e. the real numbers `mu` with `i mu` in the
    /// spectrum, ascending.
    pub fn eigen_phases(&self) -> Vec<f64> {
        let h = self.0.map(|z| -I * z);
        let eig = SymmetricEigen::new(h);
        let mut w: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        w.sort_by(f64::total_cmp);
        w
    }
}

/// A unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(invalid("unitary matrix must be square and non-empty"));
        }
        if !is_finite(&m) {
            return Err(invalid("non-finite matrix entry"));
        }
        let defect = unitary_defect(&m);
        if defect > UNITARY_TOL {
            return Err(invalid(format!("matrix is not unitary: |U*U - I| = {defect:e}")));
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n, n))
    }

    /// `diag(e^{i phi_k})`.
    pub fn diag_phases(phases: &[f64]) -> Self {
        let d = DVector::from_iterator(phases.len(), phases.iter().map(|&p| Complex64::from_polar(1.0, p)));
        Self(DMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Product of two unitaries. Shapes must agree.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(invalid("dimension mismatch in unitary product"));
        }
        Ok(Self(&self.0 * &other.0))
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if v.len() != self.dim() {
            return Err(invalid("vector length does not match matrix"));
        }
        Ok(&self.0 * v)
    }

    pub fn determinant(&self) -> Complex64 {
        self.0.determinant()
    }
}

/// `exp(tA)` for skew-Hermitian `A`.
pub fn expm_skew(a: &SkewHermitian, t: f64) -> Result<UnitaryMatrix> {
    if !t.is_finite() {
        return Err(invalid("non-finite flow time"));
    }
    let h = a.matrix().map(|z| -I * z);
    let eig = SymmetricEigen::new(h);
    let v = &eig.eigenvectors;
    let phases = eig.eigenvalues.map(|w| Complex64::from_polar(1.0, t * w));
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    Ok(UnitaryMatrix(scaled * v.adjoint()))
}

/// Eigenvalues of a unitary matrix from its Schur form.
pub fn unitary_eigenvalues(u: &UnitaryMatrix) -> Vec<Complex64> {
    let schur = Schur::new(u.matrix().clone());
    let (_, t) = schur.unpack();
    t.diagonal().iter().copied().collect()
}

/// Eigenphases in `(-pi, pi]`, ascending.
pub fn unitary_phases(u: &UnitaryMatrix) -> Vec<f64> {
    let mut phases: Vec<f64> = unitary_eigenvalues(u).into_iter().map(principal_phase).collect();
    phases.sort_by(f64::total_cmp);
    phases
}

/// Haar-distributed element of `U(n)`: QR of a complex Ginibre matrix with
/// the columns of `Q` rotated by the phases of `diag(R)`.
pub fn haar_unitary(n: usize, rng: &mut RngStream) -> Result<UnitaryMatrix> {
    if n == 0 {
        return Err(invalid("haar_unitary requires n >= 1"));
    }
    let z = ComplexMatrix::from_fn(n, n, |_, _| rng.complex_normal());
    let qr = QR::new(z);
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let d = r[(j, j)];
        let norm = d.norm();
        if norm > 0.0 {
            col *= d / norm;
        }
    }
    UnitaryMatrix::new(q)
}

/// Adjoint action `g X g^*`.
pub trait Conjugate<X> {
    fn conjugate(&self, x: &X) -> Result<X>;
}

impl Conjugate<SkewHermitian> for UnitaryMatrix {
    fn conjugate(&self, x: &SkewHermitian) -> Result<SkewHermitian> {
        if self.dim() != x.dim() {
            return Err(invalid(format!(
                "cannot conjugate a {}x{} matrix by a {}x{} unitary",
                x.dim(),
                x.dim(),
                self.dim(),
                self.dim()
            )));
        }
        let m = &self.0 * x.matrix() * self.0.adjoint();
        SkewHermitian::skew_part(&m)
    }
}

pub fn conjugate<G: Conjugate<X>, X>(g: &G, x: &X) -> Result<X> {
    g.conjugate(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_skew(&SkewHermitian::zeros(3), 1.0).unwrap();
        assert!(max_abs(&(u.matrix() - ComplexMatrix::identity(3, 3))) < 1e-15);
    }

    #[test]
    fn expm_half_turn_is_minus_identity() {
        let a = SkewHermitian::diag_imag(&[1.0, -1.0]).unwrap();
        let u = expm_skew(&a, PI).unwrap();
        assert!(max_abs(&(u.matrix() + ComplexMatrix::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn expm_diagonal_scalar_exponentials() {
        let a = SkewHermitian::diag_imag(&[0.3, 0.7]).unwrap();
        let u = expm_skew(&a, 2.0).unwrap();
        let expect = UnitaryMatrix::diag_phases(&[0.6, 1.4]);
        assert!(max_abs(&(u.matrix() - expect.matrix())) < 1e-14);
    }

    #[test]
    fn expm_rejects_non_finite_time() {
        let a = SkewHermitian::diag_imag(&[1.0]).unwrap();
        assert!(expm_skew(&a, f64::NAN).is_err());
    }

    #[test]
    fn skew_construction_rejects_hermitian() {
        let m = ComplexMatrix::identity(2, 2);
        assert!(SkewHermitian::new(m).is_err());
        let mut bad = ComplexMatrix::zeros(2, 2);
        bad[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert!(SkewHermitian::new(bad).is_err());
    }

    #[test]
    fn phases_of_identity_and_diagonal() {
        assert_eq!(unitary_phases(&UnitaryMatrix::identity(3)), vec![0.0; 3]);
        let u = UnitaryMatrix::diag_phases(&[2.0, -1.0]);
        let p = unitary_phases(&u);
        assert_abs_diff_eq!(p[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn minus_identity_phases_take_plus_pi() {
        let u = UnitaryMatrix::new(-ComplexMatrix::identity(2, 2)).unwrap();
        assert_eq!(unitary_phases(&u), vec![PI, PI]);
    }

    #[test]
    fn haar_one_is_a_phase() {
        let mut rng = RngStream::new(3);
        let u = haar_unitary(1, &mut rng).unwrap();
        assert_abs_diff_eq!(u.matrix()[(0, 0)].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn haar_is_deterministic() {
        let a = haar_unitary(3, &mut RngStream::new(42)).unwrap();
        let b = haar_unitary(3, &mut RngStream::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn conjugation_fixes_identity_and_center() {
        let mut rng = RngStream::new(5);
        let x = SkewHermitian::diag_imag(&[0.2, -1.3, 0.4]).unwrap();
        let same = UnitaryMatrix::identity(3).conjugate(&x).unwrap();
        assert!(max_abs(&(same.matrix() - x.matrix())) < 1e-15);

        let g = haar_unitary(3, &mut rng).unwrap();
        let center = SkewHermitian::diag_imag(&[1.0, 1.0, 1.0]).unwrap();
        let c = g.conjugate(&center).unwrap();
        assert!(max_abs(&(c.matrix() - center.matrix())) < 1e-12);
    }

    #[test]
    fn conjugation_shape_mismatch() {
        let g = UnitaryMatrix::identity(2);
        let x = SkewHermitian::zeros(3);
        assert!(g.conjugate(&x).is_err());
    }
}
