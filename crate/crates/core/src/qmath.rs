//! Minimal complex 2x2 linear algebra and qubit-state primitives.
//!
//! Everything here is a plain value type: matrices and states are `Copy`,
//! operations are pure functions, and nothing needs synchronization to be
//! shared across threads. The algebra is deliberately fixed at dimension two;
//! eigenvalues come from the closed-form trace/determinant expression rather
//! than an iterative solver.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// Tolerance for exact algebraic identities (Hermiticity, unit trace, ...).
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Tolerance for up-to-phase operator comparison; looser than [`ALGEBRA_TOL`]
/// because composed optical trains accumulate error over ~8 factors.
pub const PHASE_TOL: f64 = 1e-10;

/// Violations of qubit-state invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace:?}, expected 1")]
    NonUnitTrace { trace: Complex64 },
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },
    #[error("Bloch vector norm {norm} exceeds 1")]
    BlochNormTooLarge { norm: f64 },
    #[error("expectation value has imaginary part {imag:.3e}; state is corrupted")]
    ComplexExpectation { imag: f64 },
}

/// Pauli axis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Dense complex 2x2 matrix with value semantics, row-major entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [[Complex64; 2]; 2],
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Mat2 {
    pub fn new(a: Complex64, b: Complex64, cc: Complex64, d: Complex64) -> Self {
        Self { m: [[a, b], [cc, d]] }
    }

    /// Matrix from real entries.
    pub fn from_real(a: f64, b: f64, cc: f64, d: f64) -> Self {
        Self::new(c(a, 0.0), c(b, 0.0), c(cc, 0.0), c(d, 0.0))
    }

    pub fn zero() -> Self {
        Self::from_real(0.0, 0.0, 0.0, 0.0)
    }

    pub fn identity() -> Self {
        Self::from_real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::new(
            self.m[0][0].conj(),
            self.m[1][0].conj(),
            self.m[0][1].conj(),
            self.m[1][1].conj(),
        )
    }

    /// Largest entry magnitude (max norm).
    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|e| e.norm())
            .fold(0.0, f64::max)
    }

    /// Operator (spectral) norm: largest singular value.
    pub fn op_norm(&self) -> f64 {
        let gram = self.adjoint() * *self;
        let (_, hi) = gram.hermitian_eigenvalues();
        hi.max(0.0).sqrt()
    }

    /// Eigenvalues `(low, high)` of a Hermitian matrix via the closed 2x2
    /// formula. Only meaningful when `self` is Hermitian.
    pub fn hermitian_eigenvalues(&self) -> (f64, f64) {
        let t = self.trace().re;
        let d = self.det().re;
        let disc = (t * t - 4.0 * d).max(0.0).sqrt();
        ((t - disc) / 2.0, (t + disc) / 2.0)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let diff = *self - self.adjoint();
        diff.max_abs() <= tol
    }

    /// Entrywise scaling by a real factor.
    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for e in row.iter_mut() {
                *e *= s;
            }
        }
        out
    }

    /// Apply to a column vector `(v0, v1)`.
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] += rhs.m[i][j];
            }
        }
        out
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] -= rhs.m[i][j];
            }
        }
        out
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let mut out = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        out
    }
}

impl Mul<Complex64> for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Complex64) -> Mat2 {
        let mut out = self;
        for row in out.m.iter_mut() {
            for e in row.iter_mut() {
                *e *= rhs;
            }
        }
        out
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

/// Standard Pauli matrix for the given axis: Hermitian, unitary, traceless.
pub fn pauli(axis: Axis) -> Mat2 {
    match axis {
        Axis::X => Mat2::from_real(0.0, 1.0, 1.0, 0.0),
        Axis::Y => Mat2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)),
        Axis::Z => Mat2::from_real(1.0, 0.0, 0.0, -1.0),
    }
}

/// True iff `a == phi * b` for some unit-modulus complex `phi`, up to `tol`
/// in the max norm.
///
/// The phase is read off at the entry where `|a| + |b|` peaks, which makes
/// the comparison symmetric in its arguments. Two all-zero matrices compare
/// equal.
pub fn equal_up_to_global_phase(a: &Mat2, b: &Mat2, tol: f64) -> bool {
    let mut pivot = (0usize, 0usize);
    let mut best = -1.0;
    for i in 0..2 {
        for j in 0..2 {
            let w = a.m[i][j].norm() + b.m[i][j].norm();
            if w > best {
                best = w;
                pivot = (i, j);
            }
        }
    }
    if best == 0.0 {
        return true;
    }
    let (i, j) = pivot;
    let num = a.m[i][j] * b.m[i][j].conj();
    let phase = if num.norm() == 0.0 {
        c(1.0, 0.0)
    } else {
        num / num.norm()
    };
    (*a - *b * phase).max_abs() <= tol
}

/// Real 3-vector `r` with `rho = (I + r . sigma) / 2`; diagnostic view of a
/// qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Qubit density matrix: Hermitian, unit trace, positive semidefinite
/// (each to within [`ALGEBRA_TOL`], eigenvalues above `-ALGEBRA_TOL`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Mat2);

impl DensityMatrix {
    /// Validates the state invariants and wraps the matrix.
    pub fn from_matrix(m: Mat2) -> Result<Self, StateError> {
        let herm_dev = (m - m.adjoint()).max_abs();
        if herm_dev > ALGEBRA_TOL {
            return Err(StateError::NotHermitian { deviation: herm_dev });
        }
        let tr = m.trace();
        if (tr - c(1.0, 0.0)).norm() > ALGEBRA_TOL {
            return Err(StateError::NonUnitTrace { trace: tr });
        }
        let (lo, _) = m.hermitian_eigenvalues();
        if lo < -ALGEBRA_TOL {
            return Err(StateError::NotPositiveSemidefinite { eigenvalue: lo });
        }
        Ok(Self(m))
    }

    /// Wraps without validation. The caller guarantees the invariants; used
    /// on hot paths where validity follows from construction.
    pub fn from_matrix_unchecked(m: Mat2) -> Self {
        Self(m)
    }

    /// `rho = (I + r . sigma) / 2`; fails if `|r|` exceeds 1 beyond tolerance.
    pub fn from_bloch(r: BlochVector) -> Result<Self, StateError> {
        let norm = r.norm();
        if norm > 1.0 + ALGEBRA_TOL {
            return Err(StateError::BlochNormTooLarge { norm });
        }
        let m = (Mat2::identity()
            + pauli(Axis::X).scale(r.x)
            + pauli(Axis::Y).scale(r.y)
            + pauli(Axis::Z).scale(r.z))
        .scale(0.5);
        Ok(Self(m))
    }

    pub fn maximally_mixed() -> Self {
        Self(Mat2::identity().scale(0.5))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    /// Expectation value `tr(rho * op)`.
    pub fn expectation(&self, op: &Mat2) -> Complex64 {
        (self.0 * *op).trace()
    }

    /// Bloch components `r_k = tr(rho * sigma_k)`.
    ///
    /// A valid state yields real components; an imaginary part above `1e-9`
    /// signals a corrupted matrix and is reported as an error.
    pub fn bloch(&self) -> Result<BlochVector, StateError> {
        let mut out = [0.0; 3];
        for (slot, axis) in out.iter_mut().zip([Axis::X, Axis::Y, Axis::Z]) {
            let v = self.expectation(&pauli(axis));
            if v.im.abs() > 1e-9 {
                return Err(StateError::ComplexExpectation { imag: v.im });
            }
            *slot = v.re;
        }
        Ok(BlochVector::new(out[0], out[1], out[2]))
    }
}
