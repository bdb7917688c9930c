//! 2×2 complex matrices, the groups U(1,1) / SU(1,1) / SL(2,ℝ), and
//! long products kept in log-scaled form.
//!
//! The Szegő transfer matrices live in U(1,1): they preserve the indefinite
//! form `J = diag(1, -1)`, i.e. `m* J m = J`, and have unimodular
//! determinant. Dividing by a square root of the determinant lands in
//! SU(1,1), and the Cayley-type unitary
//!
//! ```text
//! U = 1/√2 · ( -i  1 )
//!            (  i  1 )
//! ```
//!
//! conjugates SU(1,1) onto SL(2,ℝ).

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for group-membership predicates.
pub const GROUP_TOL: f64 = 1e-9;

/// Tolerance on `|det m| = 1` accepted by [`Mat2C::normalize_det`].
pub const DET_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A column vector in ℂ².
pub type Vec2C = [Complex64; 2];

/// Row-major 2×2 complex matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2C {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mat2C {
    pub const IDENTITY: Mat2C = Mat2C {
        a: ONE,
        b: ZERO,
        c: ZERO,
        d: ONE,
    };

    /// The indefinite form `J = diag(1, -1)`.
    pub const J: Mat2C = Mat2C {
        a: ONE,
        b: ZERO,
        c: ZERO,
        d: Complex64::new(-1.0, 0.0),
    };

    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2C { a, b, c, d }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2C::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn diag(x: Complex64, y: Complex64) -> Self {
        Mat2C::new(x, ZERO, ZERO, y)
    }

    /// The conjugating unitary `U` taking SU(1,1) to SL(2,ℝ).
    pub fn cayley() -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Mat2C::new(-I * s, s, I * s, s)
    }

    pub fn matmul(&self, other: &Mat2C) -> Mat2C {
        Mat2C {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn apply(&self, v: &Vec2C) -> Vec2C {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn scale(&self, s: Complex64) -> Mat2C {
        Mat2C::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn sub(&self, other: &Mat2C) -> Mat2C {
        Mat2C::new(
            self.a - other.a,
            self.b - other.b,
            self.c - other.c,
            self.d - other.d,
        )
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat2C {
        Mat2C::new(self.a.conj(), self.c.conj(), self.b.conj(), self.d.conj())
    }

    /// Exact 2×2 inverse. The caller guarantees a nonsingular matrix; every
    /// cocycle matrix here has unimodular determinant.
    pub fn inverse(&self) -> Mat2C {
        let inv_det = self.det().inv();
        Mat2C::new(
            self.d * inv_det,
            -self.b * inv_det,
            -self.c * inv_det,
            self.a * inv_det,
        )
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    /// Largest absolute value of the imaginary parts of the entries.
    pub fn max_imag(&self) -> f64 {
        [self.a.im, self.b.im, self.c.im, self.d.im]
            .iter()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c, self.d]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Both singular values, largest first.
    pub fn singular_values(&self) -> (f64, f64) {
        // Eigenvalues of m* m in half-difference form; F² − 4|det|² loses
        // half the digits when the singular values are close.
        let p = self.a.norm_sqr() + self.c.norm_sqr();
        let r = self.b.norm_sqr() + self.d.norm_sqr();
        let q = self.a.conj() * self.b + self.c.conj() * self.d;
        let half = (p - r) / 2.0;
        let s1 = ((p + r) / 2.0 + half.hypot(q.norm())).sqrt();
        let det = self.det().norm();
        // s1 * s2 = |det| is better conditioned than the difference formula.
        let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
        (s1, s2)
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> f64 {
        self.singular_values().0
    }

    /// Right singular vectors `(v_max, v_min)`: `v_max` attains the operator
    /// norm, `v_min` the smallest stretch. Both are unit vectors with a
    /// canonical phase (see [`canonical_phase`]).
    pub fn right_singular_vectors(&self) -> (Vec2C, Vec2C) {
        // Eigen-decomposition of the Hermitian matrix H = m* m.
        let h = self.adjoint().matmul(self);
        let p = h.a.re;
        let r = h.d.re;
        let q = h.b;
        let half = (p - r) / 2.0;
        let root = (half * half + q.norm_sqr()).sqrt();
        let top = (p + r) / 2.0 + root;
        // Two candidate eigenvectors for the top eigenvalue; keep the better
        // conditioned one.
        let v1 = [q, Complex64::new(top - p, 0.0)];
        let v2 = [Complex64::new(top - r, 0.0), q.conj()];
        let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
        let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
        let vmax = if n1 == 0.0 && n2 == 0.0 {
            // H is a multiple of the identity.
            [ONE, ZERO]
        } else if n1 >= n2 {
            normalized(v1)
        } else {
            normalized(v2)
        };
        let vmin = [-vmax[1].conj(), vmax[0].conj()];
        (canonical_phase(vmax), canonical_phase(vmin))
    }

    /// `true` iff `‖m* J m − J‖ ≤ tol` and `|det m − 1| ≤ tol`.
    pub fn is_su11(&self, tol: f64) -> bool {
        self.is_u11(tol) && (self.det() - ONE).norm() <= tol
    }

    /// `true` iff `‖m* J m − J‖ ≤ tol` (the form-preservation half of the
    /// group condition, without the determinant constraint).
    pub fn is_u11(&self, tol: f64) -> bool {
        self.form_defect() <= tol
    }

    /// `‖m* J m − J‖` in operator norm.
    pub fn form_defect(&self) -> f64 {
        self.adjoint()
            .matmul(&Mat2C::J)
            .matmul(self)
            .sub(&Mat2C::J)
            .op_norm()
    }

    /// `(det m)^{-1/2} · m` on the principal square-root branch.
    pub fn normalize_det(&self) -> Result<Mat2C> {
        let det = self.det();
        let modulus = det.norm();
        if !((modulus - 1.0).abs() <= DET_TOL) {
            return Err(Error::NearSingular { modulus });
        }
        Ok(self.scale(det.sqrt().inv()))
    }

    /// `U⁻¹ m U`; real up to roundoff whenever `m ∈ SU(1,1)`.
    pub fn conjugate_to_sl2r(&self) -> Result<Mat2C> {
        if !self.is_su11(GROUP_TOL) {
            return Err(Error::NotInGroup { tol: GROUP_TOL });
        }
        let u = Mat2C::cayley();
        Ok(u.adjoint().matmul(self).matmul(&u))
    }
}

impl Mul for Mat2C {
    type Output = Mat2C;

    fn mul(self, rhs: Mat2C) -> Mat2C {
        Mat2C::matmul(&self, &rhs)
    }
}

impl Mul<&Mat2C> for &Mat2C {
    type Output = Mat2C;

    fn mul(self, rhs: &Mat2C) -> Mat2C {
        Mat2C::matmul(self, rhs)
    }
}

impl Default for Mat2C {
    fn default() -> Self {
        Mat2C::IDENTITY
    }
}

pub fn vec_norm(v: &Vec2C) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

fn normalized(v: Vec2C) -> Vec2C {
    let n = vec_norm(&v);
    [v[0] / n, v[1] / n]
}

/// Rotate a vector by a unit scalar so that its first nonzero component is
/// real and positive. Projectively equal vectors map to the same output.
pub fn canonical_phase(v: Vec2C) -> Vec2C {
    let pivot = if v[0].norm() > 1e-300 { v[0] } else { v[1] };
    if pivot.norm() == 0.0 {
        return v;
    }
    let phase = pivot.conj() / pivot.norm();
    [v[0] * phase, v[1] * phase]
}

/// Sine of the projective angle between two nonzero vectors in ℂ².
pub fn projective_distance(u: &Vec2C, v: &Vec2C) -> f64 {
    let nu = vec_norm(u);
    let nv = vec_norm(v);
    let inner = u[0].conj() * v[0] + u[1].conj() * v[1];
    let cos = (inner.norm() / (nu * nv)).min(1.0);
    (1.0 - cos * cos).max(0.0).sqrt()
}

/// A matrix product held as `exp(log_scale) · mat` with `‖mat‖ = 1` after
/// every [`absorb`](LogScaledProduct::absorb).
///
/// `log_det` accumulates `ln |det|` of every absorbed factor so that the
/// smaller singular value of the represented product can be recovered
/// without forming `det(mat)`, which cancels catastrophically once the
/// product is numerically rank one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScaledProduct {
    pub mat: Mat2C,
    pub log_scale: f64,
    pub log_det: f64,
}

impl Default for LogScaledProduct {
    fn default() -> Self {
        LogScaledProduct::identity()
    }
}

impl LogScaledProduct {
    pub fn identity() -> Self {
        LogScaledProduct {
            mat: Mat2C::IDENTITY,
            log_scale: 0.0,
            log_det: 0.0,
        }
    }

    /// Replace the represented product `P` by `m · P`.
    pub fn absorb(&mut self, m: &Mat2C) {
        self.log_det += m.det().norm().ln();
        self.absorb_unimodular(m);
    }

    /// Like [`absorb`](Self::absorb) for a factor known to satisfy
    /// `|det m| = 1`; skips the determinant bookkeeping.
    #[inline]
    pub fn absorb_unimodular(&mut self, m: &Mat2C) {
        let next = m.matmul(&self.mat);
        let norm = next.op_norm();
        self.mat = next.scale(Complex64::new(norm.recip(), 0.0));
        self.log_scale += norm.ln();
    }

    /// Consuming form of [`absorb`](Self::absorb).
    pub fn absorbed(mut self, m: &Mat2C) -> Self {
        self.absorb(m);
        self
    }

    /// `ln ‖P‖` of the represented product.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.mat.op_norm().ln()
    }

    /// `(ln σ_max, ln σ_min)` of the represented product.
    pub fn log_singular_values(&self) -> (f64, f64) {
        let top = self.log_norm();
        (top, self.log_det - top)
    }

    /// The represented product as a plain matrix. Overflows for long
    /// hyperbolic products; meant for short products and tests.
    pub fn to_matrix(&self) -> Mat2C {
        self.mat.scale(Complex64::new(self.log_scale.exp(), 0.0))
    }
}
