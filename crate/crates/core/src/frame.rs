//! Planar αβ-frame algebra.
//!
//! Complex phasors are carried as [`Vec2`] and complex scalars acting on them
//! as complex-form [`Mat2`] (`[[re, -im], [im, re]]`), following the vector
//! notation of the closed-loop model. `Vec2::cmul` and `Mat2::from_complex`
//! are the two sides of that correspondence.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real 2-vector (per-unit), e.g. `[i_α, i_β]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub a1: f64,
    pub a2: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { a1: 0.0, a2: 0.0 };

    pub const fn new(a1: f64, a2: f64) -> Self {
        Vec2 { a1, a2 }
    }

    pub fn from_polar(mag: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2::new(mag * c, mag * s)
    }

    pub fn norm(self) -> f64 {
        self.a1.hypot(self.a2)
    }

    pub fn norm_sq(self) -> f64 {
        self.a1 * self.a1 + self.a2 * self.a2
    }

    pub fn angle(self) -> f64 {
        self.a2.atan2(self.a1)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.a1 * o.a1 + self.a2 * o.a2
    }

    /// z-component of the planar cross product `self × o`.
    pub fn cross(self, o: Vec2) -> f64 {
        self.a1 * o.a2 - self.a2 * o.a1
    }

    /// Complex product, treating both vectors as `a1 + j a2`.
    pub fn cmul(self, o: Vec2) -> Vec2 {
        Vec2::new(self.a1 * o.a1 - self.a2 * o.a2, self.a1 * o.a2 + self.a2 * o.a1)
    }

    /// Complex conjugate.
    pub fn conj(self) -> Vec2 {
        Vec2::new(self.a1, -self.a2)
    }

    /// Multiplication by `J = [[0, -1], [1, 0]]`.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.a2, self.a1)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(k * self.a1, k * self.a2)
    }

    pub fn is_finite(self) -> bool {
        self.a1.is_finite() && self.a2.is_finite()
    }

    pub fn max_abs(self) -> f64 {
        self.a1.abs().max(self.a2.abs())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.a1 + o.a1, self.a2 + o.a2)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.a1 += o.a1;
        self.a2 += o.a2;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.a1 - o.a1, self.a2 - o.a2)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.a1, -self.a2)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v.scale(self)
    }
}

/// Planar rotation `e^{Jθ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rot2 {
    pub angle: f64,
}

impl Rot2 {
    pub const fn new(angle: f64) -> Self {
        Rot2 { angle }
    }

    pub fn matrix(self) -> Mat2 {
        let (s, c) = self.angle.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    /// The unit phasor `e^{jθ}` as a vector.
    pub fn phasor(self) -> Vec2 {
        Vec2::from_polar(1.0, self.angle)
    }
}

/// 2×2 real matrix in row-major order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    /// Matrix of multiplication by the complex number `c.a1 + j c.a2`.
    pub fn from_complex(c: Vec2) -> Self {
        Mat2::new(c.a1, -c.a2, c.a2, c.a1)
    }

    /// Inverse of [`Mat2::from_complex`]; `None` if not of complex form.
    pub fn to_complex(self) -> Option<Vec2> {
        let tol = 1e-12 * (1.0 + self.m11.abs().max(self.m21.abs()));
        if (self.m11 - self.m22).abs() <= tol && (self.m12 + self.m21).abs() <= tol {
            Some(Vec2::new(self.m11, self.m21))
        } else {
            None
        }
    }

    pub fn det(self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.m11 * v.a1 + self.m12 * v.a2, self.m21 * v.a1 + self.m22 * v.a2)
    }

    pub fn inverse(self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(self.m22 / d, -self.m12 / d, -self.m21 / d, self.m11 / d))
    }

    /// Solves `self · x = b` by Cramer's rule.
    pub fn solve(self, b: Vec2) -> Option<Vec2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Vec2::new((b.a1 * self.m22 - self.m12 * b.a2) / d, (self.m11 * b.a2 - b.a1 * self.m21) / d))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.m11 - o.m11, self.m12 - o.m12, self.m21 - o.m21, self.m22 - o.m22)
    }
}

/// Rotates `v` counterclockwise by `r.angle`.
pub fn rotate(r: Rot2, v: Vec2) -> Vec2 {
    r.matrix().apply(v)
}

/// `p + jq = (u_α + j u_β)(i_α − j i_β)`.
pub fn apparent_power(u: Vec2, i: Vec2) -> (f64, f64) {
    (u.a1 * i.a1 + u.a2 * i.a2, u.a2 * i.a1 - u.a1 * i.a2)
}

/// `p_φ + j q_φ = e^{j(π/2−φ)} (p + jq) / scale`.
pub fn rotated_power(p: f64, q: f64, phi: f64, scale: f64) -> Result<(f64, f64)> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateScale(scale));
    }
    let r = rotate(Rot2::new(std::f64::consts::FRAC_PI_2 - phi), Vec2::new(p, q));
    Ok((r.a1 / scale, r.a2 / scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn rotate_identity_and_quarter_turn() {
        assert_eq!(rotate(Rot2::new(0.0), Vec2::new(1.0, 0.0)), Vec2::new(1.0, 0.0));
        let q = rotate(Rot2::new(FRAC_PI_2), Vec2::new(1.0, 0.0));
        assert_abs_diff_eq!(q.a1, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.a2, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rotate_by_case2_impedance_angle() {
        let phig = 0.25f64.atan2(0.2);
        assert_abs_diff_eq!(phig, 0.8961, epsilon = 1e-4);
        let v = rotate(Rot2::new(phig), Vec2::new(1.0, 0.0));
        assert_abs_diff_eq!(v.a1, phig.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(v.a2, phig.sin(), epsilon = 1e-15);
    }

    #[test]
    fn rot2_matrix_is_orthonormal() {
        for k in 0..50 {
            let m = Rot2::new(-7.0 + 0.3 * k as f64).matrix();
            assert_abs_diff_eq!(m.det(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.m11 * m.m12 + m.m21 * m.m22, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.m11.hypot(m.m21), 1.0, epsilon = 1e-12);
            assert!(m.to_complex().is_some());
        }
    }

    #[test]
    fn apparent_power_examples() {
        assert_eq!(apparent_power(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0)), (1.0, 0.0));
        assert_eq!(apparent_power(Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)), (0.0, 1.0));
        let v = Vec2::new(1.1388, 0.3559);
        let (p, q) = apparent_power(v, v);
        assert_abs_diff_eq!(p, 1.423, epsilon = 1e-3);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn apparent_power_matches_complex_product() {
        let u = Vec2::new(0.3, -1.2);
        let i = Vec2::new(-0.7, 0.4);
        let s = u.cmul(i.conj());
        assert_eq!(apparent_power(u, i), (s.a1, s.a2));
    }

    #[test]
    fn rotated_power_examples() {
        let (p, q) = rotated_power(1.0, 0.0, FRAC_PI_2, 1.0).unwrap();
        assert_eq!((p, q), (1.0, 0.0));
        let (p, q) = rotated_power(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(p, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q, 0.0, epsilon = 1e-15);
        let (p, q) = rotated_power(1.0, 0.0, FRAC_PI_2, 4.0).unwrap();
        assert_eq!((p, q), (0.25, 0.0));
    }

    #[test]
    fn rotated_power_rejects_nonpositive_scale() {
        assert_eq!(rotated_power(1.0, 0.0, 0.0, 0.0), Err(Error::DegenerateScale(0.0)));
        assert!(rotated_power(1.0, 0.0, 0.0, -1.0).is_err());
        assert!(rotated_power(1.0, 0.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn complex_matrix_duality() {
        let c = Vec2::new(0.4, -1.3);
        let v = Vec2::new(2.0, 0.5);
        assert_eq!(Mat2::from_complex(c).apply(v), c.cmul(v));
        assert_eq!(Mat2::from_complex(c).to_complex(), Some(c));
        assert_eq!(Mat2::new(1.0, 2.0, 3.0, 4.0).to_complex(), None);
    }

    #[test]
    fn solve_and_inverse_agree() {
        let m = Mat2::new(-0.8, -0.25, 0.25, -0.8);
        let b = Vec2::new(1.0, 0.0);
        let x = m.solve(b).unwrap();
        let y = m.inverse().unwrap().apply(b);
        assert_abs_diff_eq!(x.a1, y.a1, epsilon = 1e-15);
        assert_abs_diff_eq!(x.a2, y.a2, epsilon = 1e-15);
        let r = m.apply(x) - b;
        assert!(r.norm() < 1e-15);
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).solve(b).is_none());
    }

    fn vec_in(r: f64) -> impl Strategy<Value = Vec2> {
        (-r..r, -r..r).prop_map(|(a, b)| Vec2::new(a, b))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn rotate_preserves_norm(t in -2.0 * PI..2.0 * PI, v in vec_in(7.0)) {
            prop_assume!(v.norm() <= 10.0);
            prop_assert!((rotate(Rot2::new(t), v).norm() - v.norm()).abs() <= 1e-12);
        }

        #[test]
        fn rotations_compose(a in -2.0 * PI..2.0 * PI, b in -2.0 * PI..2.0 * PI, v in vec_in(7.0)) {
            let lhs = rotate(Rot2::new(a), rotate(Rot2::new(b), v));
            let rhs = rotate(Rot2::new(a + b), v);
            prop_assert!((lhs - rhs).norm() <= 1e-12);
        }

        #[test]
        fn apparent_power_is_linear_in_current(u in vec_in(3.0), i in vec_in(3.0), k in 0.01..50.0f64) {
            let (p, q) = apparent_power(u, i);
            let (pk, qk) = apparent_power(u, i.scale(k));
            prop_assert!((pk - k * p).abs() <= 1e-12 * (1.0 + pk.abs()));
            prop_assert!((qk - k * q).abs() <= 1e-12 * (1.0 + qk.abs()));
        }

        // With φ = π/2 and no reference, q_φ equals u_q/i where u_q is the
        // voltage component in quadrature with the current.
        #[test]
        fn q_phi_is_quadrature_voltage_over_current(u in vec_in(2.0), i in vec_in(2.0)) {
            prop_assume!(i.norm() > 0.05);
            let (p, q) = apparent_power(u, i);
            let (_, q_phi) = rotated_power(p, q, FRAC_PI_2, i.norm_sq()).unwrap();
            let ih = i.scale(1.0 / i.norm());
            let u_q = ih.cross(u);
            prop_assert!((q_phi - u_q / i.norm()).abs() <= 1e-12 * (1.0 + q_phi.abs()));
        }
    }
}
