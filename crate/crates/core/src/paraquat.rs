//! Split-quaternion (paraquaternion) arithmetic.
//!
//! An element is written `p = t + r3·x + r1·y + r2·z` with
//! `r1² = r2² = 1`, `r3² = −1` and `r1·r2 = −r2·r1 = r3`. The quadratic form
//! `‖p‖² = t² + x² − y² − z²` is multiplicative but indefinite, so the algebra
//! has zero divisors (for example `1 + r1`).

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ParaquatError {
    /// The element has (numerically) zero norm and is a zero divisor.
    #[error("paraquaternion has zero norm (norm2 = {norm2:e}, threshold {threshold:e})")]
    ZeroNorm { norm2: f64, threshold: f64 },
}

/// Element of the split-quaternion algebra.
///
/// Coefficients are bound to the basis `(1, r3, r1, r2)` in that order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParaQuaternion {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ParaQuaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const R1: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const R2: Self = Self::new(0.0, 0.0, 0.0, 1.0);
    pub const R3: Self = Self::new(0.0, 1.0, 0.0, 0.0);

    /// The basis `(1, r3, r1, r2)` in coefficient order.
    pub const BASIS: [Self; 4] = [Self::ONE, Self::R3, Self::R1, Self::R2];

    pub const fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    pub const fn real(t: f64) -> Self {
        Self::new(t, 0.0, 0.0, 0.0)
    }

    /// Imaginary unit `r_s` for `s ∈ {1, 2, 3}`.
    pub fn unit(s: usize) -> Self {
        match s {
            1 => Self::R1,
            2 => Self::R2,
            3 => Self::R3,
            _ => panic!("imaginary unit index must be 1, 2 or 3, got {s}"),
        }
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.t, self.x, self.y, self.z]
    }

    pub fn conj(self) -> Self {
        Self::new(self.t, -self.x, -self.y, -self.z)
    }

    /// `t² + x² − y² − z²`; may be negative or zero.
    pub fn norm2(self) -> f64 {
        self.t * self.t + self.x * self.x - self.y * self.y - self.z * self.z
    }

    pub fn re(self) -> f64 {
        self.t
    }

    pub fn im(self) -> Self {
        Self::new(0.0, self.x, self.y, self.z)
    }

    /// Coefficient along `r_s`.
    pub fn im_component(self, s: usize) -> f64 {
        match s {
            1 => self.y,
            2 => self.z,
            3 => self.x,
            _ => panic!("imaginary unit index must be 1, 2 or 3, got {s}"),
        }
    }

    /// Largest absolute coefficient.
    pub fn max_abs(self) -> f64 {
        self.t.abs().max(self.x.abs()).max(self.y.abs()).max(self.z.abs())
    }

    /// Scale-aware zero-norm threshold `1e−12·(1 + |p|∞)`.
    pub fn zero_threshold(self) -> f64 {
        1e-12 * (1.0 + self.max_abs())
    }

    /// Multiplicative inverse `conj(p)/norm2(p)`.
    pub fn inv(self) -> Result<Self, ParaquatError> {
        self.inv_with_threshold(self.zero_threshold())
    }

    pub fn inv_with_threshold(self, threshold: f64) -> Result<Self, ParaquatError> {
        let n = self.norm2();
        if n.abs() <= threshold {
            return Err(ParaquatError::ZeroNorm {
                norm2: n,
                threshold,
            });
        }
        Ok(self.conj() * (1.0 / n))
    }

    /// Real inner product `Re(conj(p)·q)` of the neutral form.
    pub fn inner(self, other: Self) -> f64 {
        self.t * other.t + self.x * other.x - self.y * other.y - self.z * other.z
    }
}

impl Add for ParaQuaternion {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.t + o.t, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for ParaQuaternion {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for ParaQuaternion {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.t - o.t, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for ParaQuaternion {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl Neg for ParaQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.t, -self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for ParaQuaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.t * s, self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<ParaQuaternion> for f64 {
    type Output = ParaQuaternion;
    fn mul(self, p: ParaQuaternion) -> ParaQuaternion {
        p * self
    }
}

impl Mul for ParaQuaternion {
    type Output = Self;

    // r3·r3 = −1, r1·r1 = r2·r2 = 1,
    // r1·r2 = r3, r3·r2 = r1, r1·r3 = r2 and the reversed products negate.
    fn mul(self, o: Self) -> Self {
        let (t1, x1, y1, z1) = (self.t, self.x, self.y, self.z);
        let (t2, x2, y2, z2) = (o.t, o.x, o.y, o.z);
        Self::new(
            t1 * t2 - x1 * x2 + y1 * y2 + z1 * z2,
            t1 * x2 + x1 * t2 + y1 * z2 - z1 * y2,
            t1 * y2 + y1 * t2 + x1 * z2 - z1 * x2,
            t1 * z2 + z1 * t2 + y1 * x2 - x1 * y2,
        )
    }
}

impl fmt::Display for ParaQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:+}·r3 {:+}·r1 {:+}·r2",
            self.t, self.x, self.y, self.z
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type P = ParaQuaternion;

    fn close(a: P, b: P, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn unit_products() {
        assert_eq!(P::R1 * P::R2, P::R3);
        assert_eq!(P::R2 * P::R1, -P::R3);
        assert_eq!(P::R1 * P::R1, P::ONE);
        assert_eq!(P::R2 * P::R2, P::ONE);
        assert_eq!(P::R3 * P::R3, -P::ONE);
        // cyclic consequences of r1 r2 = r3
        assert_eq!(P::R1 * P::R3, P::R2);
        assert_eq!(P::R3 * P::R1, -P::R2);
        assert_eq!(P::R3 * P::R2, P::R1);
        assert_eq!(P::R2 * P::R3, -P::R1);
    }

    #[test]
    fn worked_products() {
        let p = P::new(-0.5, 2.0, 3.0, -1.25);
        assert_eq!(P::ONE * p, p);
        assert_eq!(p * P::ONE, p);
        let a = P::new(2.0, 1.0, 0.0, 0.0);
        let b = P::new(2.0, -1.0, 0.0, 0.0);
        assert_eq!(a * b, P::real(5.0));
    }

    #[test]
    fn norm_and_parts() {
        assert_eq!((P::ONE + P::R1).norm2(), 0.0);
        assert_eq!(P::R3.im(), P::R3);
        let p = P::new(1.5, -2.0, 0.25, 4.0);
        assert_eq!(P::real(p.re()) + p.im(), p);
        assert_eq!(p.norm2(), (p.conj() * p).re());
        assert_eq!(p.conj().conj(), p);
    }

    #[test]
    fn inverse_cases() {
        assert_eq!(P::R3.inv().unwrap(), -P::R3);
        assert_eq!(P::real(2.0).inv().unwrap(), P::real(0.5));
        assert!(matches!(
            (P::ONE + P::R1).inv(),
            Err(ParaquatError::ZeroNorm { .. })
        ));
    }

    fn arb() -> impl Strategy<Value = P> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
            .prop_map(|(t, x, y, z)| P::new(t, x, y, z))
    }

    proptest! {
        #[test]
        fn norm_is_multiplicative(p in arb(), q in arb()) {
            let lhs = (p * q).norm2();
            let rhs = p.norm2() * q.norm2();
            let scale = 1.0 + (p.max_abs() * q.max_abs()).powi(2);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn associative(p in arb(), q in arb(), r in arb()) {
            prop_assert!(close((p * q) * r, p * (q * r), 1e-11));
        }

        #[test]
        fn conj_is_anti_automorphism(p in arb(), q in arb()) {
            prop_assert!(close((p * q).conj(), q.conj() * p.conj(), 1e-12));
        }

        #[test]
        fn inverse_roundtrip(p in arb()) {
            prop_assume!(p.norm2().abs() > 1e-3);
            let i = p.inv().unwrap();
            let tol = 1e-10 * (1.0 + p.max_abs() * i.max_abs());
            prop_assert!(close(i * p, P::ONE, tol));
            prop_assert!(close(p * i, P::ONE, tol));
        }
    }
}
