//! Real quaternions `w0 + w1 e1 + w2 e2 + w3 e3` with the scalar/vector
//! split used throughout the operator code.
//!
//! Vectors of R^3 are identified with pure quaternions (`w0 = 0`). The
//! product of two pure quaternions is `-p.q + p x q`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Points and vectors of R^3.
pub type Vec3 = nalgebra::Vector3<f64>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const E1: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const E2: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const E3: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w0: f64, w1: f64, w2: f64, w3: f64) -> Self {
        Quaternion { w0, w1, w2, w3 }
    }

    pub const fn scalar(w0: f64) -> Self {
        Quaternion::new(w0, 0.0, 0.0, 0.0)
    }

    /// Pure quaternion with the given vector part.
    pub fn vector(v: Vec3) -> Self {
        Quaternion::new(0.0, v.x, v.y, v.z)
    }

    pub fn from_parts(w0: f64, v: Vec3) -> Self {
        Quaternion::new(w0, v.x, v.y, v.z)
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Quaternion::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w0, self.w1, self.w2, self.w3]
    }

    /// Component `k` (0 = scalar part).
    pub fn component(&self, k: usize) -> f64 {
        match k {
            0 => self.w0,
            1 => self.w1,
            2 => self.w2,
            3 => self.w3,
            _ => panic!("quaternion component index {k} out of range"),
        }
    }

    pub fn set_component(&mut self, k: usize, value: f64) {
        match k {
            0 => self.w0 = value,
            1 => self.w1 = value,
            2 => self.w2 = value,
            3 => self.w3 = value,
            _ => panic!("quaternion component index {k} out of range"),
        }
    }

    /// Scalar part `Sc q`.
    pub fn sc(&self) -> f64 {
        self.w0
    }

    /// Vector part `Vec q` as an element of R^3.
    pub fn vec(&self) -> Vec3 {
        Vec3::new(self.w1, self.w2, self.w3)
    }

    /// `Sc q` as a quaternion.
    pub fn sc_part(&self) -> Quaternion {
        Quaternion::scalar(self.w0)
    }

    /// `Vec q` as a pure quaternion.
    pub fn vec_part(&self) -> Quaternion {
        Quaternion::new(0.0, self.w1, self.w2, self.w3)
    }

    pub fn conj(&self) -> Quaternion {
        Quaternion::new(self.w0, -self.w1, -self.w2, -self.w3)
    }

    pub fn norm_squared(&self) -> f64 {
        self.w0 * self.w0 + self.w1 * self.w1 + self.w2 * self.w2 + self.w3 * self.w3
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Euclidean inner product of the component 4-vectors, equal to
    /// `Sc(conj(self) * other)`.
    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w0 * other.w0 + self.w1 * other.w1 + self.w2 * other.w2 + self.w3 * other.w3
    }

    pub fn is_pure(&self) -> bool {
        self.w0 == 0.0
    }

    pub fn is_real(&self) -> bool {
        self.w1 == 0.0 && self.w2 == 0.0 && self.w3 == 0.0
    }
}

/// Quaternion product of two vectors: `-p.q + p x q`.
pub fn vec_mul(p: &Vec3, q: &Vec3) -> Quaternion {
    Quaternion::from_parts(-p.dot(q), p.cross(q))
}

impl From<f64> for Quaternion {
    fn from(s: f64) -> Self {
        Quaternion::scalar(s)
    }
}

impl From<Vec3> for Quaternion {
    fn from(v: Vec3) -> Self {
        Quaternion::vector(v)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w0 + o.w0, self.w1 + o.w1, self.w2 + o.w2, self.w3 + o.w3)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w0 - o.w0, self.w1 - o.w1, self.w2 - o.w2, self.w3 - o.w3)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w0, -self.w1, -self.w2, -self.w3)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, o: Quaternion) {
        *self = *self - o;
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        let p = self;
        Quaternion::new(
            p.w0 * q.w0 - p.w1 * q.w1 - p.w2 * q.w2 - p.w3 * q.w3,
            p.w0 * q.w1 + p.w1 * q.w0 + p.w2 * q.w3 - p.w3 * q.w2,
            p.w0 * q.w2 - p.w1 * q.w3 + p.w2 * q.w0 + p.w3 * q.w1,
            p.w0 * q.w3 + p.w1 * q.w2 - p.w2 * q.w1 + p.w3 * q.w0,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        Quaternion::new(self.w0 * s, self.w1 * s, self.w2 * s, self.w3 * s)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        q * self
    }
}

impl MulAssign<f64> for Quaternion {
    fn mul_assign(&mut self, s: f64) {
        *self = *self * s;
    }
}

impl Sum for Quaternion {
    fn sum<I: Iterator<Item = Quaternion>>(iter: I) -> Quaternion {
        iter.fold(Quaternion::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}e1 + {}e2 + {}e3", self.w0, self.w1, self.w2, self.w3)
    }
}
