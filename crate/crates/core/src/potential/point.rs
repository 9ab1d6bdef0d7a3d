use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A point of the order-parameter plane, identified with `z = u1 + i u2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanePoint {
    pub u1: f64,
    pub u2: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { u1: 0.0, u2: 0.0 };
    /// The right well `a+ = (1, 0)`.
    pub const A_PLUS: PlanePoint = PlanePoint { u1: 1.0, u2: 0.0 };
    /// The left well `a- = (-1, 0)`.
    pub const A_MINUS: PlanePoint = PlanePoint { u1: -1.0, u2: 0.0 };

    pub const fn new(u1: f64, u2: f64) -> Self {
        Self { u1, u2 }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn norm(self) -> f64 {
        self.u1.hypot(self.u2)
    }

    pub fn norm_sq(self) -> f64 {
        self.u1 * self.u1 + self.u2 * self.u2
    }

    pub fn dot(self, other: Self) -> f64 {
        self.u1 * other.u1 + self.u2 * other.u2
    }

    /// z-component of the planar cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.u1 * other.u2 - self.u2 * other.u1
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.u1, self.u2)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self::new(z.re, z.im)
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        self + (other - self) * t
    }
}

impl Add for PlanePoint {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.u1 + rhs.u1, self.u2 + rhs.u2)
    }
}

impl AddAssign for PlanePoint {
    fn add_assign(&mut self, rhs: Self) {
        self.u1 += rhs.u1;
        self.u2 += rhs.u2;
    }
}

impl Sub for PlanePoint {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.u1 - rhs.u1, self.u2 - rhs.u2)
    }
}

impl SubAssign for PlanePoint {
    fn sub_assign(&mut self, rhs: Self) {
        self.u1 -= rhs.u1;
        self.u2 -= rhs.u2;
    }
}

impl Mul<f64> for PlanePoint {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.u1 * rhs, self.u2 * rhs)
    }
}

impl Neg for PlanePoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.u1, -self.u2)
    }
}

/// Elements of the four-element dihedral group generated by the two axis
/// reflections. The same matrices act on the domain `x` and the target `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DihedralElement {
    Identity,
    /// `u1 -> -u1`
    T1,
    /// `u2 -> -u2`
    T2,
    /// `T2 T1`, the point reflection.
    S,
}

impl DihedralElement {
    pub const ALL: [DihedralElement; 4] = [
        DihedralElement::Identity,
        DihedralElement::T1,
        DihedralElement::T2,
        DihedralElement::S,
    ];

    pub fn matrix(self) -> [[f64; 2]; 2] {
        match self {
            DihedralElement::Identity => [[1.0, 0.0], [0.0, 1.0]],
            DihedralElement::T1 => [[-1.0, 0.0], [0.0, 1.0]],
            DihedralElement::T2 => [[1.0, 0.0], [0.0, -1.0]],
            DihedralElement::S => [[-1.0, 0.0], [0.0, -1.0]],
        }
    }

    pub fn apply(self, p: PlanePoint) -> PlanePoint {
        match self {
            DihedralElement::Identity => p,
            DihedralElement::T1 => PlanePoint::new(-p.u1, p.u2),
            DihedralElement::T2 => PlanePoint::new(p.u1, -p.u2),
            DihedralElement::S => PlanePoint::new(-p.u1, -p.u2),
        }
    }

    /// Every element is an involution.
    pub fn inverse(self) -> Self {
        self
    }

    /// `self ∘ other`
    pub fn compose(self, other: Self) -> Self {
        use DihedralElement::*;
        match (self, other) {
            (Identity, g) | (g, Identity) => g,
            (T1, T1) | (T2, T2) | (S, S) => Identity,
            (T1, T2) | (T2, T1) => S,
            (T1, S) | (S, T1) => T2,
            (T2, S) | (S, T2) => T1,
        }
    }

    /// The group element whose image of the closed first quadrant contains
    /// `p`. Ties on the axes resolve toward the identity.
    pub fn sector_of(p: PlanePoint) -> Self {
        match (p.u1 >= 0.0, p.u2 >= 0.0) {
            (true, true) => DihedralElement::Identity,
            (false, true) => DihedralElement::T1,
            (true, false) => DihedralElement::T2,
            (false, false) => DihedralElement::S,
        }
    }
}

/// Folding map onto the closed first quadrant; 1-Lipschitz.
pub fn fold_into_quadrant(p: PlanePoint) -> PlanePoint {
    DihedralElement::sector_of(p).inverse().apply(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_table_closes() {
        for a in DihedralElement::ALL {
            assert_eq!(a.compose(a), DihedralElement::Identity);
            for b in DihedralElement::ALL {
                let ab = a.compose(b);
                assert!(DihedralElement::ALL.contains(&ab));
                assert_eq!(ab, b.compose(a));
                let p = PlanePoint::new(0.3, -1.7);
                assert_eq!(ab.apply(p), a.apply(b.apply(p)));
            }
        }
        assert_eq!(
            DihedralElement::T1.compose(DihedralElement::T2),
            DihedralElement::S
        );
    }

    #[test]
    fn matrices_match_action() {
        let p = PlanePoint::new(0.25, 0.75);
        for g in DihedralElement::ALL {
            let m = g.matrix();
            let q = PlanePoint::new(
                m[0][0] * p.u1 + m[0][1] * p.u2,
                m[1][0] * p.u1 + m[1][1] * p.u2,
            );
            assert_eq!(q, g.apply(p));
        }
    }

    #[test]
    fn fold_examples() {
        assert_eq!(
            fold_into_quadrant(PlanePoint::new(-0.3, 0.5)),
            PlanePoint::new(0.3, 0.5)
        );
        assert_eq!(
            fold_into_quadrant(PlanePoint::new(-0.3, -0.5)),
            PlanePoint::new(0.3, 0.5)
        );
        let inside = PlanePoint::new(0.0, 0.4);
        assert_eq!(fold_into_quadrant(inside), inside);
    }
}
