//! Primal vectors and dual covectors over ℝⁿ.
//!
//! Points and velocities live in the primal space, momenta and normals in the
//! dual space. Both are stored in standard coordinates and paired by the
//! standard bilinear form, so the two types differ only in what operations
//! make sense for them.

use std::fmt;
use std::ops::{Add, AddAssign, Deref, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

macro_rules! coordinate_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(coords: Vec<f64>) -> Self {
                Self(coords)
            }

            pub fn zeros(dim: usize) -> Self {
                Self(vec![0.0; dim])
            }

            /// The `i`-th standard basis element.
            pub fn basis(dim: usize, i: usize) -> Self {
                let mut v = vec![0.0; dim];
                v[i] = 1.0;
                Self(v)
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn coords(&self) -> &[f64] {
                &self.0
            }

            pub fn into_coords(self) -> Vec<f64> {
                self.0
            }

            /// Euclidean dot product of coordinates.
            pub fn dot(&self, other: &Self) -> f64 {
                debug_assert_eq!(self.dim(), other.dim());
                self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
            }

            /// Euclidean length of the coordinate tuple.
            pub fn norm(&self) -> f64 {
                self.dot(self).sqrt()
            }

            pub fn scale(&self, s: f64) -> Self {
                Self(self.0.iter().map(|a| a * s).collect())
            }

            /// Coordinates divided by their Euclidean length.
            pub fn normalized(&self) -> Self {
                self.scale(1.0 / self.norm())
            }

            /// `self + s * other`.
            pub fn axpy(&self, s: f64, other: &Self) -> Self {
                debug_assert_eq!(self.dim(), other.dim());
                Self(self.0.iter().zip(&other.0).map(|(a, b)| a + s * b).collect())
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|a| a.is_finite())
            }

            pub fn is_zero(&self) -> bool {
                self.0.iter().all(|&a| a == 0.0)
            }

            /// Largest coordinate-wise absolute difference.
            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                self.0
                    .iter()
                    .zip(&other.0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }

        impl<const N: usize> From<[f64; N]> for $name {
            fn from(v: [f64; N]) -> Self {
                Self(v.to_vec())
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{:?}", stringify!($name), self.0)
            }
        }

        impl Add for &$name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                self.axpy(1.0, rhs)
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                &self + &rhs
            }
        }

        impl AddAssign<&$name> for $name {
            fn add_assign(&mut self, rhs: &$name) {
                for (a, b) in self.0.iter_mut().zip(&rhs.0) {
                    *a += b;
                }
            }
        }

        impl Sub for &$name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                self.axpy(-1.0, rhs)
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                &self - &rhs
            }
        }

        impl Neg for &$name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(self.0.iter().map(|a| -a).collect())
            }
        }

        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                -&self
            }
        }

        impl Mul<f64> for &$name {
            type Output = $name;
            fn mul(self, s: f64) -> $name {
                self.scale(s)
            }
        }

        impl Mul<f64> for $name {
            type Output = $name;
            fn mul(self, s: f64) -> $name {
                self.scale(s)
            }
        }

        impl Mul<&$name> for f64 {
            type Output = $name;
            fn mul(self, v: &$name) -> $name {
                v.scale(self)
            }
        }
    };
}

coordinate_type!(
    /// A point or velocity in the primal space.
    Vector
);

coordinate_type!(
    /// A momentum or normal in the dual space.
    Covector
);

/// The natural pairing `p(x) = Σ pᵢxᵢ`.
pub fn pairing(p: &Covector, x: &Vector) -> f64 {
    debug_assert_eq!(p.dim(), x.dim());
    p.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
}

impl Vector {
    /// The covector with the same coordinates.
    pub fn flat(&self) -> Covector {
        Covector(self.0.clone())
    }
}

impl Covector {
    /// The vector with the same coordinates.
    pub fn sharp(&self) -> Vector {
        Vector(self.0.clone())
    }
}

/// Angle in radians between the rays spanned by `a` and `b`.
///
/// Uses `2·atan2(|â − b̂|, |â + b̂|)`, which stays accurate for nearly parallel
/// and nearly opposite rays.
pub fn ray_angle(a: &Vector, b: &Vector) -> f64 {
    let a = a.normalized();
    let b = b.normalized();
    2.0 * (&a - &b).norm().atan2((&a + &b).norm())
}

/// Euclidean distance from `point` to the ray `origin + s·dir`, `s ≥ 0`.
pub fn distance_to_ray(point: &Vector, origin: &Vector, dir: &Vector) -> f64 {
    let d = dir.normalized();
    let w = point - origin;
    let s = w.dot(&d).max(0.0);
    (&w - &(&d * s)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_is_coordinate_sum() {
        let p = Covector::from([1.0, -2.0, 0.5]);
        let x = Vector::from([3.0, 1.0, 4.0]);
        assert_eq!(pairing(&p, &x), 3.0);
    }

    #[test]
    fn arithmetic() {
        let a = Vector::from([1.0, 2.0]);
        let b = Vector::from([0.5, -1.0]);
        assert_eq!((&a + &b).coords(), &[1.5, 1.0]);
        assert_eq!((&a - &b).coords(), &[0.5, 3.0]);
        assert_eq!((&a * 2.0).coords(), &[2.0, 4.0]);
        assert_eq!((-&a).coords(), &[-1.0, -2.0]);
        assert_eq!(Vector::from([3.0, 4.0]).norm(), 5.0);
    }

    #[test]
    fn ray_angle_small_and_opposite() {
        let a = Vector::from([1.0, 0.0]);
        let b = Vector::from([1.0, 1e-12]);
        assert!((ray_angle(&a, &b) - 1e-12).abs() < 1e-20);
        let c = Vector::from([-2.0, 0.0]);
        assert!((ray_angle(&a, &c) - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(ray_angle(&a, &Vector::from([5.0, 0.0])), 0.0);
    }

    #[test]
    fn ray_distance() {
        let o = Vector::from([0.0, 0.0]);
        let d = Vector::from([2.0, 0.0]);
        assert_eq!(distance_to_ray(&Vector::from([3.0, 1.0]), &o, &d), 1.0);
        // behind the origin the distance is to the origin itself
        assert_eq!(distance_to_ray(&Vector::from([-3.0, 4.0]), &o, &d), 5.0);
    }
}
