//! Unit 3-vectors: apparatus orientations and hidden spin directions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A unit vector in three dimensions.
///
/// Invariant: `x² + y² + z²` equals one within [`Real::exact_tol`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[T; 3]", try_from = "[T; 3]")]
#[serde(bound = "T: Real")]
pub struct Direction<T> {
    x: T,
    y: T,
    z: T,
}

impl<T: Real> Direction<T> {
    /// Validates an already-normalised triple.
    pub fn new(x: T, y: T, z: T) -> Result<Self> {
        let norm_sq = x * x + y * y + z * z;
        if !norm_sq.is_finite() || (norm_sq - T::one()).abs() > T::exact_tol() {
            return Err(Error::NotUnit {
                x: x.to_f64_lossy(),
                y: y.to_f64_lossy(),
                z: z.to_f64_lossy(),
                norm_sq: norm_sq.to_f64_lossy(),
            });
        }
        Ok(Self { x, y, z })
    }

    /// Scales an arbitrary nonzero triple to unit length.
    pub fn normalized(x: T, y: T, z: T) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm <= T::epsilon() {
            return Err(Error::InvalidParameter(format!(
                "cannot normalise ({x}, {y}, {z})"
            )));
        }
        Ok(Self { x: x / norm, y: y / norm, z: z / norm })
    }

    /// Direction at polar angle `theta` from +z and azimuth `phi` from +x.
    pub fn from_spherical(theta: T, phi: T) -> Self {
        let s = theta.sin();
        Self { x: s * phi.cos(), y: s * phi.sin(), z: theta.cos() }
    }

    /// Direction in the x–z measurement plane at `angle` radians from +z
    /// towards +x.
    pub fn in_plane(angle: T) -> Self {
        Self { x: angle.sin(), y: T::zero(), z: angle.cos() }
    }

    /// Same as [`Direction::in_plane`] with the angle given in degrees.
    pub fn in_plane_degrees(degrees: T) -> Self {
        Self::in_plane(degrees.to_radians())
    }

    pub fn x(&self) -> T {
        self.x
    }

    pub fn y(&self) -> T {
        self.y
    }

    pub fn z(&self) -> T {
        self.z
    }

    pub fn components(&self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Dot product clamped to `[-1, 1]`; safe to feed into `acos` or a
    /// probability formula.
    pub fn cos_between(&self, other: &Self) -> T {
        self.dot(other).max(-T::one()).min(T::one())
    }

    pub fn neg(&self) -> Self {
        Self { x: -self.x, y: -self.y, z: -self.z }
    }

    /// Component-wise closeness, used when looking settings up in a finite list.
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        (self.x - other.x).abs() <= tol
            && (self.y - other.y).abs() <= tol
            && (self.z - other.z).abs() <= tol
    }

    /// Applies a rotation matrix given row-major.
    pub fn rotated(&self, m: &[[T; 3]; 3]) -> Self {
        let v = self.components();
        let row = |r: &[T; 3]| r[0] * v[0] + r[1] * v[1] + r[2] * v[2];
        Self { x: row(&m[0]), y: row(&m[1]), z: row(&m[2]) }
    }
}

/// Angle between two directions, in `[0, π]`.
pub fn angle_between<T: Real>(d1: &Direction<T>, d2: &Direction<T>) -> T {
    d1.cos_between(d2).acos()
}

impl<T: Real> From<Direction<T>> for [T; 3] {
    fn from(d: Direction<T>) -> Self {
        d.components()
    }
}

impl<T: Real> TryFrom<[T; 3]> for Direction<T> {
    type Error = Error;

    fn try_from(v: [T; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn rejects_non_unit() {
        assert!(Direction::new(1.0, 1.0, 0.0).is_err());
        assert!(Direction::new(0.0, 0.0, 1.0 + 1e-9).is_err());
        assert!(Direction::new(0.0, 0.0, 1.0).is_ok());
        assert!(Direction::<f64>::normalized(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn angles() {
        let z = Direction::new(0.0, 0.0, 1.0).unwrap();
        let x = Direction::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(angle_between(&z, &z), 0.0);
        assert_eq!(angle_between(&z, &z.neg()), PI);
        assert_eq!(angle_between(&z, &x), FRAC_PI_2);
    }

    #[test]
    fn in_plane_is_unit_and_coplanar() {
        for k in 0..16 {
            let d = Direction::in_plane(k as f64 * PI / 8.0);
            assert!(Direction::new(d.x(), d.y(), d.z()).is_ok());
            assert_eq!(d.y(), 0.0);
        }
        let d = Direction::<f64>::in_plane_degrees(90.0);
        assert!((d.x() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let a = Direction::<f32>::in_plane(0.3);
        let b = Direction::<f32>::in_plane(0.3 + std::f32::consts::FRAC_PI_2);
        assert!((angle_between(&a, &b) - std::f32::consts::FRAC_PI_2).abs() < 1e-5);
    }
}
