//! Points, rotations and rigid transforms.

use std::ops::{Add, Mul, Sub};

use crate::error::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or an error for zero-length or
    /// non-finite input.
    pub fn normalized(&self) -> Result<Point3, GeometryError> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(GeometryError::ZeroLengthRay);
        }
        Ok(*self * (1.0 / n))
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// A proper rotation stored as a row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Rotation {
    const TOLERANCE: f64 = 1e-9;

    pub const fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Accepts a matrix only if it is orthonormal with determinant +1
    /// (both within 1e-9).
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self, GeometryError> {
        let r = Self { m };
        let rrt = r.compose(&r.transpose());
        for (i, row) in rrt.m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                if !((v - expected).abs() <= Self::TOLERANCE) {
                    return Err(GeometryError::NotARotation);
                }
            }
        }
        if !((r.determinant() - 1.0).abs() <= Self::TOLERANCE) {
            return Err(GeometryError::NotARotation);
        }
        Ok(r)
    }

    /// Rotation about the x axis by `angle` radians.
    pub fn about_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        }
    }

    /// Rotation about the z axis by `angle` radians.
    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Orientation of a virtual view relative to the omnidirectional camera:
    /// `R = R_z(azimuth) · R_x(elevation)`. Maps view-frame rays into the
    /// omnidirectional camera frame.
    pub fn from_azimuth_elevation(azimuth: f64, elevation: f64) -> Self {
        Self::about_z(azimuth).compose(&Self::about_x(elevation))
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    /// `self · other`
    pub fn compose(&self, other: &Rotation) -> Rotation {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Rotation { m }
    }

    pub fn transpose(&self) -> Rotation {
        let m = &self.m;
        Rotation {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    /// Inverse rotation (the transpose).
    pub fn inverse(&self) -> Rotation {
        self.transpose()
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, v: &Point3) -> Point3 {
        let m = &self.m;
        Point3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

/// World-to-camera transform `x_cam = R · X + t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Extrinsics {
    pub rotation: Rotation,
    pub translation: Point3,
}

impl Extrinsics {
    pub fn new(rotation: Rotation, translation: Point3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Pure rotation about the shared viewpoint (t = 0).
    pub fn from_rotation(rotation: Rotation) -> Self {
        Self::new(rotation, Point3::default())
    }

    /// Camera center `C = -R⁻¹ · t` in world coordinates.
    pub fn camera_center(&self) -> Point3 {
        self.rotation.inverse().apply(&self.translation) * -1.0
    }

    pub fn world_to_camera(&self, world: &Point3) -> Point3 {
        self.rotation.apply(world) + self.translation
    }
}
