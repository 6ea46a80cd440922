//! Radar/camera geometry: point types, the radar-to-camera rigid transform and
//! the pinhole camera with polynomial radial distortion.
//!
//! Frames used throughout the crate:
//! - radar: `x` to the right, `y` along boresight, `z` up, origin at the radar;
//! - camera: `x` to the right, `y` down, `z` along the optical axis.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Radial velocity, m/s. Negative when approaching the radar.
    pub v: f64,
    /// Received power, linear scale.
    pub p_rx: f64,
}

impl RadarPoint {
    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.z.is_finite()
            && self.v.is_finite()
            && self.p_rx.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloudFrame {
    pub index: u64,
    pub timestamp: f64,
    pub points: Vec<RadarPoint>,
}

impl PointCloudFrame {
    pub fn new(index: u64, frame_period: f64, points: Vec<RadarPoint>) -> Self {
        Self {
            index,
            timestamp: index as f64 * frame_period,
            points,
        }
    }
}

/// Rotation plus translation mapping radar coordinates into the camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    /// Row-major rotation matrix.
    pub rotation: [[f64; 3]; 3],
    /// Translation, meters.
    pub translation: [f64; 3],
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::colocated()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = rotation[(i, j)];
            }
        }
        Self {
            rotation: r,
            translation: [translation.x, translation.y, translation.z],
        }
    }

    /// Camera and radar share an origin; axes are permuted from the radar
    /// convention (z up, y forward) to the camera one (y down, z forward).
    pub fn colocated() -> Self {
        Self {
            rotation: [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]],
            translation: [0.0; 3],
        }
    }

    /// Camera with the co-located orientation placed at `camera_position`
    /// (radar coordinates, meters).
    pub fn mounted_at(camera_position: [f64; 3]) -> Self {
        let base = Self::colocated();
        let r = base.rotation_matrix();
        let t = -(r * Vector3::from(camera_position));
        Self::from_parts(r, t)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.rotation[i][j])
    }

    pub fn translation_vector(&self) -> Vector3<f64> {
        Vector3::from(self.translation)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.rotation_matrix();
        let off = (r * r.transpose() - Matrix3::identity()).abs().max();
        if !(off <= 1e-9) || (r.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(
                "rotation block must be orthonormal with det +1".into(),
            ));
        }
        if self.translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("translation must be finite".into()));
        }
        Ok(())
    }

    /// `rotation * point + translation`.
    pub fn apply(&self, point: [f64; 3]) -> [f64; 3] {
        let p = self.rotation_matrix() * Vector3::from(point) + self.translation_vector();
        [p.x, p.y, p.z]
    }
}

pub fn transform_to_camera(point: [f64; 3], t: &RigidTransform) -> [f64; 3] {
    t.apply(point)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Row-major intrinsic matrix.
    pub intrinsics: [[f64; 3]; 3],
    /// Radial coefficients `k1, k2, ...` of `1 + k1 r^2 + k2 r^4 + ...`, with
    /// `r` measured in normalized image coordinates.
    pub distortion: Vec<f64>,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraModel {
    /// 640x512 focal-plane array, roughly 68 degree horizontal field of view.
    fn default() -> Self {
        Self::pinhole(470.0, 470.0, 320.0, 256.0, 640, 512)
    }
}

impl CameraModel {
    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Self {
        Self {
            intrinsics: [[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]],
            distortion: vec![0.0, 0.0],
            width,
            height,
        }
    }

    pub fn with_distortion(mut self, coefficients: Vec<f64>) -> Self {
        self.distortion = coefficients;
        self
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (self.intrinsics[0][2], self.intrinsics[1][2])
    }

    pub fn validate(&self) -> Result<()> {
        let k = &self.intrinsics;
        if k[1][0] != 0.0 || k[2][0] != 0.0 || k[2][1] != 0.0 || k[2][2] != 1.0 {
            return Err(Error::InvalidConfig(
                "intrinsic matrix must be upper triangular with k33 = 1".into(),
            ));
        }
        if !(k[0][0] > 0.0 && k[1][1] > 0.0) {
            return Err(Error::InvalidConfig(
                "focal lengths must be positive".into(),
            ));
        }
        let (cx, cy) = self.principal_point();
        if !(cx >= 0.0 && cx <= self.width as f64 && cy >= 0.0 && cy <= self.height as f64) {
            return Err(Error::InvalidConfig(
                "principal point outside the image".into(),
            ));
        }
        if self.distortion.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig(
                "distortion coefficients must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && u < self.width as f64 && v >= 0.0 && v < self.height as f64
    }

    fn radial_factor(&self, r2: f64) -> f64 {
        let mut factor = 1.0;
        let mut power = r2;
        for k in &self.distortion {
            factor += k * power;
            power *= r2;
        }
        factor
    }
}

/// Perspective divide, intrinsics, then radial distortion about the principal
/// point. Returns pixel coordinates `(u, v)`.
pub fn project_to_image(point: [f64; 3], cam: &CameraModel) -> Result<(f64, f64)> {
    let [x, y, z] = point;
    if !(z > 0.0) {
        return Err(Error::PointBehindCamera { z });
    }
    let (xn, yn) = (x / z, y / z);
    let k = &cam.intrinsics;
    let u = k[0][0] * xn + k[0][1] * yn + k[0][2];
    let v = k[1][1] * yn + k[1][2];
    let (cx, cy) = cam.principal_point();
    let factor = cam.radial_factor(xn * xn + yn * yn);
    Ok((cx + (u - cx) * factor, cy + (v - cy) * factor))
}
