use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::scenario::ThermalNoise;
use super::trajectory::SubjectState;
use crate::config::{AlphaCoefficients, GCoefficients};
use crate::fusion::alpha_eval;
use crate::geometry::{project_to_image, CameraModel, RigidTransform};
use crate::thermal_track::{g_eval, FaceDetection};

/// Noise-free appearance of a face in the thermal image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceTruth {
    pub u: f64,
    pub v: f64,
    pub height: f64,
    /// Horizontal distance from the camera, meters.
    pub d: f64,
}

/// Head position in radar coordinates.
pub fn head_position(state: &SubjectState, head_height: f64, mount_height: f64) -> [f64; 3] {
    [state.x, state.y, head_height - mount_height]
}

/// Horizontal camera-frame distance of a radar-frame point.
pub fn camera_distance(point: [f64; 3], placement: &RigidTransform) -> f64 {
    let c = placement.apply(point);
    c[0].hypot(c[2])
}

/// Where the face would appear, if the head projects inside the image and is
/// within detection range.
pub fn face_truth(
    head: [f64; 3],
    placement: &RigidTransform,
    cam: &CameraModel,
    g: &GCoefficients,
    max_range: f64,
) -> Option<FaceTruth> {
    let c = placement.apply(head);
    let (u, v) = project_to_image(c, cam).ok()?;
    let d = c[0].hypot(c[2]);
    (cam.contains(u, v) && d <= max_range).then(|| FaceTruth {
        u,
        v,
        height: g_eval(g, d),
        d,
    })
}

/// Noisy detection of a visible face: center and height noise per the
/// configured variances, reading `T / alpha(d)` plus sensor noise. Returns
/// `None` when the detection is dropped or its height is not positive.
pub fn synthesize_detection<R: Rng>(
    truth: &FaceTruth,
    temperature: f64,
    alpha: &AlphaCoefficients,
    noise: &ThermalNoise,
    rng: &mut R,
) -> Option<FaceDetection> {
    let n = |var: f64| Normal::new(0.0, var.max(0.0).sqrt()).expect("finite variance");
    let dx = n(noise.center_var).sample(rng);
    let dy = n(noise.center_var).sample(rng);
    let dh = n(noise.height_var).sample(rng);
    let dt = n(noise.temperature_std * noise.temperature_std).sample(rng);
    let dropped = rng.random::<f64>() < noise.drop_probability;
    let height = truth.height + dh;
    (!dropped && height > 1.0).then(|| FaceDetection {
        center_x: truth.u + dx,
        center_y: truth.v + dy,
        height,
        temp_max: temperature / alpha_eval(alpha, truth.d) + dt,
    })
}
