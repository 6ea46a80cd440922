//! Face tracking in the thermal image with an EKF whose height state is tied
//! to the subject distance through the hyperbola `g(d) = b0 / (d + b1) + b2`,
//! plus the offline fit of `g` and the per-frame temperature reading.

mod ekf;
mod fit;
mod model;

pub use ekf::{
    center_mahalanobis2, ekf_predict, ekf_update, observation_noise, read_temperature,
    DetectionFrame, FaceDetection, FaceSample, FaceTrack, FaceTracker, PixelPatch,
    TemperatureReading,
};
pub use fit::fit_g;
pub use model::{
    g_derivative, g_eval, g_inverse, FaceState, GModel, Matrix7, Matrix7x4, ProcessModel, Vector7,
};
