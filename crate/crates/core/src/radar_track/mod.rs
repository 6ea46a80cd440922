//! Constant-velocity Kalman tracking of cluster centroids with gated
//! global-nearest-neighbor assignment and a hit/miss track lifecycle.

mod kf;
mod tracker;

pub use kf::{
    associate_observations, kf_predict, kf_update, CvModel, KalmanState, ObservationAssignment,
};
pub use tracker::{manage_tracks, ClusterSnapshot, FrameUpdate, RadarTrack, TrackSample, Tracker};
