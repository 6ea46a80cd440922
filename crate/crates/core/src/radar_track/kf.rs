use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::assignment::solve_assignment;
use crate::config::RadarTrackConfig;

/// Constant-velocity state `[x, y, vx, vy]` with its covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanState {
    pub x: Vector4<f64>,
    pub p: Matrix4<f64>,
}

impl KalmanState {
    pub fn position(&self) -> [f64; 2] {
        [self.x[0], self.x[1]]
    }

    pub fn position_cov(&self) -> Matrix2<f64> {
        self.p.fixed_view::<2, 2>(0, 0).into_owned()
    }
}

/// Transition, process noise and observation noise of the CV model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvModel {
    pub a: Matrix4<f64>,
    pub q: Matrix4<f64>,
    pub r: Matrix2<f64>,
}

const H: Matrix2x4<f64> = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);

impl CvModel {
    /// White-acceleration discretization for step `dt`.
    pub fn new(dt: f64, sigma_accel: f64, sigma_obs: f64) -> Self {
        let mut a = Matrix4::identity();
        a[(0, 2)] = dt;
        a[(1, 3)] = dt;
        let s2 = sigma_accel * sigma_accel;
        let (q11, q12, q22) = (dt.powi(4) / 4.0 * s2, dt.powi(3) / 2.0 * s2, dt * dt * s2);
        let mut q = Matrix4::zeros();
        for axis in 0..2 {
            q[(axis, axis)] = q11;
            q[(axis, axis + 2)] = q12;
            q[(axis + 2, axis)] = q12;
            q[(axis + 2, axis + 2)] = q22;
        }
        Self {
            a,
            q,
            r: Matrix2::identity() * sigma_obs * sigma_obs,
        }
    }

    pub fn from_config(dt: f64, cfg: &RadarTrackConfig) -> Self {
        Self::new(dt, cfg.sigma_accel, cfg.sigma_obs)
    }

    /// Innovation covariance `H P H' + R`.
    pub fn innovation_cov(&self, s: &KalmanState) -> Matrix2<f64> {
        H * s.p * H.transpose() + self.r
    }

    /// Squared Mahalanobis distance of `z` from the predicted observation.
    pub fn mahalanobis2(&self, s: &KalmanState, z: [f64; 2]) -> f64 {
        let nu = Vector2::new(z[0] - s.x[0], z[1] - s.x[1]);
        match self.innovation_cov(s).try_inverse() {
            Some(inv) => (nu.transpose() * inv * nu)[(0, 0)],
            None => f64::INFINITY,
        }
    }
}

pub fn kf_predict(s: &KalmanState, model: &CvModel) -> KalmanState {
    let p = model.a * s.p * model.a.transpose() + model.q;
    KalmanState {
        x: model.a * s.x,
        p: (p + p.transpose()) * 0.5,
    }
}

/// Kalman update with a centroid observation; Joseph form, then symmetrized.
pub fn kf_update(s: &KalmanState, z: [f64; 2], model: &CvModel) -> KalmanState {
    let s_cov = model.innovation_cov(s);
    let Some(s_inv) = s_cov.try_inverse() else {
        return *s;
    };
    let k: Matrix4x2<f64> = s.p * H.transpose() * s_inv;
    let nu = Vector2::new(z[0] - s.x[0], z[1] - s.x[1]);
    let ikh = Matrix4::identity() - k * H;
    let p = ikh * s.p * ikh.transpose() + k * model.r * k.transpose();
    KalmanState {
        x: s.x + k * nu,
        p: (p + p.transpose()) * 0.5,
    }
}

/// Result of matching predicted tracks to the centroids of one frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationAssignment {
    /// `(track index, centroid index)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub unassigned_tracks: Vec<usize>,
    pub unassigned_centroids: Vec<usize>,
}

/// Gated global-nearest-neighbor assignment on squared Mahalanobis distance.
pub fn associate_observations(
    predicted: &[KalmanState],
    centroids: &[[f64; 2]],
    model: &CvModel,
    gate: f64,
) -> ObservationAssignment {
    let mut pairs = Vec::new();
    if !predicted.is_empty() && !centroids.is_empty() {
        let cost: Vec<Vec<f64>> = predicted
            .iter()
            .map(|s| {
                centroids
                    .iter()
                    .map(|&z| model.mahalanobis2(s, z))
                    .collect()
            })
            .collect();
        let forbidden = 1e6 * gate.max(1.0);
        let capped: Vec<Vec<f64>> = cost
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&c| {
                        if c.is_finite() && c <= gate {
                            c
                        } else {
                            forbidden
                        }
                    })
                    .collect()
            })
            .collect();
        if let Ok(sol) = solve_assignment(&capped) {
            pairs = sol
                .pairs
                .into_iter()
                .filter(|&(t, c)| cost[t][c] <= gate)
                .collect();
        }
    }
    let unassigned_tracks = (0..predicted.len())
        .filter(|t| !pairs.iter().any(|p| p.0 == *t))
        .collect();
    let unassigned_centroids = (0..centroids.len())
        .filter(|c| !pairs.iter().any(|p| p.1 == *c))
        .collect();
    ObservationAssignment {
        pairs,
        unassigned_tracks,
        unassigned_centroids,
    }
}
