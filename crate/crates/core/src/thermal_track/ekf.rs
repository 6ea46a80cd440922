use nalgebra::{Matrix2, Matrix3, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::model::{FaceState, Matrix7, ProcessModel, Vector7};
use crate::assignment::solve_assignment;
use crate::config::{SystemConfig, ThermalConfig, TrackPolicy};
use crate::error::{Error, Result};

/// One face detection: bounding-box center and height in pixels plus the
/// maximum temperature inside the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceDetection {
    pub center_x: f64,
    pub center_y: f64,
    pub height: f64,
    pub temp_max: f64,
}

/// All detections of one thermal frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFrame {
    pub frame: u64,
    pub detections: Vec<FaceDetection>,
}

/// Pixel contents of a bounding box, or the precomputed maximum.
#[derive(Debug, Clone, PartialEq)]
pub enum PixelPatch {
    Pixels(Vec<Vec<f64>>),
    Max(f64),
}

/// Maximum pixel value of the patch.
pub fn read_temperature(patch: &PixelPatch) -> Result<f64> {
    match patch {
        PixelPatch::Max(t) => Ok(*t),
        PixelPatch::Pixels(rows) => rows
            .iter()
            .flatten()
            .copied()
            .reduce(f64::max)
            .ok_or(Error::EmptyPatch),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceSample {
    pub frame: u64,
    pub xc: f64,
    pub yc: f64,
    pub h: f64,
    pub d: f64,
    /// Variance of `xc`, px^2.
    pub var_x: f64,
    /// Variance of `d`, m^2.
    pub var_d: f64,
    pub observed: bool,
}

/// Raw temperature reading with the distance estimated at the same frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureReading {
    pub frame: u64,
    pub raw: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceTrack {
    pub id: u64,
    pub x: Vector7,
    pub p: Matrix7,
    pub age: u32,
    pub hits: u32,
    pub misses: u32,
    pub confirmed: bool,
    pub history: Vec<FaceSample>,
    pub readings: Vec<TemperatureReading>,
}

impl FaceTrack {
    /// New track from a first detection: distance from inverting the height
    /// model, zero velocities, wide diagonal covariance.
    pub fn new(
        id: u64,
        frame: u64,
        det: &FaceDetection,
        model: &ProcessModel,
        cfg: &ThermalConfig,
    ) -> Self {
        let d0 =
            super::model::g_inverse(&model.g, det.height).clamp(cfg.min_distance, cfg.max_distance);
        let state = FaceState {
            xc: det.center_x,
            yc: det.center_y,
            vx: 0.0,
            vy: 0.0,
            h: det.height,
            d: d0,
            vd: 0.0,
        };
        let p = Matrix7::from_diagonal(&Vector7::from([
            cfg.init_position_var,
            cfg.init_position_var,
            cfg.init_velocity_var,
            cfg.init_velocity_var,
            cfg.r_height_var,
            cfg.init_distance_var,
            cfg.init_distance_rate_var,
        ]));
        let mut t = Self {
            id,
            x: state.to_vector(),
            p,
            age: 1,
            hits: 1,
            misses: 0,
            confirmed: false,
            history: Vec::new(),
            readings: Vec::new(),
        };
        t.record(frame, true);
        t.readings.push(TemperatureReading {
            frame,
            raw: det.temp_max,
            d: d0,
        });
        t
    }

    pub fn state(&self) -> FaceState {
        FaceState::from_vector(&self.x)
    }

    fn record(&mut self, frame: u64, observed: bool) {
        self.history.push(FaceSample {
            frame,
            xc: self.x[0],
            yc: self.x[1],
            h: self.x[4],
            d: self.x[5],
            var_x: self.p[(0, 0)],
            var_d: self.p[(5, 5)],
            observed,
        });
    }
}

/// Measurement matrix: the observation picks the face center and the height.
fn measurement_matrix() -> SMatrix<f64, 3, 7> {
    let mut h = SMatrix::<f64, 3, 7>::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    h[(2, 4)] = 1.0;
    h
}

pub fn observation_noise(cfg: &ThermalConfig) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(
        cfg.r_center_var,
        cfg.r_center_var,
        cfg.r_height_var,
    ))
}

/// Propagates the track through the nonlinear transition with
/// `P = F P F' + L Q L'`, both Jacobians taken at the current estimate.
pub fn ekf_predict(track: &mut FaceTrack, model: &ProcessModel) -> Result<()> {
    let x = track.state();
    let next = model.predict_mean(&x)?;
    let f = model.state_jacobian(&x);
    let p = f * track.p * f.transpose() + model.transformed_process_noise(&x);
    track.x = next.to_vector();
    track.p = (p + p.transpose()) * 0.5;
    Ok(())
}

/// Linear update with `z = [xc, yc, h]`. Returns `false` (and leaves the track
/// untouched) when the observation is unusable.
pub fn ekf_update(track: &mut FaceTrack, z: [f64; 3], r: &Matrix3<f64>) -> bool {
    if z.iter().any(|v| !v.is_finite()) || !(z[2] > 0.0) {
        return false;
    }
    let h = measurement_matrix();
    let s = h * track.p * h.transpose() + r;
    let Some(s_inv) = s.try_inverse() else {
        return false;
    };
    let k = track.p * h.transpose() * s_inv;
    let nu = Vector3::from(z) - h * track.x;
    let ikh = Matrix7::identity() - k * h;
    let p = ikh * track.p * ikh.transpose() + k * r * k.transpose();
    track.x += k * nu;
    track.p = (p + p.transpose()) * 0.5;
    true
}

/// Squared Mahalanobis distance of a detection center from the predicted face
/// center.
pub fn center_mahalanobis2(track: &FaceTrack, det: &FaceDetection, cfg: &ThermalConfig) -> f64 {
    let s = Matrix2::new(
        track.p[(0, 0)],
        track.p[(0, 1)],
        track.p[(1, 0)],
        track.p[(1, 1)],
    ) + Matrix2::identity() * cfg.r_center_var;
    let nu = nalgebra::Vector2::new(det.center_x - track.x[0], det.center_y - track.x[1]);
    s.try_inverse()
        .map_or(f64::INFINITY, |inv| (nu.transpose() * inv * nu)[(0, 0)])
}

/// Multi-face EKF tracker with image-plane gating and the shared lifecycle
/// policy.
#[derive(Debug, Clone)]
pub struct FaceTracker {
    model: ProcessModel,
    cfg: ThermalConfig,
    policy: TrackPolicy,
    r: Matrix3<f64>,
    next_id: u64,
    live: Vec<FaceTrack>,
    finished: Vec<FaceTrack>,
}

impl FaceTracker {
    pub fn new(cfg: &SystemConfig) -> Self {
        Self::with_model(ProcessModel::new(cfg), cfg.thermal.clone(), cfg.policy)
    }

    pub fn with_model(model: ProcessModel, cfg: ThermalConfig, policy: TrackPolicy) -> Self {
        let r = observation_noise(&cfg);
        Self {
            model,
            cfg,
            policy,
            r,
            next_id: 0,
            live: Vec::new(),
            finished: Vec::new(),
        }
    }

    pub fn live(&self) -> &[FaceTrack] {
        &self.live
    }

    pub fn finished(&self) -> &[FaceTrack] {
        &self.finished
    }

    /// Processes one frame of detections. Returns the ids of tracks deleted
    /// at this frame.
    pub fn step(&mut self, frame: u64, detections: &[FaceDetection]) -> Vec<u64> {
        let mut deleted = Vec::new();
        let live = std::mem::take(&mut self.live);
        for mut t in live {
            match ekf_predict(&mut t, &self.model) {
                Ok(()) => self.live.push(t),
                Err(_) => {
                    deleted.push(t.id);
                    self.finished.push(t);
                }
            }
        }

        let usable: Vec<usize> = (0..detections.len())
            .filter(|&i| detections[i].height > 0.0 && detections[i].center_x.is_finite())
            .collect();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        if !self.live.is_empty() && !usable.is_empty() {
            let gate = self.cfg.gate;
            let cost: Vec<Vec<f64>> = self
                .live
                .iter()
                .map(|t| {
                    usable
                        .iter()
                        .map(|&i| center_mahalanobis2(t, &detections[i], &self.cfg))
                        .collect()
                })
                .collect();
            let capped: Vec<Vec<f64>> = cost
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&c| if c <= gate { c } else { 1e6 * gate })
                        .collect()
                })
                .collect();
            if let Ok(sol) = solve_assignment(&capped) {
                pairs = sol
                    .pairs
                    .into_iter()
                    .filter(|&(t, c)| cost[t][c] <= gate)
                    .map(|(t, c)| (t, usable[c]))
                    .collect();
            }
        }

        let live = std::mem::take(&mut self.live);
        for (i, mut t) in live.into_iter().enumerate() {
            t.age += 1;
            let det = pairs.iter().find(|p| p.0 == i).map(|p| &detections[p.1]);
            let updated = det
                .is_some_and(|d| ekf_update(&mut t, [d.center_x, d.center_y, d.height], &self.r));
            if updated {
                let d = det.expect("updated implies a detection");
                t.hits += 1;
                t.misses = 0;
                if t.hits >= self.policy.confirm_hits {
                    t.confirmed = true;
                }
                t.record(frame, true);
                let raw = read_temperature(&PixelPatch::Max(d.temp_max)).expect("scalar patch");
                t.readings.push(TemperatureReading {
                    frame,
                    raw,
                    d: t.x[5],
                });
                self.live.push(t);
            } else {
                t.misses += 1;
                t.hits = 0;
                if !t.confirmed || t.misses >= self.policy.max_misses {
                    while t.history.last().is_some_and(|s| !s.observed) {
                        t.history.pop();
                    }
                    deleted.push(t.id);
                    self.finished.push(t);
                } else {
                    t.record(frame, false);
                    self.live.push(t);
                }
            }
        }

        for &i in &usable {
            if pairs.iter().any(|p| p.1 == i) {
                continue;
            }
            let t = FaceTrack::new(self.next_id, frame, &detections[i], &self.model, &self.cfg);
            self.next_id += 1;
            self.live.push(t);
        }
        deleted
    }

    pub fn finish(&mut self) {
        self.finished.append(&mut self.live);
        self.finished.sort_by_key(|t| t.id);
    }

    /// Every track that was ever confirmed, by id.
    pub fn confirmed_tracks(&self) -> Vec<&FaceTrack> {
        let mut v: Vec<&FaceTrack> = self
            .finished
            .iter()
            .chain(&self.live)
            .filter(|t| t.confirmed)
            .collect();
        v.sort_by_key(|t| t.id);
        v
    }

    /// Finished confirmed track with the given id.
    pub fn finished_track(&self, id: u64) -> Option<&FaceTrack> {
        self.finished.iter().find(|t| t.id == id && t.confirmed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GCoefficients;
    use crate::thermal_track::model::g_eval;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn det(x: f64, y: f64, h: f64) -> FaceDetection {
        FaceDetection {
            center_x: x,
            center_y: y,
            height: h,
            temp_max: 32.0,
        }
    }

    #[test]
    fn patch_maximum() {
        let p = PixelPatch::Pixels(vec![vec![30.0, 32.1], vec![31.5, 30.2]]);
        assert_eq!(read_temperature(&p).unwrap(), 32.1);
        assert_eq!(
            read_temperature(&PixelPatch::Pixels(vec![vec![31.0; 3]; 3])).unwrap(),
            31.0
        );
        assert!(matches!(
            read_temperature(&PixelPatch::Pixels(vec![])),
            Err(Error::EmptyPatch)
        ));
        assert!(matches!(
            read_temperature(&PixelPatch::Pixels(vec![vec![]])),
            Err(Error::EmptyPatch)
        ));
        assert_eq!(read_temperature(&PixelPatch::Max(33.3)).unwrap(), 33.3);
    }

    #[test]
    fn zero_innovation_update() {
        let cfg = SystemConfig::default();
        let model = ProcessModel::new(&cfg);
        let mut t = FaceTrack::new(0, 0, &det(320.0, 200.0, 60.0), &model, &cfg.thermal);
        ekf_predict(&mut t, &model).unwrap();
        let before = t.x;
        let z = [t.x[0], t.x[1], t.x[4]];
        assert!(ekf_update(&mut t, z, &observation_noise(&cfg.thermal)));
        assert!((t.x - before).norm() < 1e-12);
    }

    #[test]
    fn non_positive_height_is_rejected() {
        let cfg = SystemConfig::default();
        let model = ProcessModel::new(&cfg);
        let mut t = FaceTrack::new(0, 0, &det(320.0, 200.0, 60.0), &model, &cfg.thermal);
        let before = t.clone();
        assert!(!ekf_update(
            &mut t,
            [320.0, 200.0, 0.0],
            &observation_noise(&cfg.thermal)
        ));
        assert_eq!(t, before);
    }

    #[test]
    fn initial_distance_inverts_g() {
        let cfg = SystemConfig::default();
        let model = ProcessModel::new(&cfg);
        let t = FaceTrack::new(
            0,
            0,
            &det(320.0, 200.0, g_eval(&cfg.g, 2.5)),
            &model,
            &cfg.thermal,
        );
        assert!((t.x[5] - 2.5).abs() < 1e-9);
    }

    #[test]
    fn approaching_subject_distance_rmse() {
        // Walks from 3 m to 1 m in 4 s; noisy heights with variance 20.
        let cfg = SystemConfig::default();
        let g = GCoefficients::default();
        let mut tracker = FaceTracker::new(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let hn = Normal::new(0.0, 20f64.sqrt()).unwrap();
        let cn = Normal::new(0.0, 0.1).unwrap();
        let n = 60;
        let mut truth = Vec::new();
        for k in 0..n {
            let d = 3.0 - 2.0 * k as f64 / (n - 1) as f64;
            truth.push(d);
            let x = 320.0 + 470.0 * 0.2 / d;
            let y = 256.0 - 470.0 * 0.1 / d;
            let d_obs = det(
                x + cn.sample(&mut rng),
                y + cn.sample(&mut rng),
                g_eval(&g, d) + hn.sample(&mut rng),
            );
            tracker.step(k as u64, &[d_obs]);
        }
        tracker.finish();
        let tracks = tracker.confirmed_tracks();
        assert_eq!(tracks.len(), 1);
        let h = &tracks[0].history;
        assert_eq!(h.len(), n);
        let mse: f64 = h
            .iter()
            .map(|s| (s.d - truth[s.frame as usize]).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!(mse.sqrt() < 0.3, "rmse {}", mse.sqrt());
    }

    #[test]
    fn two_faces_two_tracks() {
        let cfg = SystemConfig::default();
        let mut tracker = FaceTracker::new(&cfg);
        for k in 0..20 {
            tracker.step(
                k,
                &[
                    det(100.0 + k as f64, 200.0, 60.0),
                    det(500.0 - k as f64, 210.0, 40.0),
                ],
            );
        }
        assert_eq!(tracker.live().len(), 2);
        assert!(tracker
            .live()
            .iter()
            .all(|t| t.confirmed && t.readings.len() == 20));
    }

    #[test]
    fn lost_face_is_deleted_after_misses() {
        let cfg = SystemConfig::default();
        let mut tracker = FaceTracker::new(&cfg);
        for k in 0..5 {
            tracker.step(k, &[det(300.0, 200.0, 60.0)]);
        }
        let mut deleted = Vec::new();
        for k in 5..20 {
            deleted.extend(tracker.step(k, &[]));
        }
        assert_eq!(deleted, vec![0]);
        assert!(tracker.finished_track(0).is_some());
        assert_eq!(tracker.finished_track(0).unwrap().history.len(), 5);
    }
}
