//! Seeded synthesis of walking subjects, radar point clouds and thermal face
//! detections, with the ground truth needed to score every stage.
//!
//! Each random stream (per-subject trajectory, radar, thermal) has its own
//! ChaCha stream under the scenario seed, so changing what one stream
//! consumes never perturbs the others.

mod presets;
mod radar;
mod scenario;
mod thermal;
mod trajectory;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use presets::{
    parallel_walk, reid_session, subject_roster, temperature_scene, three_subject_scene,
    RosterEntry,
};
pub use radar::{radar_visible, synthesize_point_cloud, BodyInput, SynthCloud};
pub use scenario::{
    GaitSignature, RadarNoise, Scenario, SubjectScript, ThermalNoise, Waypoint, SCHEMA_VERSION,
};
pub use thermal::{camera_distance, face_truth, head_position, synthesize_detection, FaceTruth};
pub use trajectory::{generate_trajectory, scripted_state, SubjectState};

use crate::error::Result;
use crate::geometry::PointCloudFrame;
use crate::thermal_track::DetectionFrame;

/// Ground truth of one present subject at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub frame: u64,
    pub subject: u64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// Horizontal distance of the head from the camera, meters.
    pub d: f64,
    /// Face appearance when the face is inside the thermal field of view.
    pub face: Option<FaceTruth>,
    pub temperature: f64,
}

/// Subject id of every point of a frame (`None` for clutter).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointLabels {
    pub frame: u64,
    pub owners: Vec<Option<u64>>,
    /// Subject id of every thermal detection of the frame.
    pub face_owners: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub radar: Vec<PointCloudFrame>,
    pub thermal: Vec<DetectionFrame>,
    pub labels: Vec<PointLabels>,
    pub ground_truth: Vec<GroundTruthRecord>,
}

impl SimOutput {
    /// Ground-truth records of one frame. Records are ordered by frame.
    pub fn truth_at(&self, frame: u64) -> &[GroundTruthRecord] {
        let lo = self.ground_truth.partition_point(|r| r.frame < frame);
        let hi = self.ground_truth.partition_point(|r| r.frame <= frame);
        &self.ground_truth[lo..hi]
    }
}

const RADAR_STREAM: u64 = 1 << 32;
const THERMAL_STREAM: u64 = 2 << 32;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Runs the full synthesis of a validated scenario.
pub fn run_scenario(s: &Scenario) -> Result<SimOutput> {
    s.validate()?;
    let dt = s.config.frame_period;
    let frames = s.frame_count();
    let mut trajectories = Vec::with_capacity(s.subjects.len());
    let mut phases = Vec::with_capacity(s.subjects.len());
    for (i, subject) in s.subjects.iter().enumerate() {
        let mut rng = stream(s.seed, i as u64);
        phases.push(rand::Rng::random::<f64>(&mut rng) * std::f64::consts::TAU);
        trajectories.push(generate_trajectory(
            subject, dt, frames, s.jitter, &mut rng,
        )?);
    }

    let mut radar_rng = stream(s.seed, RADAR_STREAM);
    let mut thermal_rng = stream(s.seed, THERMAL_STREAM);
    let mut out = SimOutput {
        radar: Vec::with_capacity(frames as usize),
        thermal: Vec::with_capacity(frames as usize),
        labels: Vec::with_capacity(frames as usize),
        ground_truth: Vec::new(),
    };
    for k in 0..frames {
        let t = k as f64 * dt;
        let present: Vec<usize> = (0..s.subjects.len())
            .filter(|&i| s.subjects[i].is_present(t))
            .collect();

        let bodies: Vec<BodyInput<'_>> = present
            .iter()
            .map(|&i| BodyInput {
                state: trajectories[i][k as usize],
                gait: &s.subjects[i].gait,
                phase: phases[i],
            })
            .collect();
        let cloud = synthesize_point_cloud(t, &bodies, &s.radar_noise, true, &mut radar_rng);
        let owners = cloud
            .owners
            .iter()
            .map(|o| o.map(|b| s.subjects[present[b]].id))
            .collect();

        let mut detections = Vec::new();
        let mut face_owners = Vec::new();
        for &i in &present {
            let subject = &s.subjects[i];
            let state = trajectories[i][k as usize];
            let head = head_position(&state, subject.head_height, s.radar_noise.mount_height);
            let face = face_truth(
                head,
                &s.placement,
                &s.camera,
                &s.config.g,
                s.thermal_noise.max_range,
            );
            if let Some(f) = &face {
                if let Some(det) = synthesize_detection(
                    f,
                    subject.temperature,
                    &s.config.alpha,
                    &s.thermal_noise,
                    &mut thermal_rng,
                ) {
                    detections.push(det);
                    face_owners.push(subject.id);
                }
            }
            out.ground_truth.push(GroundTruthRecord {
                frame: k,
                subject: subject.id,
                x: state.x,
                y: state.y,
                vx: state.vx,
                vy: state.vy,
                d: camera_distance(head, &s.placement),
                face,
                temperature: subject.temperature,
            });
        }
        out.radar.push(PointCloudFrame::new(k, dt, cloud.points));
        out.thermal.push(DetectionFrame {
            frame: k,
            detections,
        });
        out.labels.push(PointLabels {
            frame: k,
            owners,
            face_owners,
        });
    }
    Ok(out)
}
