//! Frame-by-frame processing chain: clustering and radar tracking, face
//! tracking, association rounds, temperature correction and gait features.

mod io;
mod metrics;

use serde::{Deserialize, Serialize};

pub use io::{evaluate_dir, execute_run, read_jsonl, write_jsonl, RunDir};
pub use metrics::{
    evaluate_run, face_track_subjects, radar_track_subjects, MetricsReport, TemperatureError,
};

use crate::clustering::{dbscan, refine_clusters};
use crate::config::SystemConfig;
use crate::error::Result;
use crate::exec::Execution;
use crate::fusion::{
    associate_tracks, corrected_temperature, radar_distance, FusedIdentity, PairCost,
};
use crate::geometry::{CameraModel, PointCloudFrame, RigidTransform};
use crate::radar_track::{RadarTrack, TrackSample, Tracker};
use crate::reid::{extract_features, GaitFeature};
use crate::thermal_track::{
    DetectionFrame, FaceSample, FaceTrack, FaceTracker, TemperatureReading,
};

/// Serialized view of a radar track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarTrackReport {
    pub id: u64,
    pub history: Vec<TrackSample>,
}

/// Serialized view of a face track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceTrackReport {
    pub id: u64,
    pub history: Vec<FaceSample>,
    pub readings: Vec<TemperatureReading>,
}

/// Cluster label of every point of one frame, after refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLabels {
    pub frame: u64,
    pub labels: Vec<Option<usize>>,
}

/// One row of the per-frame table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    pub frame: u64,
    pub track_id: u64,
    pub x: f64,
    pub y: f64,
    pub d: f64,
    pub t_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunOutput {
    /// Confirmed radar tracks.
    pub radar_tracks: Vec<RadarTrackReport>,
    /// Confirmed face tracks.
    pub face_tracks: Vec<FaceTrackReport>,
    pub associations: Vec<PairCost>,
    /// One entry per confirmed face track, fused or thermal-only.
    pub identities: Vec<FusedIdentity>,
    pub labels: Vec<FrameLabels>,
    pub features: Vec<GaitFeature>,
}

impl RunOutput {
    /// Per-frame table of confirmed radar tracks with the temperature of the
    /// identity they were last fused into.
    pub fn frame_rows(&self, placement: &RigidTransform) -> Vec<FrameRow> {
        let mut rows = Vec::new();
        for t in &self.radar_tracks {
            let t_hat = self
                .identities
                .iter()
                .rev()
                .find(|f| f.radar_id == Some(t.id))
                .map(|f| f.t_hat);
            for s in &t.history {
                rows.push(FrameRow {
                    frame: s.frame,
                    track_id: t.id,
                    x: s.x,
                    y: s.y,
                    d: radar_distance(s, placement).0,
                    t_hat,
                });
            }
        }
        rows.sort_by_key(|r| (r.frame, r.track_id));
        rows
    }
}

/// Static inputs of a run.
#[derive(Debug, Clone)]
pub struct PipelineSetup<'a> {
    pub config: &'a SystemConfig,
    pub camera: &'a CameraModel,
    pub placement: &'a RigidTransform,
    pub exec: Execution,
    /// Extract gait features every `feature_stride` frames.
    pub collect_features: bool,
}

/// Runs the whole chain over synchronized radar and thermal streams.
pub fn run_pipeline(
    radar: &[PointCloudFrame],
    thermal: &[DetectionFrame],
    setup: &PipelineSetup<'_>,
) -> Result<RunOutput> {
    let cfg = setup.config;
    cfg.validate()?;
    let dt = cfg.frame_period;
    let mut tracker = Tracker::new(dt, cfg.radar.clone(), cfg.policy, cfg.reid.window_frames);
    let mut faces = FaceTracker::new(cfg);
    let mut out = RunOutput::default();

    let mut pending_faces: Vec<u64> = Vec::new();
    let mut thermal_iter = thermal.iter().peekable();
    for frame in radar {
        let k = frame.index;
        tracker.predict();
        let xy: Vec<[f64; 2]> = frame.points.iter().map(|p| p.xy()).collect();
        let mut labeling = dbscan(&xy, cfg.clustering.eps, cfg.clustering.min_pts);
        if cfg.clustering.refine {
            labeling = refine_clusters(&xy, &labeling, &tracker.priors(), &cfg.clustering);
        }
        tracker.update(k, &labeling.clusters, &frame.points);
        out.labels.push(FrameLabels {
            frame: k,
            labels: labeling.labels,
        });

        if setup.collect_features && (k + 1) % cfg.reid.feature_stride as u64 == 0 {
            for t in tracker.live().iter().filter(|t| t.confirmed) {
                if t.buffer.len() == cfg.reid.window_frames {
                    let window: Vec<_> = t.buffer.iter().cloned().collect();
                    if let Ok(f) = extract_features(&window, cfg.reid.window_frames, dt, t.id) {
                        out.features.push(f);
                    }
                }
            }
        }

        // Thermal frames are matched by index; missing ones count as empty.
        let mut detections = &[][..];
        while let Some(tf) = thermal_iter.peek() {
            if tf.frame < k {
                thermal_iter.next();
            } else {
                if tf.frame == k {
                    detections = &tf.detections[..];
                }
                break;
            }
        }
        let deleted = faces.step(k, detections);
        pending_faces.extend(
            deleted
                .into_iter()
                .filter(|id| faces.finished_track(*id).is_some()),
        );
        if !pending_faces.is_empty() {
            let batch: Vec<&FaceTrack> = pending_faces
                .iter()
                .filter_map(|id| faces.finished_track(*id))
                .collect();
            association_round(&tracker, &batch, setup, &mut out)?;
            pending_faces.clear();
        }
    }

    tracker.finish();
    faces.finish();
    let done: Vec<u64> = out.identities.iter().map(|f| f.tc_id).collect();
    let remaining: Vec<&FaceTrack> = faces
        .confirmed_tracks()
        .into_iter()
        .filter(|t| !done.contains(&t.id))
        .collect();
    association_round(&tracker, &remaining, setup, &mut out)?;

    out.identities.sort_by_key(|f| f.tc_id);
    out.associations.sort_by_key(|a| (a.tc_id, a.radar_id));
    out.radar_tracks = tracker
        .confirmed_tracks()
        .into_iter()
        .map(|t| RadarTrackReport {
            id: t.id,
            history: t.history.clone(),
        })
        .collect();
    out.face_tracks = faces
        .confirmed_tracks()
        .into_iter()
        .map(|t| FaceTrackReport {
            id: t.id,
            history: t.history.clone(),
            readings: t.readings.clone(),
        })
        .collect();
    Ok(out)
}

/// Associates `batch` face tracks with every confirmed radar track and
/// records one identity per face track.
fn association_round(
    tracker: &Tracker,
    batch: &[&FaceTrack],
    setup: &PipelineSetup<'_>,
    out: &mut RunOutput,
) -> Result<()> {
    if batch.is_empty() {
        return Ok(());
    }
    let cfg = setup.config;
    let radar: Vec<&RadarTrack> = tracker.confirmed_tracks();
    let pairs = associate_tracks(
        &radar,
        batch,
        setup.camera,
        setup.placement,
        &cfg.fusion,
        cfg.frame_period,
        setup.exec,
    )?;
    for face in batch {
        let pair = pairs.iter().find(|p| p.tc_id == face.id);
        let radar_track = pair.and_then(|p| radar.iter().find(|r| r.id == p.radar_id));
        let radar_d = |frame: u64| {
            let track = radar_track?;
            let i = track
                .history
                .binary_search_by_key(&frame, |s| s.frame)
                .ok()?;
            Some(radar_distance(&track.history[i], setup.placement).0)
        };
        let est = corrected_temperature(&face.readings, radar_d, &cfg.alpha)?;
        out.identities.push(FusedIdentity {
            radar_id: pair.map(|p| p.radar_id),
            tc_id: face.id,
            cost: pair.map(|p| p.total),
            k: pair.map_or(0, |p| p.k),
            t_hat: est.t_hat,
            per_frame: est.per_frame,
        });
    }
    out.associations.extend(pairs);
    Ok(())
}
