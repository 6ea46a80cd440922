use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FaceTrackReport, RadarTrackReport, RunOutput};
use crate::config::SystemConfig;
use crate::eval::{
    association_pr, association_pr_per_frame, clustering_ratio, majority_label, rmse_metrics,
    AssociationReport, ClusteringReport, EstimatedTrack, GtPairing, TrackingReport,
};
use crate::sim::{GroundTruthRecord, PointLabels};

/// A radar estimate farther than this from every subject is not attributed.
const RADAR_LABEL_RADIUS: f64 = 0.8;
/// Same for face estimates, in pixels.
const FACE_LABEL_RADIUS: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureError {
    pub tc_id: u64,
    pub radar_id: Option<u64>,
    pub subject: Option<u64>,
    pub t_hat: f64,
    pub t_true: Option<f64>,
    /// Standard deviation of the raw readings (any constant bias correction
    /// leaves it unchanged).
    pub raw_std: f64,
    pub corrected_std: f64,
}

impl TemperatureError {
    pub fn abs_error(&self) -> Option<f64> {
        self.t_true.map(|t| (self.t_hat - t).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub association: AssociationReport,
    pub association_per_frame: AssociationReport,
    /// `None` when no confirmed radar track overlaps the ground truth.
    pub tracking: Option<TrackingReport>,
    pub clustering: ClusteringReport,
    pub temperatures: Vec<TemperatureError>,
}

fn by_frame(gt: &[GroundTruthRecord]) -> BTreeMap<u64, Vec<&GroundTruthRecord>> {
    let mut m: BTreeMap<u64, Vec<&GroundTruthRecord>> = BTreeMap::new();
    for r in gt {
        m.entry(r.frame).or_default().push(r);
    }
    m
}

/// Subject each radar track mostly followed, from the nearest ground-truth
/// position at every observed frame.
pub fn radar_track_subjects(
    tracks: &[RadarTrackReport],
    gt: &[GroundTruthRecord],
) -> BTreeMap<u64, Option<u64>> {
    let frames = by_frame(gt);
    tracks
        .iter()
        .map(|t| {
            let votes = t.history.iter().filter(|s| s.observed).map(|s| {
                frames.get(&s.frame).and_then(|recs| {
                    recs.iter()
                        .map(|r| ((r.x - s.x).hypot(r.y - s.y), r.subject))
                        .filter(|(d, _)| *d < RADAR_LABEL_RADIUS)
                        .min_by(|a, b| a.0.total_cmp(&b.0))
                        .map(|(_, s)| s)
                })
            });
            (t.id, majority_label(votes))
        })
        .collect()
}

/// Subject each face track mostly followed, from the nearest ground-truth
/// face position at every observed frame.
pub fn face_track_subjects(
    tracks: &[FaceTrackReport],
    gt: &[GroundTruthRecord],
) -> BTreeMap<u64, Option<u64>> {
    let frames = by_frame(gt);
    tracks
        .iter()
        .map(|t| {
            let votes = t.history.iter().filter(|s| s.observed).map(|s| {
                frames.get(&s.frame).and_then(|recs| {
                    recs.iter()
                        .filter_map(|r| r.face.map(|f| ((f.u - s.xc).hypot(f.v - s.yc), r.subject)))
                        .filter(|(d, _)| *d < FACE_LABEL_RADIUS)
                        .min_by(|a, b| a.0.total_cmp(&b.0))
                        .map(|(_, s)| s)
                })
            });
            (t.id, majority_label(votes))
        })
        .collect()
}

fn overlap(a: &RadarTrackReport, b: &FaceTrackReport) -> usize {
    crate::fusion::common_frames(&a.history, &b.history).len()
}

fn std_dev(x: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = x.clone().count();
    if n == 0 {
        return 0.0;
    }
    let m = x.clone().sum::<f64>() / n as f64;
    (x.map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt()
}

/// Scores a run against the simulator ground truth.
pub fn evaluate_run(
    run: &RunOutput,
    gt: &[GroundTruthRecord],
    point_labels: &[PointLabels],
    cfg: &SystemConfig,
) -> MetricsReport {
    let radar_subject = radar_track_subjects(&run.radar_tracks, gt);
    let face_subject = face_track_subjects(&run.face_tracks, gt);
    let min_frames = (cfg.fusion.min_overlap_s / cfg.frame_period).ceil() as usize;

    let mut pairing = GtPairing::default();
    for f in &run.face_tracks {
        let Some(Some(s)) = face_subject.get(&f.id) else {
            continue;
        };
        let ok: Vec<u64> = run
            .radar_tracks
            .iter()
            .filter(|r| radar_subject.get(&r.id) == Some(&Some(*s)) && overlap(r, f) >= min_frames)
            .map(|r| r.id)
            .collect();
        if !ok.is_empty() {
            pairing.acceptable.insert(f.id, ok.into_iter().collect());
        }
    }
    let performed: Vec<(u64, u64)> = run
        .identities
        .iter()
        .filter_map(|i| i.radar_id.map(|r| (r, i.tc_id)))
        .collect();
    let association = association_pr(&performed, &pairing);

    // Per frame: associations whose face track exists at the frame.
    let mut frames: BTreeMap<u64, (Vec<(u64, u64)>, GtPairing)> = BTreeMap::new();
    for f in &run.face_tracks {
        for s in &f.history {
            let entry = frames.entry(s.frame).or_default();
            if let Some(&(r, t)) = performed.iter().find(|p| p.1 == f.id) {
                entry.0.push((r, t));
            }
            if let Some(ok) = pairing.acceptable.get(&f.id) {
                entry.1.acceptable.insert(f.id, ok.clone());
            }
        }
    }
    let per_frame: Vec<(Vec<(u64, u64)>, GtPairing)> = frames.into_values().collect();
    let association_per_frame = association_pr_per_frame(&per_frame);

    let estimated: Vec<EstimatedTrack<'_>> = run
        .radar_tracks
        .iter()
        .map(|t| EstimatedTrack {
            id: t.id,
            history: &t.history,
        })
        .collect();
    let tracking = rmse_metrics(&estimated, gt).ok();

    let owners: BTreeMap<u64, &PointLabels> = point_labels.iter().map(|p| (p.frame, p)).collect();
    let cluster_frames: Vec<(Vec<Option<usize>>, Vec<Option<u64>>)> = run
        .labels
        .iter()
        .filter_map(|l| {
            owners
                .get(&l.frame)
                .map(|o| (l.labels.clone(), o.owners.clone()))
        })
        .collect();
    let clustering = clustering_ratio(&cluster_frames);

    let truth_temp: BTreeMap<u64, f64> = gt.iter().map(|r| (r.subject, r.temperature)).collect();
    let temperatures = run
        .identities
        .iter()
        .map(|i| {
            let subject = face_subject.get(&i.tc_id).copied().flatten();
            TemperatureError {
                tc_id: i.tc_id,
                radar_id: i.radar_id,
                subject,
                t_hat: i.t_hat,
                t_true: subject.and_then(|s| truth_temp.get(&s).copied()),
                raw_std: std_dev(i.per_frame.iter().map(|c| c.raw)),
                corrected_std: std_dev(i.per_frame.iter().map(|c| c.corrected)),
            }
        })
        .collect();

    MetricsReport {
        association,
        association_per_frame,
        tracking,
        clustering,
        temperatures,
    }
}
