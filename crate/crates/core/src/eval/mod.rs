//! Scoring against simulator ground truth: association precision/recall,
//! positioning RMSE, correct-clustering ratio and re-identification accuracy.

mod reid_bench;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::assignment::solve_assignment;
use crate::error::{Error, Result};
use crate::radar_track::TrackSample;
use crate::sim::GroundTruthRecord;

pub use reid_bench::{
    build_store, generate_reid_data, reid_events, run_reid_bench, session_features,
    ReidBenchConfig, ReidBenchReport, ReidBenchRow, SubjectFeatures,
};

/// Performed and relevant associations with the derived scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationReport {
    pub performed: Vec<(u64, u64)>,
    pub true_positives: Vec<(u64, u64)>,
    pub relevant: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Ground-truth pairing: for every face track that should be associated, the
/// radar tracks that would be a correct partner.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GtPairing {
    pub acceptable: BTreeMap<u64, BTreeSet<u64>>,
}

impl GtPairing {
    pub fn is_correct(&self, radar_id: u64, tc_id: u64) -> bool {
        self.acceptable
            .get(&tc_id)
            .is_some_and(|s| s.contains(&radar_id))
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision `|TP| / |P|` and recall `|TP| / |R|` of `(radar_id, tc_id)`
/// associations; an empty denominator gives 1.
pub fn association_pr(performed: &[(u64, u64)], gt: &GtPairing) -> AssociationReport {
    let true_positives: Vec<(u64, u64)> = performed
        .iter()
        .copied()
        .filter(|&(r, t)| gt.is_correct(r, t))
        .collect();
    AssociationReport {
        performed: performed.to_vec(),
        precision: ratio(true_positives.len(), performed.len()),
        recall: ratio(true_positives.len(), gt.acceptable.len()),
        relevant: gt.acceptable.len(),
        true_positives,
    }
}

/// Counts summed over frames: each frame lists the associations active at it
/// and the ground-truth pairing restricted to it.
pub fn association_pr_per_frame(frames: &[(Vec<(u64, u64)>, GtPairing)]) -> AssociationReport {
    let (mut tp, mut p, mut r) = (0, 0, 0);
    for (performed, gt) in frames {
        tp += performed
            .iter()
            .filter(|&&(a, b)| gt.is_correct(a, b))
            .count();
        p += performed.len();
        r += gt.acceptable.len();
    }
    AssociationReport {
        performed: Vec::new(),
        true_positives: Vec::new(),
        relevant: r,
        precision: ratio(tp, p),
        recall: ratio(tp, r),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    pub position_rmse: f64,
    /// `None` when no two matched subjects share a frame.
    pub distance_rmse: Option<f64>,
    pub position_frames: usize,
    pub distance_frames: usize,
    /// Matched `(track id, subject id)` pairs.
    pub matches: Vec<(u64, u64)>,
    /// `(frame, subject, error)` position errors.
    pub errors: Vec<(u64, u64, f64)>,
}

/// An estimated trajectory to be scored.
#[derive(Debug, Clone, Copy)]
pub struct EstimatedTrack<'a> {
    pub id: u64,
    pub history: &'a [TrackSample],
}

fn truth_by_frame(gt: &[GroundTruthRecord]) -> BTreeMap<(u64, u64), [f64; 2]> {
    gt.iter()
        .map(|r| ((r.frame, r.subject), [r.x, r.y]))
        .collect()
}

/// Position and inter-subject distance RMSE. Tracks are matched one-to-one to
/// subjects by minimum time-averaged distance over shared frames.
pub fn rmse_metrics(
    tracks: &[EstimatedTrack<'_>],
    gt: &[GroundTruthRecord],
) -> Result<TrackingReport> {
    let truth = truth_by_frame(gt);
    let subjects: Vec<u64> = gt
        .iter()
        .map(|r| r.subject)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if tracks.is_empty() || subjects.is_empty() {
        return Err(Error::NoMatchedFrames);
    }
    let mean_dist = |t: &EstimatedTrack<'_>, s: u64| -> Option<f64> {
        let d: Vec<f64> = t
            .history
            .iter()
            .filter_map(|h| {
                truth
                    .get(&(h.frame, s))
                    .map(|p| (h.x - p[0]).hypot(h.y - p[1]))
            })
            .collect();
        (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
    };
    let means: Vec<Vec<Option<f64>>> = tracks
        .iter()
        .map(|t| subjects.iter().map(|&s| mean_dist(t, s)).collect())
        .collect();
    let finite_max = means
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |a, &b| a.max(b));
    let sentinel = 10.0 * (finite_max + 1.0) * (tracks.len() + subjects.len()) as f64;
    let matrix: Vec<Vec<f64>> = means
        .iter()
        .map(|row| row.iter().map(|m| m.unwrap_or(sentinel)).collect())
        .collect();
    let assignment = solve_assignment(&matrix)?;
    let matched: Vec<(usize, u64)> = assignment
        .pairs
        .iter()
        .filter(|&&(i, j)| means[i][j].is_some())
        .map(|&(i, j)| (i, subjects[j]))
        .collect();

    let mut errors = Vec::new();
    let mut estimates: BTreeMap<(u64, u64), [f64; 2]> = BTreeMap::new();
    for &(i, s) in &matched {
        for h in tracks[i].history {
            if let Some(p) = truth.get(&(h.frame, s)) {
                errors.push((h.frame, s, (h.x - p[0]).hypot(h.y - p[1])));
                estimates.insert((h.frame, s), [h.x, h.y]);
            }
        }
    }
    if errors.is_empty() {
        return Err(Error::NoMatchedFrames);
    }
    errors.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let position_rmse =
        (errors.iter().map(|e| e.2 * e.2).sum::<f64>() / errors.len() as f64).sqrt();

    let frames: BTreeSet<u64> = estimates.keys().map(|k| k.0).collect();
    let mut sq = Vec::new();
    for &f in &frames {
        let here: Vec<(u64, [f64; 2])> = estimates
            .range((f, 0)..=(f, u64::MAX))
            .map(|(k, v)| (k.1, *v))
            .collect();
        for a in 0..here.len() {
            for b in a + 1..here.len() {
                let (sa, ea) = here[a];
                let (sb, eb) = here[b];
                let (ta, tb) = (truth[&(f, sa)], truth[&(f, sb)]);
                let est = (ea[0] - eb[0]).hypot(ea[1] - eb[1]);
                let tru = (ta[0] - tb[0]).hypot(ta[1] - tb[1]);
                sq.push((est - tru).powi(2));
            }
        }
    }
    let distance_rmse = (!sq.is_empty()).then(|| (sq.iter().sum::<f64>() / sq.len() as f64).sqrt());
    Ok(TrackingReport {
        position_rmse,
        distance_rmse,
        position_frames: errors.len(),
        distance_frames: sq.len(),
        matches: matched.iter().map(|&(i, s)| (tracks[i].id, s)).collect(),
        errors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub r_cl: f64,
    pub correct: Vec<bool>,
}

/// Minimum share of a cluster's points that must come from its majority
/// subject.
pub const PURITY: f64 = 0.8;

/// Whether the clusters of one frame separate the subjects: as many clusters
/// as subjects with points, each dominated (by at least [`PURITY`]) by a
/// different subject.
pub fn frame_correctly_clustered(labels: &[Option<usize>], owners: &[Option<u64>]) -> bool {
    let present: BTreeSet<u64> = owners.iter().flatten().copied().collect();
    let mut members: BTreeMap<usize, Vec<Option<u64>>> = BTreeMap::new();
    for (l, o) in labels.iter().zip(owners) {
        if let Some(c) = l {
            members.entry(*c).or_default().push(*o);
        }
    }
    if members.len() != present.len() {
        return false;
    }
    let mut used = BTreeSet::new();
    for pts in members.values() {
        let mut counts: BTreeMap<Option<u64>, usize> = BTreeMap::new();
        for o in pts {
            *counts.entry(*o).or_default() += 1;
        }
        let (owner, n) = counts
            .iter()
            .max_by_key(|(_, n)| **n)
            .map(|(o, n)| (*o, *n))
            .expect("non-empty cluster");
        let Some(subject) = owner else { return false };
        if (n as f64) < PURITY * pts.len() as f64 || !used.insert(subject) {
            return false;
        }
    }
    true
}

/// Fraction of frames with at least two present subjects in which every
/// subject has its own track within `radius` meters. A track that swallowed
/// two subjects leaves one of them uncovered.
pub fn separation_ratio(
    tracks: &[EstimatedTrack<'_>],
    gt: &[GroundTruthRecord],
    radius: f64,
) -> Option<f64> {
    let mut estimates: BTreeMap<u64, Vec<[f64; 2]>> = BTreeMap::new();
    for t in tracks {
        for h in t.history {
            estimates.entry(h.frame).or_default().push([h.x, h.y]);
        }
    }
    let mut truth: BTreeMap<u64, Vec<[f64; 2]>> = BTreeMap::new();
    for r in gt {
        truth.entry(r.frame).or_default().push([r.x, r.y]);
    }
    let (mut frames, mut separated) = (0usize, 0usize);
    for (frame, subjects) in truth.iter().filter(|(_, s)| s.len() >= 2) {
        frames += 1;
        let Some(est) = estimates.get(frame).filter(|e| e.len() >= subjects.len()) else {
            continue;
        };
        // Zero total cost iff a matching within `radius` exists.
        let cost: Vec<Vec<f64>> = subjects
            .iter()
            .map(|s| {
                est.iter()
                    .map(|e| f64::from((s[0] - e[0]).hypot(s[1] - e[1]) > radius))
                    .collect()
            })
            .collect();
        if solve_assignment(&cost).is_ok_and(|a| a.total_cost == 0.0) {
            separated += 1;
        }
    }
    (frames > 0).then(|| separated as f64 / frames as f64)
}

/// Correct-clustering ratio over frames of `(labels, owners)`.
pub fn clustering_ratio(frames: &[(Vec<Option<usize>>, Vec<Option<u64>>)]) -> ClusteringReport {
    let correct: Vec<bool> = frames
        .iter()
        .map(|(l, o)| frame_correctly_clustered(l, o))
        .collect();
    let r_cl = ratio(correct.iter().filter(|c| **c).count(), correct.len());
    ClusteringReport { r_cl, correct }
}

/// Fraction of predictions equal to the truth (1 for no events).
pub fn reid_accuracy(predictions: &[u64], truth: &[u64]) -> f64 {
    let n = predictions.len().min(truth.len());
    ratio(
        predictions
            .iter()
            .zip(truth)
            .filter(|(p, t)| p == t)
            .count(),
        n,
    )
}

/// Majority subject among the labels in `votes`, ignoring `None`, when it
/// accounts for at least half of all votes.
pub fn majority_label(votes: impl IntoIterator<Item = Option<u64>>) -> Option<u64> {
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    let mut total = 0usize;
    for v in votes {
        total += 1;
        if let Some(s) = v {
            *counts.entry(s).or_default() += 1;
        }
    }
    let (s, n) = counts
        .into_iter()
        .max_by_key(|&(s, n)| (n, std::cmp::Reverse(s)))?;
    (2 * n >= total).then_some(s)
}
