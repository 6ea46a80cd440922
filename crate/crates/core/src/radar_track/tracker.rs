use std::collections::VecDeque;

use nalgebra::{Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::kf::{associate_observations, kf_predict, kf_update, CvModel, KalmanState};
use crate::clustering::{Cluster, TrackPrior};
use crate::config::{RadarTrackConfig, TrackPolicy};
use crate::geometry::RadarPoint;

/// Filtered state of a track at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub frame: u64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// Position block of the covariance, row-major.
    pub pos_cov: [[f64; 2]; 2],
    /// Whether a cluster was assigned at this frame.
    pub observed: bool,
}

/// Points of the cluster assigned to a track at one frame (empty on a miss).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSnapshot {
    pub frame: u64,
    pub points: Vec<RadarPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarTrack {
    pub id: u64,
    pub kf: KalmanState,
    pub last_cluster_cov: Option<Matrix2<f64>>,
    /// Frames since birth, birth frame included.
    pub age: u32,
    pub hits: u32,
    pub misses: u32,
    pub confirmed: bool,
    /// Consecutive frames spent next to an older confirmed track.
    #[serde(default)]
    pub shadowed: u32,
    pub history: Vec<TrackSample>,
    /// Most recent clusters, oldest first, bounded by the gait window length.
    pub buffer: VecDeque<ClusterSnapshot>,
}

impl RadarTrack {
    fn new(id: u64, frame: u64, centroid: [f64; 2], cfg: &RadarTrackConfig) -> Self {
        let mut p = Matrix4::identity() * cfg.init_velocity_var;
        p[(0, 0)] = cfg.sigma_obs * cfg.sigma_obs;
        p[(1, 1)] = cfg.sigma_obs * cfg.sigma_obs;
        Self {
            id,
            kf: KalmanState {
                x: Vector4::new(centroid[0], centroid[1], 0.0, 0.0),
                p,
            },
            last_cluster_cov: None,
            age: 1,
            hits: 1,
            misses: 0,
            confirmed: false,
            shadowed: 0,
            history: Vec::new(),
            buffer: VecDeque::new(),
        }
        .with_sample(frame, true)
    }

    fn with_sample(mut self, frame: u64, observed: bool) -> Self {
        self.record(frame, observed);
        self
    }

    fn record(&mut self, frame: u64, observed: bool) {
        let c = self.kf.position_cov();
        self.history.push(TrackSample {
            frame,
            x: self.kf.x[0],
            y: self.kf.x[1],
            vx: self.kf.x[2],
            vy: self.kf.x[3],
            pos_cov: [[c[(0, 0)], c[(0, 1)]], [c[(1, 0)], c[(1, 1)]]],
            observed,
        });
    }

    fn push_snapshot(&mut self, snapshot: ClusterSnapshot, capacity: usize) {
        self.buffer.push_back(snapshot);
        while self.buffer.len() > capacity {
            self.buffer.pop_front();
        }
    }

    pub fn position(&self) -> [f64; 2] {
        self.kf.position()
    }
}

/// Outcome of one frame for the caller: which tracks were updated and which
/// were created or removed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameUpdate {
    /// `(track id, cluster index)` pairs.
    pub assigned: Vec<(u64, usize)>,
    pub born: Vec<u64>,
    pub deleted: Vec<u64>,
}

/// Multi-target CV tracker over cluster centroids.
#[derive(Debug, Clone)]
pub struct Tracker {
    model: CvModel,
    cfg: RadarTrackConfig,
    policy: TrackPolicy,
    buffer_len: usize,
    next_id: u64,
    live: Vec<RadarTrack>,
    finished: Vec<RadarTrack>,
}

impl Tracker {
    pub fn new(
        frame_period: f64,
        cfg: RadarTrackConfig,
        policy: TrackPolicy,
        buffer_len: usize,
    ) -> Self {
        Self {
            model: CvModel::from_config(frame_period, &cfg),
            cfg,
            policy,
            buffer_len,
            next_id: 0,
            live: Vec::new(),
            finished: Vec::new(),
        }
    }

    pub fn live(&self) -> &[RadarTrack] {
        &self.live
    }

    pub fn live_mut(&mut self) -> &mut [RadarTrack] {
        &mut self.live
    }

    pub fn finished(&self) -> &[RadarTrack] {
        &self.finished
    }

    /// Propagates every live track one frame.
    pub fn predict(&mut self) {
        for t in &mut self.live {
            t.kf = kf_predict(&t.kf, &self.model);
        }
    }

    /// Predicted positions and cluster shapes of confirmed tracks, for the
    /// clustering refinement.
    pub fn priors(&self) -> Vec<TrackPrior> {
        self.live
            .iter()
            .filter(|t| t.confirmed)
            .map(|t| TrackPrior {
                id: t.id,
                position: t.position(),
                last_cluster_cov: t.last_cluster_cov,
            })
            .collect()
    }

    /// Assigns the clusters of `frame` (already predicted with
    /// [`Tracker::predict`]), updates, and applies the lifecycle policy.
    pub fn update(
        &mut self,
        frame: u64,
        clusters: &[Cluster],
        points: &[RadarPoint],
    ) -> FrameUpdate {
        let predicted: Vec<KalmanState> = self.live.iter().map(|t| t.kf).collect();
        let centroids: Vec<[f64; 2]> = clusters.iter().map(|c| c.centroid).collect();
        let assoc = associate_observations(&predicted, &centroids, &self.model, self.cfg.gate);
        manage_tracks(self, frame, clusters, points, &assoc.pairs)
    }

    /// Ends the run: every live track moves to the finished list.
    pub fn finish(&mut self) {
        self.finished.append(&mut self.live);
        self.finished.sort_by_key(|t| t.id);
    }

    /// All tracks that were ever confirmed, live or finished, by id.
    pub fn confirmed_tracks(&self) -> Vec<&RadarTrack> {
        let mut v: Vec<&RadarTrack> = self
            .finished
            .iter()
            .chain(&self.live)
            .filter(|t| t.confirmed)
            .collect();
        v.sort_by_key(|t| t.id);
        v
    }
}

/// Applies the assignment of one frame: updates assigned tracks, coasts the
/// others, spawns tentative tracks from unassigned clusters and deletes tracks
/// per the policy. Track ids are never reused.
pub fn manage_tracks(
    tracker: &mut Tracker,
    frame: u64,
    clusters: &[Cluster],
    points: &[RadarPoint],
    pairs: &[(usize, usize)],
) -> FrameUpdate {
    let mut out = FrameUpdate::default();
    let policy = tracker.policy;
    let mut keep = Vec::with_capacity(tracker.live.len());
    let live = std::mem::take(&mut tracker.live);
    for (i, mut t) in live.into_iter().enumerate() {
        t.age += 1;
        match pairs.iter().find(|p| p.0 == i) {
            Some(&(_, c)) => {
                let cl = &clusters[c];
                t.kf = kf_update(&t.kf, cl.centroid, &tracker.model);
                t.last_cluster_cov = Some(cl.covariance);
                t.hits += 1;
                t.misses = 0;
                if t.hits >= policy.confirm_hits {
                    t.confirmed = true;
                }
                t.record(frame, true);
                let snap = ClusterSnapshot {
                    frame,
                    points: cl.members.iter().map(|&m| points[m]).collect(),
                };
                t.push_snapshot(snap, tracker.buffer_len);
                out.assigned.push((t.id, c));
                keep.push(t);
            }
            None => {
                t.misses += 1;
                t.hits = 0;
                if !t.confirmed || t.misses >= policy.max_misses {
                    // The coasted tail carries no information.
                    while t.history.last().is_some_and(|s| !s.observed) {
                        t.history.pop();
                    }
                    out.deleted.push(t.id);
                    tracker.finished.push(t);
                } else {
                    t.record(frame, false);
                    t.push_snapshot(
                        ClusterSnapshot {
                            frame,
                            points: Vec::new(),
                        },
                        tracker.buffer_len,
                    );
                    keep.push(t);
                }
            }
        }
    }
    drop_duplicates(&mut keep, &tracker.cfg, &mut out, &mut tracker.finished);
    for (c, cl) in clusters.iter().enumerate() {
        if pairs.iter().any(|p| p.1 == c) {
            continue;
        }
        let near = |t: &RadarTrack| {
            t.confirmed && dist(t.position(), cl.centroid) < tracker.cfg.birth_exclusion
        };
        if keep.iter().any(near) {
            continue;
        }
        let id = tracker.next_id;
        tracker.next_id += 1;
        let mut t = RadarTrack::new(id, frame, cl.centroid, &tracker.cfg);
        t.last_cluster_cov = Some(cl.covariance);
        if t.hits >= policy.confirm_hits {
            t.confirmed = true;
        }
        let snap = ClusterSnapshot {
            frame,
            points: cl.members.iter().map(|&m| points[m]).collect(),
        };
        t.push_snapshot(snap, tracker.buffer_len);
        out.born.push(id);
        out.assigned.push((id, c));
        keep.push(t);
    }
    tracker.live = keep;
    out
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Removes confirmed tracks that kept following an older confirmed track.
/// Ids are increasing with birth, so the lower id survives.
fn drop_duplicates(
    live: &mut Vec<RadarTrack>,
    cfg: &RadarTrackConfig,
    out: &mut FrameUpdate,
    finished: &mut Vec<RadarTrack>,
) {
    let snapshot: Vec<(u64, bool, [f64; 2])> = live
        .iter()
        .map(|t| (t.id, t.confirmed, t.position()))
        .collect();
    for t in live.iter_mut().filter(|t| t.confirmed) {
        let shadowed = snapshot.iter().any(|&(id, confirmed, p)| {
            confirmed && id < t.id && dist(p, t.position()) < cfg.merge_distance
        });
        t.shadowed = if shadowed { t.shadowed + 1 } else { 0 };
    }
    let mut i = 0;
    while i < live.len() {
        if live[i].shadowed >= cfg.merge_frames {
            let t = live.remove(i);
            out.deleted.push(t.id);
            finished.push(t);
        } else {
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ClusterLabeling;

    fn cluster_at(c: [f64; 2]) -> (Vec<Cluster>, Vec<RadarPoint>) {
        let pts: Vec<RadarPoint> = [[-0.05, 0.0], [0.05, 0.0], [0.0, 0.05], [0.0, -0.05]]
            .iter()
            .map(|d| RadarPoint {
                x: c[0] + d[0],
                y: c[1] + d[1],
                z: 0.0,
                v: 0.0,
                p_rx: 1.0,
            })
            .collect();
        let xy: Vec<[f64; 2]> = pts.iter().map(|p| p.xy()).collect();
        (
            ClusterLabeling::from_labels(&xy, &[Some(0); 4]).clusters,
            pts,
        )
    }

    fn tracker() -> Tracker {
        Tracker::new(
            1.0 / 15.0,
            RadarTrackConfig::default(),
            TrackPolicy::default(),
            45,
        )
    }

    fn step(t: &mut Tracker, frame: u64, at: Option<[f64; 2]>) -> FrameUpdate {
        t.predict();
        match at {
            Some(c) => {
                let (cl, pts) = cluster_at(c);
                t.update(frame, &cl, &pts)
            }
            None => t.update(frame, &[], &[]),
        }
    }

    fn step_many(t: &mut Tracker, frame: u64, at: &[[f64; 2]]) -> FrameUpdate {
        t.predict();
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for (i, &c) in at.iter().enumerate() {
            let (_, p) = cluster_at(c);
            labels.extend(std::iter::repeat_n(Some(i), p.len()));
            pts.extend(p);
        }
        let xy: Vec<[f64; 2]> = pts.iter().map(|p| p.xy()).collect();
        t.update(
            frame,
            &ClusterLabeling::from_labels(&xy, &labels).clusters,
            &pts,
        )
    }

    #[test]
    fn no_birth_next_to_a_confirmed_track() {
        let mut t = tracker();
        for k in 0..3 {
            step(&mut t, k, Some([0.0, 2.0]));
        }
        let u = step_many(&mut t, 3, &[[0.0, 2.0], [0.3, 2.0]]);
        assert!(u.born.is_empty());
        let u = step_many(&mut t, 4, &[[0.0, 2.0], [1.5, 2.0]]);
        assert_eq!(u.born.len(), 1);
    }

    #[test]
    fn duplicate_track_is_dropped() {
        let mut t = tracker();
        let mut k = 0;
        for _ in 0..3 {
            step_many(&mut t, k, &[[0.0, 2.0], [1.0, 2.0]]);
            k += 1;
        }
        assert_eq!(t.confirmed_tracks().len(), 2);
        let mut deleted = Vec::new();
        for i in 0..40 {
            let x = (1.0 - 0.04 * i as f64).max(0.2);
            deleted.extend(step_many(&mut t, k, &[[0.0, 2.0], [x, 2.0]]).deleted);
            k += 1;
        }
        assert_eq!(deleted, vec![1]);
        assert_eq!(t.live().len(), 1);
        assert_eq!(t.live()[0].id, 0);
    }

    #[test]
    fn three_hits_confirm() {
        let mut t = tracker();
        for k in 0..3 {
            step(&mut t, k, Some([0.0, 2.0]));
        }
        assert_eq!(t.live().len(), 1);
        assert!(t.live()[0].confirmed);
        assert_eq!(t.live()[0].history.len(), 3);
    }

    #[test]
    fn tentative_track_dies_on_a_miss() {
        let mut t = tracker();
        step(&mut t, 0, Some([0.0, 2.0]));
        let u = step(&mut t, 1, None);
        assert_eq!(u.deleted, vec![0]);
        assert!(t.live().is_empty());
        assert!(t.confirmed_tracks().is_empty());
    }

    #[test]
    fn ten_misses_delete() {
        let mut t = tracker();
        for k in 0..3 {
            step(&mut t, k, Some([0.0, 2.0]));
        }
        for k in 3..12 {
            step(&mut t, k, None);
            assert_eq!(t.live().len(), 1, "frame {k}");
        }
        let u = step(&mut t, 12, None);
        assert_eq!(u.deleted, vec![0]);
        assert!(t.live().is_empty());
    }

    #[test]
    fn coasting_keeps_the_id() {
        let mut t = tracker();
        for k in 0..5 {
            step(&mut t, k, Some([0.0, 2.0]));
        }
        for k in 5..10 {
            step(&mut t, k, None);
        }
        step(&mut t, 10, Some([0.02, 2.0]));
        assert_eq!(t.live().len(), 1);
        assert_eq!(t.live()[0].id, 0);
        assert_eq!(t.live()[0].misses, 0);
        assert_eq!(t.live()[0].buffer.len(), 11);
    }

    #[test]
    fn ids_are_not_reused() {
        let mut t = tracker();
        step(&mut t, 0, Some([0.0, 2.0]));
        step(&mut t, 1, None);
        let u = step(&mut t, 2, Some([0.0, 2.0]));
        assert_eq!(u.born, vec![1]);
    }

    #[test]
    fn buffer_is_bounded() {
        let mut t = Tracker::new(
            1.0 / 15.0,
            RadarTrackConfig::default(),
            TrackPolicy::default(),
            4,
        );
        for k in 0..10 {
            step(&mut t, k, Some([0.0, 2.0]));
        }
        let b = &t.live()[0].buffer;
        assert_eq!(b.len(), 4);
        assert_eq!(b.front().unwrap().frame, 6);
    }
}
