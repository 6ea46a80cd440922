//! Re-clustering of point clouds belonging to subjects walking close together.
//!
//! Tracks whose predicted positions chain together within `d_th` form a
//! group. For every group with more than one member, the DBSCAN clusters
//! whose centroids fall in the union over members of (disc of radius `d_th`)
//! intersected with (Mahalanobis ellipse of the member's last cluster shape)
//! are pooled, and a Gaussian mixture with one component per member replaces
//! their labels. Light mixture components become noise.

use nalgebra::{Matrix2, Vector2};

use super::dbscan::ClusterLabeling;
use super::gmm::gm_fit_from_means;
use crate::config::ClusteringConfig;

/// What the refinement needs to know about a maintained track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPrior {
    pub id: u64,
    /// Predicted x-y position for the current frame.
    pub position: [f64; 2],
    /// Sample covariance of the last cluster associated with the track.
    pub last_cluster_cov: Option<Matrix2<f64>>,
}

/// Partition of track ids into groups of mutually nearby tracks (transitive
/// closure of `distance <= d_th`). Groups and their members are sorted.
pub fn nearby_groups(positions: &[(u64, [f64; 2])], d_th: f64) -> Vec<Vec<u64>> {
    let n = positions.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (positions[i].1, positions[j].1);
            if ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() <= d_th {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<u64>> = Vec::new();
    let mut root_of_group: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of_group.iter().position(|&x| x == r) {
            Some(g) => groups[g].push(positions[i].0),
            None => {
                root_of_group.push(r);
                groups.push(vec![positions[i].0]);
            }
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort();
    groups
}

/// Whether `point` lies in the refinement region of a single track.
pub fn in_track_region(point: [f64; 2], track: &TrackPrior, cfg: &ClusteringConfig) -> bool {
    let d = Vector2::new(point[0] - track.position[0], point[1] - track.position[1]);
    if d.norm() >= cfg.d_th {
        return false;
    }
    let shape = track
        .last_cluster_cov
        .unwrap_or_else(|| Matrix2::identity() * (cfg.d_th * cfg.d_th / cfg.gamma))
        + Matrix2::identity() * 1e-6;
    match shape.try_inverse() {
        Some(inv) => (d.transpose() * inv * d)[(0, 0)] < cfg.gamma,
        None => false,
    }
}

/// Refines a DBSCAN labeling of `points` given the maintained tracks.
/// Groups of size one leave the labeling untouched.
pub fn refine_clusters(
    points: &[[f64; 2]],
    labeling: &ClusterLabeling,
    tracks: &[TrackPrior],
    cfg: &ClusteringConfig,
) -> ClusterLabeling {
    let positions: Vec<(u64, [f64; 2])> = tracks.iter().map(|t| (t.id, t.position)).collect();
    let groups = nearby_groups(&positions, cfg.d_th);
    if groups.iter().all(|g| g.len() < 2) {
        return labeling.clone();
    }

    // Raw labels with room for fresh ids above the existing ones.
    let mut raw: Vec<Option<usize>> = labeling.labels.clone();
    let mut next_label = labeling.clusters.len();
    let mut taken = vec![false; labeling.clusters.len()];

    for group in groups.iter().filter(|g| g.len() > 1) {
        let members: Vec<&TrackPrior> = group
            .iter()
            .filter_map(|id| tracks.iter().find(|t| t.id == *id))
            .collect();
        let selected: Vec<usize> = labeling
            .clusters
            .iter()
            .enumerate()
            .filter(|(c, cl)| {
                !taken[*c] && members.iter().any(|t| in_track_region(cl.centroid, t, cfg))
            })
            .map(|(c, _)| c)
            .collect();
        let subset: Vec<usize> = selected
            .iter()
            .flat_map(|&c| labeling.clusters[c].members.iter().copied())
            .collect();
        let n_group = members.len();
        if subset.len() < n_group {
            continue;
        }
        for &c in &selected {
            taken[c] = true;
        }
        let subset_points: Vec<[f64; 2]> = subset.iter().map(|&i| points[i]).collect();
        let init: Vec<[f64; 2]> = members.iter().map(|t| t.position).collect();
        let Ok(fit) = gm_fit_from_means(&subset_points, &init) else {
            continue;
        };
        let pi_thr = cfg.pi_thr_scale / n_group as f64;
        let component_label: Vec<Option<usize>> = fit
            .weights
            .iter()
            .map(|&w| {
                (w >= pi_thr).then(|| {
                    next_label += 1;
                    next_label - 1
                })
            })
            .collect();
        for (k, &i) in subset.iter().enumerate() {
            raw[i] = component_label[fit.labels[k]];
        }
    }
    ClusterLabeling::from_labels(points, &raw)
}
