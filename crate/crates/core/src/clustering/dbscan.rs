use std::collections::VecDeque;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

/// One cluster of a labeling: member indices, centroid and sample covariance
/// in the x-y plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub members: Vec<usize>,
    pub centroid: [f64; 2],
    pub covariance: Matrix2<f64>,
}

/// Per-point cluster labels (`None` is noise) and the clusters they index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterLabeling {
    pub labels: Vec<Option<usize>>,
    pub clusters: Vec<Cluster>,
}

impl ClusterLabeling {
    /// Builds clusters from raw labels, renumbering them densely in order of
    /// first appearance.
    pub fn from_labels(points: &[[f64; 2]], raw: &[Option<usize>]) -> Self {
        assert_eq!(points.len(), raw.len());
        let mut remap: Vec<(usize, usize)> = Vec::new();
        let mut labels = Vec::with_capacity(raw.len());
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (i, l) in raw.iter().enumerate() {
            labels.push(l.map(|l| {
                let id = match remap.iter().find(|(from, _)| *from == l) {
                    Some(&(_, to)) => to,
                    None => {
                        remap.push((l, members.len()));
                        members.push(Vec::new());
                        members.len() - 1
                    }
                };
                members[id].push(i);
                id
            }));
        }
        let clusters = members
            .into_iter()
            .map(|m| cluster_stats(points, m))
            .collect();
        Self { labels, clusters }
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }
}

pub(crate) fn cluster_stats(points: &[[f64; 2]], members: Vec<usize>) -> Cluster {
    let n = members.len() as f64;
    let mut c = [0.0; 2];
    for &i in &members {
        c[0] += points[i][0];
        c[1] += points[i][1];
    }
    c[0] /= n;
    c[1] /= n;
    let mut cov = Matrix2::zeros();
    if members.len() > 1 {
        for &i in &members {
            let dx = points[i][0] - c[0];
            let dy = points[i][1] - c[1];
            cov[(0, 0)] += dx * dx;
            cov[(0, 1)] += dx * dy;
            cov[(1, 1)] += dy * dy;
        }
        cov /= n - 1.0;
        cov[(1, 0)] = cov[(0, 1)];
    }
    Cluster {
        members,
        centroid: c,
        covariance: cov,
    }
}

/// Density-based clustering on x-y coordinates. A point is core when at least
/// `min_pts` points (itself included) lie within `eps`; clusters are maximal
/// density-connected sets and everything else is noise.
pub fn dbscan(points: &[[f64; 2]], eps: f64, min_pts: usize) -> ClusterLabeling {
    let n = points.len();
    let eps2 = eps * eps;
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    let dx = points[i][0] - points[j][0];
                    let dy = points[i][1] - points[j][1];
                    dx * dx + dy * dy <= eps2
                })
                .collect()
        })
        .collect();
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if labels[seed].is_some() || !is_core[seed] {
            continue;
        }
        labels[seed] = Some(next);
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            if !is_core[p] {
                continue;
            }
            for &q in &neighbors[p] {
                if labels[q].is_none() {
                    labels[q] = Some(next);
                    queue.push_back(q);
                }
            }
        }
        next += 1;
    }
    ClusterLabeling::from_labels(points, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{brute_force_dbscan, same_partition};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blob(rng: &mut ChaCha8Rng, c: [f64; 2], s: f64, n: usize) -> Vec<[f64; 2]> {
        let nd = Normal::new(0.0, s).unwrap();
        (0..n)
            .map(|_| [c[0] + nd.sample(rng), c[1] + nd.sample(rng)])
            .collect()
    }

    #[test]
    fn two_separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts = blob(&mut rng, [0.0, 2.0], 0.05, 20);
        pts.extend(blob(&mut rng, [2.0, 2.0], 0.05, 20));
        let l = dbscan(&pts, 0.4, 10);
        assert_eq!(l.clusters.len(), 2);
        assert_eq!(l.noise_count(), 0);
        assert!(same_partition(
            &l.labels,
            &brute_force_dbscan(&pts, 0.4, 10)
        ));
        assert!((l.clusters[0].centroid[0]).abs() < 0.05);
    }

    #[test]
    fn isolated_point_is_noise() {
        let l = dbscan(&[[1.0, 1.0]], 0.4, 10);
        assert_eq!(l.labels, vec![None]);
        assert!(l.clusters.is_empty());
    }

    #[test]
    fn coincident_points_form_one_cluster() {
        let pts = vec![[0.5, 0.5]; 15];
        let l = dbscan(&pts, 0.4, 10);
        assert_eq!(l.clusters.len(), 1);
        assert_eq!(l.clusters[0].members.len(), 15);
        assert_eq!(l.clusters[0].covariance, Matrix2::zeros());
    }

    #[test]
    fn empty_input() {
        let l = dbscan(&[], 0.4, 10);
        assert!(l.labels.is_empty() && l.clusters.is_empty());
    }

    #[test]
    fn sample_covariance() {
        let pts = [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]];
        let c = cluster_stats(&pts, vec![0, 1, 2, 3]);
        assert_eq!(c.centroid, [1.0, 1.0]);
        assert!((c.covariance[(0, 0)] - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(c.covariance[(0, 1)], 0.0);
    }

    proptest! {
        #[test]
        fn permutation_invariant(seed in 0u64..500, shift in 1usize..50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pts = blob(&mut rng, [0.0, 2.0], 0.15, 25);
            pts.extend(blob(&mut rng, [0.9, 2.3], 0.15, 25));
            let base = dbscan(&pts, 0.4, 10);
            let n = pts.len();
            let perm: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
            // 7 is coprime with 50 so this is a permutation.
            let permuted: Vec<[f64; 2]> = perm.iter().map(|&i| pts[i]).collect();
            let other = dbscan(&permuted, 0.4, 10);
            let back: Vec<Option<usize>> = {
                let mut v = vec![None; n];
                for (k, &i) in perm.iter().enumerate() { v[i] = other.labels[k]; }
                v
            };
            prop_assert!(crate::oracle::suites::same_core_partition(&pts, 0.4, 10, &base.labels, &back));
            prop_assert!(crate::oracle::suites::same_core_partition(
                &pts, 0.4, 10, &base.labels, &brute_force_dbscan(&pts, 0.4, 10)));
        }
    }
}
