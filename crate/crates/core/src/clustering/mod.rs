//! Point-cloud clustering: DBSCAN, Gaussian mixtures and the track-aware
//! refinement that splits clouds of subjects walking side by side.

mod dbscan;
mod gmm;
mod refine;

pub use dbscan::{dbscan, Cluster, ClusterLabeling};
pub use gmm::{gm_fit, gm_fit_from_means, GmFit};
pub use refine::{in_track_region, nearby_groups, refine_clusters, TrackPrior};
