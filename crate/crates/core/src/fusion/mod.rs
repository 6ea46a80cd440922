//! Radar/thermal track association and distance-corrected temperature.

mod associate;
mod costs;
mod temperature;

use serde::{Deserialize, Serialize};

pub use associate::{associate_tracks, pair_cost, PairCost};
pub use costs::{
    common_frames, cost_distance, cost_horizontal, normalized_sq_mean, radar_distance,
    radar_projection, track_length_weight, CostTerm,
};
pub use temperature::{
    alpha_eval, corrected_temperature, fit_alpha, CorrectedReading, DistanceSource,
    TemperatureEstimate,
};

/// One identity in the fusion report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedIdentity {
    /// `None` for thermal-only identities.
    pub radar_id: Option<u64>,
    pub tc_id: u64,
    pub cost: Option<f64>,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T_hat")]
    pub t_hat: f64,
    pub per_frame: Vec<CorrectedReading>,
}
