use serde::{Deserialize, Serialize};

use super::costs::{common_frames, cost_distance, cost_horizontal, track_length_weight};
use crate::assignment::solve_assignment;
use crate::config::FusionConfig;
use crate::error::Result;
use crate::exec::Execution;
use crate::geometry::{CameraModel, RigidTransform};
use crate::radar_track::RadarTrack;
use crate::thermal_track::FaceTrack;

/// Breakdown of the association cost of one radar/face pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCost {
    pub radar_id: u64,
    pub tc_id: u64,
    /// Number of overlapping frames.
    pub k: usize,
    pub a_d: f64,
    pub a_x: f64,
    pub rho: f64,
    pub total: f64,
}

/// Cost of associating one radar track with one face track, or `None` when the
/// pair is not eligible (overlap too short, or no usable frames).
pub fn pair_cost(
    radar: &RadarTrack,
    face: &FaceTrack,
    cam: &CameraModel,
    transform: &RigidTransform,
    cfg: &FusionConfig,
    frame_period: f64,
) -> Option<PairCost> {
    let k = common_frames(&radar.history, &face.history).len();
    if k == 0 || (k as f64) * frame_period < cfg.min_overlap_s {
        return None;
    }
    let a_d = if cfg.use_distance_cost {
        cost_distance(&radar.history, &face.history, transform)
            .ok()?
            .value
    } else {
        0.0
    };
    let a_x = if cfg.use_horizontal_cost {
        cost_horizontal(&radar.history, &face.history, cam, transform)
            .ok()?
            .value
    } else {
        0.0
    };
    let rho = if cfg.use_length_weight {
        track_length_weight(k, frame_period).ok()?
    } else {
        1.0
    };
    let total = rho * (a_d + a_x);
    total.is_finite().then_some(PairCost {
        radar_id: radar.id,
        tc_id: face.id,
        k,
        a_d,
        a_x,
        rho,
        total,
    })
}

/// One-to-one association of radar tracks with face tracks minimizing the
/// summed cost. Ineligible pairs and pairs above the acceptance threshold are
/// never returned.
pub fn associate_tracks(
    radar: &[&RadarTrack],
    faces: &[&FaceTrack],
    cam: &CameraModel,
    transform: &RigidTransform,
    cfg: &FusionConfig,
    frame_period: f64,
    exec: Execution,
) -> Result<Vec<PairCost>> {
    if radar.is_empty() || faces.is_empty() {
        return Ok(Vec::new());
    }
    let cols = faces.len();
    let costs: Vec<Option<PairCost>> = exec.map_range(radar.len() * cols, |idx| {
        pair_cost(
            radar[idx / cols],
            faces[idx % cols],
            cam,
            transform,
            cfg,
            frame_period,
        )
    });
    let admissible = |c: &Option<PairCost>| c.filter(|c| c.total <= cfg.accept_threshold);
    if costs.iter().all(|c| admissible(c).is_none()) {
        return Ok(Vec::new());
    }
    // Inadmissible entries get a cost larger than any admissible assignment.
    let forbidden = 1.0 + cfg.accept_threshold.max(0.0) * (radar.len().min(cols) as f64 + 1.0);
    let matrix: Vec<Vec<f64>> = (0..radar.len())
        .map(|i| {
            (0..cols)
                .map(|j| admissible(&costs[i * cols + j]).map_or(forbidden, |c| c.total))
                .collect()
        })
        .collect();
    let solution = solve_assignment(&matrix)?;
    let mut out: Vec<PairCost> = solution
        .pairs
        .into_iter()
        .filter_map(|(i, j)| admissible(&costs[i * cols + j]))
        .collect();
    out.sort_by_key(|c| (c.radar_id, c.tc_id));
    Ok(out)
}
