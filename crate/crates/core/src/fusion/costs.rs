use nalgebra::{Matrix2, RowVector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{project_to_image, CameraModel, RigidTransform};
use crate::radar_track::TrackSample;
use crate::thermal_track::FaceSample;

/// Radar-derived distance from the camera and its first-order variance.
pub fn radar_distance(s: &TrackSample, t: &RigidTransform) -> (f64, f64) {
    let r = t.rotation;
    let p = t.apply([s.x, s.y, 0.0]);
    let d = p[0].hypot(p[2]);
    if d == 0.0 {
        return (0.0, f64::INFINITY);
    }
    let j = RowVector2::new(
        (p[0] * r[0][0] + p[2] * r[2][0]) / d,
        (p[0] * r[0][1] + p[2] * r[2][1]) / d,
    );
    let cov = Matrix2::new(
        s.pos_cov[0][0],
        s.pos_cov[0][1],
        s.pos_cov[1][0],
        s.pos_cov[1][1],
    );
    (d, (j * cov * j.transpose())[(0, 0)])
}

/// Horizontal image coordinate of the radar position (with a zero height
/// component) and its variance, by first-order propagation with central
/// differences. `None` when the point is behind the camera.
pub fn radar_projection(
    s: &TrackSample,
    cam: &CameraModel,
    t: &RigidTransform,
) -> Option<(f64, f64)> {
    let u_of = |x: f64, y: f64| {
        project_to_image(t.apply([x, y, 0.0]), cam)
            .ok()
            .map(|p| p.0)
    };
    let u = u_of(s.x, s.y)?;
    let h = 1e-5;
    let dux = (u_of(s.x + h, s.y)? - u_of(s.x - h, s.y)?) / (2.0 * h);
    let duy = (u_of(s.x, s.y + h)? - u_of(s.x, s.y - h)?) / (2.0 * h);
    let j = RowVector2::new(dux, duy);
    let cov = Matrix2::new(
        s.pos_cov[0][0],
        s.pos_cov[0][1],
        s.pos_cov[1][0],
        s.pos_cov[1][1],
    );
    Some((u, (j * cov * j.transpose())[(0, 0)]))
}

/// Index pairs `(radar, face)` of samples sharing a frame. Both histories must
/// be sorted by frame.
pub fn common_frames(radar: &[TrackSample], face: &[FaceSample]) -> Vec<(usize, usize)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < radar.len() && j < face.len() {
        match radar[i].frame.cmp(&face[j].frame) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((i, j));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// `(1/K) sum (a - b)^2 / (var_a + var_b)` over `(a, var_a, b, var_b)` terms.
pub fn normalized_sq_mean(terms: &[(f64, f64, f64, f64)]) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::NoOverlap);
    }
    let sum: f64 = terms
        .iter()
        .map(|&(a, va, b, vb)| (a - b).powi(2) / (va + vb))
        .sum();
    Ok(sum / terms.len() as f64)
}

/// A cost value and the number of frames it was averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTerm {
    pub value: f64,
    pub frames: usize,
}

/// Distance agreement between a radar track and a face track.
pub fn cost_distance(
    radar: &[TrackSample],
    face: &[FaceSample],
    t: &RigidTransform,
) -> Result<CostTerm> {
    let terms: Vec<_> = common_frames(radar, face)
        .into_iter()
        .map(|(i, j)| {
            let (d, var) = radar_distance(&radar[i], t);
            (d, var, face[j].d, face[j].var_d)
        })
        .collect();
    Ok(CostTerm {
        value: normalized_sq_mean(&terms)?,
        frames: terms.len(),
    })
}

/// Horizontal image-coordinate agreement. Frames where the radar position is
/// behind the camera are skipped.
pub fn cost_horizontal(
    radar: &[TrackSample],
    face: &[FaceSample],
    cam: &CameraModel,
    t: &RigidTransform,
) -> Result<CostTerm> {
    let common = common_frames(radar, face);
    if common.is_empty() {
        return Err(Error::NoOverlap);
    }
    let terms: Vec<_> = common
        .into_iter()
        .filter_map(|(i, j)| {
            radar_projection(&radar[i], cam, t).map(|(u, var)| (u, var, face[j].xc, face[j].var_x))
        })
        .collect();
    Ok(CostTerm {
        value: normalized_sq_mean(&terms)?,
        frames: terms.len(),
    })
}

/// `1 / ln(K * dt)`, favoring long overlaps.
pub fn track_length_weight(k: usize, dt: f64) -> Result<f64> {
    let duration = k as f64 * dt;
    if !(duration > 1.0) {
        return Err(Error::InvalidOverlap { duration });
    }
    Ok(1.0 / duration.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radar(frame: u64, x: f64, y: f64, var: f64) -> TrackSample {
        TrackSample {
            frame,
            x,
            y,
            vx: 0.0,
            vy: 0.0,
            pos_cov: [[var, 0.0], [0.0, var]],
            observed: true,
        }
    }

    fn face(frame: u64, xc: f64, var_x: f64, d: f64, var_d: f64) -> FaceSample {
        FaceSample {
            frame,
            xc,
            yc: 200.0,
            h: 50.0,
            d,
            var_x,
            var_d,
            observed: true,
        }
    }

    #[test]
    fn identical_distances_cost_nothing() {
        let t = RigidTransform::colocated();
        let r: Vec<_> = (0..10)
            .map(|k| radar(k, 0.0, 2.0 + 0.1 * k as f64, 0.01))
            .collect();
        let f: Vec<_> = (0..10)
            .map(|k| face(k, 320.0, 1.0, 2.0 + 0.1 * k as f64, 0.05))
            .collect();
        assert!(cost_distance(&r, &f, &t).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn unit_distance_cost() {
        // Straight ahead the radar distance variance is the y variance.
        let t = RigidTransform::colocated();
        for k_frames in [1u64, 7, 30] {
            let r: Vec<_> = (0..k_frames).map(|k| radar(k, 0.0, 2.0, 0.5)).collect();
            let f: Vec<_> = (0..k_frames)
                .map(|k| face(k, 320.0, 1.0, 3.0, 0.5))
                .collect();
            let c = cost_distance(&r, &f, &t).unwrap();
            assert!((c.value - 1.0).abs() < 1e-12);
            assert_eq!(c.frames, k_frames as usize);
        }
    }

    #[test]
    fn no_overlap() {
        let t = RigidTransform::colocated();
        let r = vec![radar(0, 0.0, 2.0, 0.1)];
        let f = vec![face(5, 320.0, 1.0, 2.0, 0.1)];
        assert!(matches!(cost_distance(&r, &f, &t), Err(Error::NoOverlap)));
        assert!(matches!(
            cost_horizontal(&r, &f, &CameraModel::default(), &t),
            Err(Error::NoOverlap)
        ));
    }

    #[test]
    fn coincident_projection_costs_nothing() {
        let t = RigidTransform::colocated();
        let cam = CameraModel::default();
        let r: Vec<_> = (0..5).map(|k| radar(k, 0.5, 2.5, 0.01)).collect();
        let u = 320.0 + 470.0 * 0.5 / 2.5;
        let f: Vec<_> = (0..5).map(|k| face(k, u, 1.0, 2.5, 0.1)).collect();
        assert!(cost_horizontal(&r, &f, &cam, &t).unwrap().value < 1e-12);
    }

    #[test]
    fn ten_pixel_offset() {
        // sigma^2 = 50 on each side: radar variance (470/2)^2 * var_x = 50.
        let t = RigidTransform::colocated();
        let cam = CameraModel::default();
        let var = 50.0 / (470.0f64 / 2.0).powi(2);
        let r: Vec<_> = (0..8).map(|k| radar(k, 0.0, 2.0, var)).collect();
        let f: Vec<_> = (0..8).map(|k| face(k, 330.0, 50.0, 2.0, 0.1)).collect();
        let c = cost_horizontal(&r, &f, &cam, &t).unwrap();
        assert!((c.value - 1.0).abs() < 1e-6, "{}", c.value);
    }

    #[test]
    fn behind_camera_frames_are_skipped() {
        let t = RigidTransform::colocated();
        let cam = CameraModel::default();
        let r = vec![radar(0, 0.0, -2.0, 0.01), radar(1, 0.0, 2.0, 0.01)];
        let f = vec![face(0, 320.0, 1.0, 2.0, 0.1), face(1, 320.0, 1.0, 2.0, 0.1)];
        assert_eq!(cost_horizontal(&r, &f, &cam, &t).unwrap().frames, 1);
        assert!(matches!(
            cost_horizontal(&r[..1], &f[..1], &cam, &t),
            Err(Error::NoOverlap)
        ));
    }

    #[test]
    fn length_weight_values() {
        assert!((track_length_weight(150, 0.1).unwrap() - 1.0 / 15f64.ln()).abs() < 1e-12);
        assert!((track_length_weight(150, 0.1).unwrap() - 0.3693).abs() < 1e-4);
        assert!((track_length_weight(41, 1.0 / 15.0).unwrap() - 0.9945).abs() < 1e-4);
        assert!(matches!(
            track_length_weight(10, 0.1),
            Err(Error::InvalidOverlap { .. })
        ));
    }

    #[test]
    fn distance_variance_matches_differences() {
        let t = RigidTransform::mounted_at([0.3, -0.2, 0.5]);
        let s = radar(0, 1.2, 2.7, 0.0);
        let d_of = |x: f64, y: f64| radar_distance(&radar(0, x, y, 0.0), &t).0;
        let h = 1e-6;
        let jx = (d_of(1.2 + h, 2.7) - d_of(1.2 - h, 2.7)) / (2.0 * h);
        let jy = (d_of(1.2, 2.7 + h) - d_of(1.2, 2.7 - h)) / (2.0 * h);
        let with_cov = TrackSample {
            pos_cov: [[0.04, 0.01], [0.01, 0.09]],
            ..s
        };
        let expect = jx * jx * 0.04 + 2.0 * jx * jy * 0.01 + jy * jy * 0.09;
        assert!((radar_distance(&with_cov, &t).1 - expect).abs() < 1e-8);
    }

    #[test]
    fn scaling_variances_scales_cost() {
        let terms = [(1.0, 0.2, 2.0, 0.3), (0.0, 0.1, 0.5, 0.1)];
        let base = normalized_sq_mean(&terms).unwrap();
        let scaled: Vec<_> = terms
            .iter()
            .map(|&(a, va, b, vb)| (a, 4.0 * va, b, 4.0 * vb))
            .collect();
        assert!((normalized_sq_mean(&scaled).unwrap() - base / 4.0).abs() < 1e-12);
    }
}
