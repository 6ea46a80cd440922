//! Handcrafted gait descriptor over a window of one track's point clouds.
//!
//! Each component is a window statistic shifted by a typical value and divided
//! by a typical spread, so the unit vector points in a direction that depends
//! on how the subject departs from an average walker:
//!
//! | idx | statistic |
//! |-----|-----------|
//! | 0-1 | mean and std over frames of the per-frame velocity spread |
//! | 2-3 | dominant frequency and peak autocorrelation of the mean velocity |
//! | 4   | oscillation amplitude of the detrended mean velocity |
//! | 5   | mean per-frame peak deviation from the mean velocity |
//! | 6-7 | mean and std of the vertical extent |
//! | 8   | mean height of the points |
//! | 9-10| mean and std of the point count |
//! | 11-12 | speed from a line fit over the window, and its spread over sub-windows |
//! | 13-14 | major and minor horizontal spread |
//! | 15  | dominant frequency of the velocity spread |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radar_track::ClusterSnapshot;

pub const FEATURE_DIM: usize = 16;

const REFERENCE: [f64; FEATURE_DIM] = [
    0.35, 0.12, 0.9, 0.5, 0.25, 0.8, 1.2, 0.12, 0.3, 50.0, 10.0, 0.8, 0.15, 0.18, 0.12, 1.8,
];
const SCALE: [f64; FEATURE_DIM] = [
    0.15, 0.06, 0.3, 0.3, 0.12, 0.3, 0.25, 0.06, 0.2, 20.0, 5.0, 0.4, 0.1, 0.05, 0.04, 0.6,
];

/// Unit-norm gait feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitFeature {
    pub vector: Vec<f64>,
    pub track_id: u64,
    /// Frame index at the end of the window.
    pub frame: u64,
}

impl GaitFeature {
    /// L2-normalizes `raw`.
    pub fn from_raw(raw: Vec<f64>, track_id: u64, frame: u64) -> Result<Self> {
        if raw.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                got: raw.len(),
            });
        }
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::IncompleteWindow(
                "feature vector has zero or non-finite norm".into(),
            ));
        }
        Ok(Self {
            vector: raw.into_iter().map(|x| x / norm).collect(),
            track_id,
            frame,
        })
    }
}

/// Extracts one feature from exactly `window_frames` consecutive snapshots,
/// each holding at least one point.
pub fn extract_features(
    window: &[ClusterSnapshot],
    window_frames: usize,
    frame_period: f64,
    track_id: u64,
) -> Result<GaitFeature> {
    if window.len() != window_frames || window_frames < 8 {
        return Err(Error::IncompleteWindow(format!(
            "{} of {} frames",
            window.len(),
            window_frames
        )));
    }
    if let Some(s) = window.iter().find(|s| s.points.is_empty()) {
        return Err(Error::IncompleteWindow(format!(
            "frame {} has no points",
            s.frame
        )));
    }
    if window.windows(2).any(|w| w[1].frame != w[0].frame + 1) {
        return Err(Error::IncompleteWindow("frames are not consecutive".into()));
    }

    let n = window.len();
    let mut mean_v = Vec::with_capacity(n);
    let mut std_v = Vec::with_capacity(n);
    let mut peak = Vec::with_capacity(n);
    let mut extent = Vec::with_capacity(n);
    let mut height = Vec::with_capacity(n);
    let mut count = Vec::with_capacity(n);
    let mut cx = Vec::with_capacity(n);
    let mut cy = Vec::with_capacity(n);
    let mut major = Vec::with_capacity(n);
    let mut minor = Vec::with_capacity(n);
    for s in window {
        let p = &s.points;
        let v: Vec<f64> = p.iter().map(|q| q.v).collect();
        let (m, sd) = mean_std(&v);
        mean_v.push(m);
        std_v.push(sd);
        peak.push(v.iter().map(|x| (x - m).abs()).fold(0.0, f64::max));
        let zmax = p.iter().map(|q| q.z).fold(f64::NEG_INFINITY, f64::max);
        let zmin = p.iter().map(|q| q.z).fold(f64::INFINITY, f64::min);
        extent.push(zmax - zmin);
        height.push(mean_std(&p.iter().map(|q| q.z).collect::<Vec<_>>()).0);
        count.push(p.len() as f64);
        let (mx, _) = mean_std(&p.iter().map(|q| q.x).collect::<Vec<_>>());
        let (my, _) = mean_std(&p.iter().map(|q| q.y).collect::<Vec<_>>());
        cx.push(mx);
        cy.push(my);
        let (sxx, syy, sxy) = p.iter().fold((0.0, 0.0, 0.0), |a, q| {
            let (dx, dy) = (q.x - mx, q.y - my);
            (a.0 + dx * dx, a.1 + dy * dy, a.2 + dx * dy)
        });
        let k = p.len() as f64;
        let (sxx, syy, sxy) = (sxx / k, syy / k, sxy / k);
        let tr = 0.5 * (sxx + syy);
        let disc = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
        major.push((tr + disc).max(0.0).sqrt());
        minor.push((tr - disc).max(0.0).sqrt());
    }

    let detrended = detrend(&mean_v);
    let (freq_v, peak_ac) = dominant_frequency(&detrended, frame_period);
    let amplitude = std::f64::consts::SQRT_2 * mean_std(&detrended).1;
    let (freq_s, _) = dominant_frequency(&detrend(&std_v), frame_period);

    let t: Vec<f64> = (0..n).map(|k| k as f64 * frame_period).collect();
    let speed = |from: usize, to: usize| {
        let sx = slope(&t[from..to], &cx[from..to]);
        let sy = slope(&t[from..to], &cy[from..to]);
        sx.hypot(sy)
    };
    let overall_speed = speed(0, n);
    let sub = n / 5;
    let sub_speeds: Vec<f64> = (0..5).map(|i| speed(i * sub, (i + 1) * sub)).collect();

    let stats = [
        mean_std(&std_v).0,
        mean_std(&std_v).1,
        freq_v,
        peak_ac,
        amplitude,
        mean_std(&peak).0,
        mean_std(&extent).0,
        mean_std(&extent).1,
        mean_std(&height).0,
        mean_std(&count).0,
        mean_std(&count).1,
        overall_speed,
        mean_std(&sub_speeds).1,
        mean_std(&major).0,
        mean_std(&minor).0,
        freq_s,
    ];
    let raw: Vec<f64> = (0..FEATURE_DIM)
        .map(|i| (stats[i] - REFERENCE[i]) / SCALE[i])
        .collect();
    GaitFeature::from_raw(raw, track_id, window[n - 1].frame)
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (0.0, 0.0);
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

fn slope(t: &[f64], y: &[f64]) -> f64 {
    let (mt, _) = mean_std(t);
    let (my, _) = mean_std(y);
    let num: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let den: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Removes the least-squares line.
fn detrend(y: &[f64]) -> Vec<f64> {
    let t: Vec<f64> = (0..y.len()).map(|k| k as f64).collect();
    let b = slope(&t, y);
    let (mt, _) = mean_std(&t);
    let (my, _) = mean_std(y);
    y.iter()
        .zip(&t)
        .map(|(v, k)| v - my - b * (k - mt))
        .collect()
}

/// Frequency (Hz) of the strongest autocorrelation peak with a lag between
/// 0.3 s and 2/3 of the window, refined by parabolic interpolation, and the
/// normalized autocorrelation there.
fn dominant_frequency(y: &[f64], frame_period: f64) -> (f64, f64) {
    let n = y.len();
    let r0: f64 = y.iter().map(|v| v * v).sum();
    if r0 <= 0.0 {
        return (0.0, 0.0);
    }
    let ac = |lag: usize| -> f64 {
        (0..n - lag).map(|k| y[k] * y[k + lag]).sum::<f64>() / r0 * n as f64 / (n - lag) as f64
    };
    let lo = ((0.3 / frame_period).ceil() as usize).max(2);
    let hi = (2 * n / 3).max(lo + 2);
    let values: Vec<f64> = (0..=hi + 1)
        .map(|l| if l < n { ac(l) } else { 0.0 })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for lag in lo..=hi {
        let v = values[lag];
        if v >= values[lag - 1] && v >= values[lag + 1] && best.is_none_or(|(_, b)| v > b) {
            best = Some((lag, v));
        }
    }
    let Some((lag, v)) = best else {
        return (0.0, 0.0);
    };
    let (a, b, c) = (values[lag - 1], v, values[lag + 1]);
    let denom = a - 2.0 * b + c;
    let offset = if denom.abs() > 1e-12 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    (1.0 / ((lag as f64 + offset) * frame_period), v)
}
