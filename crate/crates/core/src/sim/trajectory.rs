use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::scenario::SubjectScript;
use crate::error::Result;

/// True kinematic state of a subject at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl SubjectState {
    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

// Natural frequency of the jitter offset (rad/s); critically damped so the
// subject stays near the scripted path.
const JITTER_OMEGA: f64 = 1.5;

/// Scripted position and velocity at time `t`. Before the first and after the
/// last waypoint the subject stands still.
pub fn scripted_state(script: &SubjectScript, t: f64) -> SubjectState {
    let w = &script.waypoints;
    let first = w[0];
    if w.len() == 1 || t <= first.t {
        return SubjectState {
            x: first.x,
            y: first.y,
            vx: 0.0,
            vy: 0.0,
        };
    }
    let last = w[w.len() - 1];
    if t >= last.t {
        return SubjectState {
            x: last.x,
            y: last.y,
            vx: 0.0,
            vy: 0.0,
        };
    }
    let i = w.partition_point(|p| p.t <= t) - 1;
    let (a, b) = (w[i], w[i + 1]);
    let span = b.t - a.t;
    let (vx, vy) = ((b.x - a.x) / span, (b.y - a.y) / span);
    SubjectState {
        x: a.x + vx * (t - a.t),
        y: a.y + vy * (t - a.t),
        vx,
        vy,
    }
}

/// Per-frame states over `frames` frames of period `dt`: the scripted
/// piecewise constant-speed path plus a mean-reverting offset driven by
/// Gaussian acceleration noise of standard deviation `jitter`.
pub fn generate_trajectory<R: Rng>(
    script: &SubjectScript,
    dt: f64,
    frames: u64,
    jitter: f64,
    rng: &mut R,
) -> Result<Vec<SubjectState>> {
    script.validate()?;
    let (mut ox, mut oy, mut ovx, mut ovy) = (0.0, 0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(frames as usize);
    for k in 0..frames {
        let s = scripted_state(script, k as f64 * dt);
        out.push(SubjectState {
            x: s.x + ox,
            y: s.y + oy,
            vx: s.vx + ovx,
            vy: s.vy + ovy,
        });
        if jitter > 0.0 {
            let ax: f64 = jitter * rng.sample::<f64, _>(StandardNormal)
                - JITTER_OMEGA * JITTER_OMEGA * ox
                - 2.0 * JITTER_OMEGA * ovx;
            let ay: f64 = jitter * rng.sample::<f64, _>(StandardNormal)
                - JITTER_OMEGA * JITTER_OMEGA * oy
                - 2.0 * JITTER_OMEGA * ovy;
            ovx += ax * dt;
            ovy += ay * dt;
            ox += ovx * dt;
            oy += ovy * dt;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::sim::scenario::{GaitSignature, Waypoint};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn script(points: &[(f64, f64, f64)]) -> SubjectScript {
        SubjectScript {
            id: 0,
            waypoints: points
                .iter()
                .map(|&(x, y, t)| Waypoint { x, y, t })
                .collect(),
            temperature: 36.6,
            gait: GaitSignature::default(),
            head_height: 1.65,
            present: None,
        }
    }

    #[test]
    fn constant_velocity_interpolation() {
        let s = script(&[(0.0, 0.0, 0.0), (3.0, 0.0, 3.0)]);
        let tr = generate_trajectory(&s, 1.0, 4, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let xs: Vec<f64> = tr.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0]);
        assert!(tr.iter().all(|p| p.y == 0.0));
        assert_eq!(tr[1].vx, 1.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let s = script(&[(0.0, 1.0, 0.0), (2.0, 4.0, 5.0)]);
        let a = generate_trajectory(&s, 0.1, 60, 0.5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = generate_trajectory(&s, 0.1, 60, 0.5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let c = generate_trajectory(&s, 0.1, 60, 0.5, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn single_waypoint_is_stationary() {
        let s = script(&[(1.0, 2.0, 0.0)]);
        let tr = generate_trajectory(&s, 0.1, 20, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(tr
            .iter()
            .all(|p| p.x == 1.0 && p.y == 2.0 && p.speed() == 0.0));
    }

    #[test]
    fn waypoints_reached_without_jitter() {
        let s = script(&[(0.0, 1.0, 0.0), (2.0, 3.0, 2.0), (-1.0, 3.5, 5.0)]);
        let dt = 1.0 / 15.0;
        let tr = generate_trajectory(&s, dt, 90, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for w in &s.waypoints {
            let p = tr[(w.t / dt).round() as usize];
            assert!((p.x - w.x).hypot(p.y - w.y) < 0.1);
        }
    }

    #[test]
    fn jitter_stays_bounded() {
        let s = script(&[(0.0, 3.0, 0.0)]);
        let tr = generate_trajectory(&s, 1.0 / 15.0, 3000, 0.5, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        assert!(tr.iter().all(|p| p.x.hypot(p.y - 3.0) < 0.5));
    }

    #[test]
    fn non_monotone_times() {
        let s = script(&[(0.0, 0.0, 0.0), (1.0, 0.0, 2.0), (2.0, 0.0, 2.0)]);
        let r = generate_trajectory(&s, 0.1, 5, 0.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::NonMonotoneWaypoints { index: 2 })));
    }
}
