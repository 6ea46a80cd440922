use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};

use super::scenario::{GaitSignature, RadarNoise};
use super::trajectory::SubjectState;
use crate::geometry::RadarPoint;

/// One subject as seen by the point-cloud synthesizer.
#[derive(Debug, Clone, Copy)]
pub struct BodyInput<'a> {
    pub state: SubjectState,
    pub gait: &'a GaitSignature,
    /// Stride phase offset, radians.
    pub phase: f64,
}

/// Points of one frame with the index of the subject that produced each of
/// them (`None` for clutter).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthCloud {
    pub points: Vec<RadarPoint>,
    pub owners: Vec<Option<usize>>,
}

/// Whether a floor position is inside the radar field of view.
pub fn radar_visible(x: f64, y: f64, noise: &RadarNoise) -> bool {
    y > 0.0 && x.hypot(y) <= noise.max_range && x.atan2(y).abs() <= 0.5 * noise.fov_deg.to_radians()
}

// Limb points live below this height (meters above the floor); the torso
// occupies the band from here to the torso height.
const LIMB_TOP: f64 = 0.9;

/// Synthesizes the point cloud at time `t`: a statistical body model per
/// visible subject plus uniform clutter. Velocities are the horizontal radial
/// projection of the subject velocity; limb points add a sinusoidal term at
/// the stride frequency, scaled down for slow subjects. With `modulate` off
/// the limb term is dropped.
pub fn synthesize_point_cloud<R: Rng>(
    t: f64,
    bodies: &[BodyInput<'_>],
    noise: &RadarNoise,
    modulate: bool,
    rng: &mut R,
) -> SynthCloud {
    let mut cloud = SynthCloud::default();
    let vel_noise = Normal::new(0.0, noise.velocity_noise.max(0.0)).expect("finite std");
    for (owner, b) in bodies.iter().enumerate() {
        let s = b.state;
        if !radar_visible(s.x, s.y, noise) {
            continue;
        }
        let g = b.gait;
        let speed = s.speed();
        // Body axes: along the walking direction, or facing the sensor.
        let heading = if speed > 0.1 {
            s.vy.atan2(s.vx)
        } else {
            (-s.y).atan2(-s.x)
        };
        let (ca, sa) = (heading.cos(), heading.sin());
        let range = s.x.hypot(s.y).max(1e-6);
        let (ux, uy) = (s.x / range, s.y / range);
        let radial = s.vx * ux + s.vy * uy;
        let swing = if modulate {
            g.modulation * (speed / 0.5).min(1.0)
        } else {
            0.0
        };
        let stride = (2.0 * PI * t / g.stride_period + b.phase).sin();
        let n = rng.random_range(noise.points_min..=noise.points_max);
        for _ in 0..n {
            let limb = rng.random::<f64>() < g.limb_fraction;
            let along: f64 = rng.sample::<f64, _>(StandardNormal)
                * g.spread_along
                * if limb { 1.5 } else { 1.0 };
            let across: f64 = rng.sample::<f64, _>(StandardNormal) * g.spread_across;
            let x = s.x + along * ca - across * sa;
            let y = s.y + along * sa + across * ca;
            let z_abs = if limb {
                rng.random_range(0.05..LIMB_TOP)
            } else {
                rng.random_range(LIMB_TOP..g.torso_height.max(LIMB_TOP + 0.05))
            };
            let mut v = radial + vel_noise.sample(rng);
            if limb {
                v += swing * stride;
            }
            let r = x.hypot(y).max(0.1);
            let p_rx = (1.0 + 0.2 * rng.sample::<f64, _>(StandardNormal)).abs() / (r * r);
            cloud.points.push(RadarPoint {
                x,
                y,
                z: z_abs - noise.mount_height,
                v,
                p_rx,
            });
            cloud.owners.push(Some(owner));
        }
    }
    if noise.clutter_rate > 0.0 {
        let count = Poisson::new(noise.clutter_rate)
            .expect("positive rate")
            .sample(rng) as usize;
        let [x0, x1, y0, y1] = noise.room;
        for _ in 0..count {
            let (x, y) = (rng.random_range(x0..x1), rng.random_range(y0..y1));
            let r = x.hypot(y).max(0.1);
            cloud.points.push(RadarPoint {
                x,
                y,
                z: rng.random_range(-noise.mount_height..0.5),
                v: rng.random_range(-0.5..0.5),
                p_rx: 0.3 * rng.random::<f64>() / (r * r),
            });
            cloud.owners.push(None);
        }
    }
    cloud
}
