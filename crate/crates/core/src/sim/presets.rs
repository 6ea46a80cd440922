//! Ready-made scenarios used by the CLI, the tests and the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{GaitSignature, RadarNoise, Scenario, SubjectScript, Waypoint};

/// Identity of a synthetic walker: body and gait plus habitual speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub gait: GaitSignature,
    /// Preferred walking speed, m/s.
    pub speed: f64,
    pub head_height: f64,
}

const BASE_ROSTER: [(f64, f64, f64, f64, f64, f64, f64, f64); 6] = [
    // stride, torso, along, across, modulation, limbs, speed, head
    (0.95, 1.40, 0.10, 0.16, 0.55, 0.30, 0.75, 1.58),
    (1.10, 1.52, 0.13, 0.20, 0.95, 0.40, 0.95, 1.72),
    (1.30, 1.46, 0.11, 0.22, 0.70, 0.45, 0.65, 1.65),
    (1.00, 1.60, 0.14, 0.17, 1.10, 0.35, 1.10, 1.80),
    (1.45, 1.35, 0.09, 0.19, 0.45, 0.25, 0.55, 1.55),
    (1.20, 1.55, 0.12, 0.15, 0.85, 0.50, 0.85, 1.75),
];

/// `n` distinct walkers. The first six are fixed; further ones are drawn
/// from `seed`.
pub fn subject_roster(n: usize, seed: u64) -> Vec<RosterEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (stride, torso, along, across, modulation, limbs, speed, head) =
                if i < BASE_ROSTER.len() {
                    BASE_ROSTER[i]
                } else {
                    (
                        rng.random_range(0.9..1.5),
                        rng.random_range(1.3..1.65),
                        rng.random_range(0.08..0.15),
                        rng.random_range(0.14..0.23),
                        rng.random_range(0.4..1.2),
                        rng.random_range(0.25..0.5),
                        rng.random_range(0.5..1.15),
                        rng.random_range(1.5..1.85),
                    )
                };
            RosterEntry {
                gait: GaitSignature {
                    stride_period: stride,
                    torso_height: torso,
                    spread_along: along,
                    spread_across: across,
                    modulation,
                    limb_fraction: limbs,
                },
                speed,
                head_height: head,
            }
        })
        .collect()
}

/// Appends waypoints visiting `targets` in order at speeds drawn around
/// `speed`, starting from the last waypoint.
fn walk_through(w: &mut Vec<Waypoint>, targets: &[(f64, f64)], speed: f64, rng: &mut ChaCha8Rng) {
    for &(x, y) in targets {
        let last = *w.last().expect("walk starts somewhere");
        let v = speed * rng.random_range(0.85..1.15);
        let dist = (x - last.x).hypot(y - last.y).max(0.05);
        w.push(Waypoint {
            x,
            y,
            t: last.t + dist / v,
        });
    }
}

fn subject(
    id: u64,
    waypoints: Vec<Waypoint>,
    temperature: f64,
    r: &RosterEntry,
    present: Option<[f64; 2]>,
) -> SubjectScript {
    SubjectScript {
        id,
        waypoints,
        temperature,
        gait: r.gait,
        head_height: r.head_height,
        present,
    }
}

/// Three subjects entering a 4 m x 7 m room one after the other and walking
/// freely in separate lanes, 20 s long.
pub fn three_subject_scene(seed: u64) -> Scenario {
    let roster = subject_roster(3, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3a5e_0001);
    let lanes = [-1.1, 0.0, 1.1];
    let duration = 20.0;
    let subjects = (0..3)
        .map(|i| {
            let lane = lanes[i];
            let wander = |rng: &mut ChaCha8Rng| lane + rng.random_range(-0.3..0.3);
            let start = 1.5 * i as f64;
            let mut w = vec![Waypoint {
                x: wander(&mut rng),
                y: 6.5,
                t: start,
            }];
            let mut targets = Vec::new();
            for leg in 0..6 {
                let y = if leg % 2 == 0 {
                    rng.random_range(1.3..2.3)
                } else {
                    rng.random_range(4.2..5.8)
                };
                targets.push((wander(&mut rng), y));
            }
            walk_through(&mut w, &targets, roster[i].speed, &mut rng);
            subject(i as u64, w, 36.6, &roster[i], Some([start, duration]))
        })
        .collect();
    Scenario::new(duration, seed, subjects)
}

/// Two subjects that meet and then walk side by side `spacing` meters apart
/// at the same velocity, toward the sensor and back.
pub fn parallel_walk(seed: u64, spacing: f64) -> Scenario {
    let roster = subject_roster(2, 0);
    let half = 0.5 * spacing;
    // (y, t) at 0.8 m/s once side by side.
    let legs = [
        (6.0, 0.0),
        (5.2, 1.25),
        (1.8, 5.5),
        (5.8, 10.5),
        (1.8, 15.5),
    ];
    let subjects = (0..2)
        .map(|i| {
            let side = if i == 0 { -1.0 } else { 1.0 };
            // Start 1.8 m apart and converge over the first leg.
            let w: Vec<Waypoint> = legs
                .iter()
                .enumerate()
                .map(|(k, &(y, t))| Waypoint {
                    x: side * if k == 0 { 0.9 } else { half },
                    y,
                    t,
                })
                .collect();
            subject(i as u64, w, 36.6, &roster[i], None)
        })
        .collect();
    let mut s = Scenario::new(15.0, seed, subjects);
    s.jitter = 0.2;
    s
}

/// Four subjects with body temperatures in [36.5, 36.9] taking turns walking
/// within 3.5 m of the sensors.
pub fn temperature_scene(seed: u64) -> Scenario {
    let roster = subject_roster(4, 0);
    let temps = [36.5, 36.6, 36.8, 36.9];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e3b_0002);
    let subjects = (0..4)
        .map(|i| {
            let start = 7.0 * i as f64;
            let mut w = vec![Waypoint {
                x: rng.random_range(-0.6..0.6),
                y: 3.5,
                t: start,
            }];
            let targets = [
                (rng.random_range(-0.4..0.4), rng.random_range(1.0..1.4)),
                (rng.random_range(-0.5..0.5), rng.random_range(2.6..3.4)),
                (rng.random_range(-0.3..0.3), rng.random_range(1.2..1.8)),
            ];
            walk_through(&mut w, &targets, 0.7, &mut rng);
            let end = w.last().expect("non-empty").t;
            subject(i as u64, w, temps[i], &roster[i], Some([start, end]))
        })
        .collect();
    let duration = 30.0;
    let mut s = Scenario::new(duration, seed, subjects);
    s.subjects.iter_mut().for_each(|x| {
        if let Some(p) = &mut x.present {
            p[1] = p[1].min(duration);
        }
    });
    s
}

/// One walker from the roster moving freely in a 3 m x 6 m area for
/// `duration` seconds, for gait feature collection.
pub fn reid_session(entry: &RosterEntry, id: u64, duration: f64, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (id << 20) ^ 0x5eed_0003);
    let mut w = vec![Waypoint {
        x: rng.random_range(-1.2..1.2),
        y: rng.random_range(1.5..6.5),
        t: 0.0,
    }];
    while w.last().expect("non-empty").t < duration {
        let last = *w.last().expect("non-empty");
        // Legs of at least 2 m keep the walker at cruising speed.
        let target = loop {
            let p = (rng.random_range(-1.3..1.3), rng.random_range(1.2..7.0));
            if (p.0 - last.x).hypot(p.1 - last.y) > 2.0 {
                break p;
            }
        };
        walk_through(&mut w, &[target], entry.speed, &mut rng);
    }
    let mut s = Scenario::new(duration, seed, vec![subject(id, w, 36.6, entry, None)]);
    s.radar_noise = RadarNoise {
        room: [-1.5, 1.5, 0.5, 7.5],
        ..RadarNoise::default()
    };
    s
}
