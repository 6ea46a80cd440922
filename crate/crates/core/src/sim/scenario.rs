use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::{CameraModel, RigidTransform};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    /// Arrival time, seconds.
    pub t: f64,
}

/// Per-subject body and gait parameters. Stride period and modulation
/// amplitude carry most of the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaitSignature {
    /// Stride period, seconds.
    pub stride_period: f64,
    /// Height above the floor of the top of the reflecting torso, meters.
    pub torso_height: f64,
    /// Point spread along and across the walking direction, meters.
    pub spread_along: f64,
    pub spread_across: f64,
    /// Peak limb velocity modulation, m/s.
    pub modulation: f64,
    /// Fraction of points on the limbs.
    pub limb_fraction: f64,
}

impl Default for GaitSignature {
    fn default() -> Self {
        Self {
            stride_period: 1.1,
            torso_height: 1.45,
            spread_along: 0.12,
            spread_across: 0.18,
            modulation: 0.8,
            limb_fraction: 0.35,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectScript {
    pub id: u64,
    pub waypoints: Vec<Waypoint>,
    /// True body temperature, degrees Celsius.
    pub temperature: f64,
    #[serde(default)]
    pub gait: GaitSignature,
    /// Height of the face center above the floor, meters.
    #[serde(default = "default_head_height")]
    pub head_height: f64,
    /// Presence interval, seconds; the whole scenario when absent.
    #[serde(default)]
    pub present: Option<[f64; 2]>,
}

fn default_head_height() -> f64 {
    1.65
}

impl SubjectScript {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "subject {} has no waypoints",
                self.id
            )));
        }
        if let Some(index) = self.waypoints.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(Error::NonMonotoneWaypoints { index: index + 1 });
        }
        if !(34.0..=42.0).contains(&self.temperature) {
            return Err(Error::InvalidConfig(format!(
                "temperature {} outside [34, 42]",
                self.temperature
            )));
        }
        let g = &self.gait;
        if !(g.stride_period > 0.0
            && g.torso_height > 0.0
            && g.spread_along > 0.0
            && g.spread_across > 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "subject {} has a non-positive gait parameter",
                self.id
            )));
        }
        if !(0.0..=1.0).contains(&g.limb_fraction) {
            return Err(Error::InvalidConfig(
                "limb_fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn is_present(&self, t: f64) -> bool {
        self.present.is_none_or(|[a, b]| t >= a && t <= b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadarNoise {
    /// Points per subject per frame, drawn uniformly from the closed range.
    pub points_min: usize,
    pub points_max: usize,
    /// Mean number of clutter points per frame.
    pub clutter_rate: f64,
    /// Room extent `[x_min, x_max, y_min, y_max]`, meters.
    pub room: [f64; 4],
    /// Height of the sensors above the floor, meters.
    pub mount_height: f64,
    /// Total azimuth field of view, degrees.
    pub fov_deg: f64,
    pub max_range: f64,
    /// Standard deviation of the velocity measurement noise, m/s.
    pub velocity_noise: f64,
}

impl Default for RadarNoise {
    fn default() -> Self {
        Self {
            points_min: 20,
            points_max: 80,
            clutter_rate: 3.0,
            room: [-3.5, 3.5, 0.3, 7.0],
            mount_height: 1.4,
            fov_deg: 120.0,
            max_range: 8.0,
            velocity_noise: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThermalNoise {
    pub center_var: f64,
    pub height_var: f64,
    /// Standard deviation of the max-pixel sensor noise, degrees Celsius.
    pub temperature_std: f64,
    /// Probability that a visible face is not detected.
    pub drop_probability: f64,
    /// Faces farther than this (meters) are not detected.
    pub max_range: f64,
}

impl Default for ThermalNoise {
    fn default() -> Self {
        Self {
            center_var: 0.01,
            height_var: 20.0,
            temperature_std: 0.1,
            drop_probability: 0.05,
            max_range: 5.0,
        }
    }
}

/// A complete synthetic experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub duration: f64,
    pub seed: u64,
    pub subjects: Vec<SubjectScript>,
    #[serde(default)]
    pub placement: RigidTransform,
    #[serde(default)]
    pub camera: CameraModel,
    #[serde(default)]
    pub config: SystemConfig,
    #[serde(default)]
    pub radar_noise: RadarNoise,
    #[serde(default)]
    pub thermal_noise: ThermalNoise,
    /// Standard deviation of the trajectory acceleration jitter, m/s^2. Zero
    /// disables it.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
}

fn default_jitter() -> f64 {
    0.5
}

impl Scenario {
    pub fn new(duration: f64, seed: u64, subjects: Vec<SubjectScript>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            duration,
            seed,
            subjects,
            placement: RigidTransform::default(),
            camera: CameraModel::default(),
            config: SystemConfig::default(),
            radar_noise: RadarNoise::default(),
            thermal_noise: ThermalNoise::default(),
            jitter: default_jitter(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if self.subjects.is_empty() {
            return Err(Error::InvalidConfig(
                "scenario needs at least one subject".into(),
            ));
        }
        let mut ids: Vec<u64> = self.subjects.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("subject ids must be unique".into()));
        }
        for s in &self.subjects {
            s.validate()?;
        }
        let r = &self.radar_noise;
        if r.points_min > r.points_max || r.clutter_rate < 0.0 {
            return Err(Error::InvalidConfig("invalid radar noise ranges".into()));
        }
        if !(0.0..=1.0).contains(&self.thermal_noise.drop_probability) {
            return Err(Error::InvalidConfig(
                "drop_probability must lie in [0, 1]".into(),
            ));
        }
        if self.jitter < 0.0 {
            return Err(Error::InvalidConfig("jitter must be non-negative".into()));
        }
        self.placement.validate()?;
        self.camera.validate()?;
        self.config.validate()
    }

    /// Number of frames, `round(duration / frame_period)`.
    pub fn frame_count(&self) -> u64 {
        (self.duration / self.config.frame_period).round() as u64
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
