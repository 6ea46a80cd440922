//! System-wide tuning parameters.
//!
//! Every section has a `Default` holding the reference operating point
//! (15 Hz frames, DBSCAN `eps = 0.4 m` / `min_pts = 10`, `d_th = 1.2 m`,
//! `gamma = 9.21`, WELM `L = 1024` / `lambda = 0.1`, ...). All sections
//! deserialize with missing fields falling back to those defaults, so scenario
//! files only need to spell out what they change.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the configured bounding-box height process noise value is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseReading {
    /// The value is a standard deviation; the variance is its square.
    #[default]
    StandardDeviation,
    /// The value is already a variance.
    Variance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThermalConfig {
    /// Observation noise variance of the face-center coordinates, px^2.
    pub r_center_var: f64,
    /// Observation noise variance of the bounding-box height, px^2.
    pub r_height_var: f64,
    /// Process noise variance of the horizontal image acceleration, (px/s^2)^2.
    pub q_x_var: f64,
    /// Process noise variance of the vertical image acceleration, (px/s^2)^2.
    pub q_y_var: f64,
    /// Height process noise, interpreted according to `q_h_reading`.
    pub q_h: f64,
    pub q_h_reading: NoiseReading,
    /// Process noise variance of the distance acceleration, (m/s^2)^2.
    pub q_d_var: f64,
    /// Squared Mahalanobis gate on the face-center innovation.
    pub gate: f64,
    /// Initial face-center variance, px^2.
    pub init_position_var: f64,
    /// Initial face-center velocity variance, (px/s)^2.
    pub init_velocity_var: f64,
    /// Initial distance variance, m^2.
    pub init_distance_var: f64,
    /// Initial distance-rate variance, (m/s)^2.
    pub init_distance_rate_var: f64,
    /// Operating distance range of the height model, meters.
    pub min_distance: f64,
    pub max_distance: f64,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        Self {
            r_center_var: 0.01,
            r_height_var: 20.0,
            q_x_var: 2.5e4,
            q_y_var: 2.5e4,
            q_h: 5.148,
            q_h_reading: NoiseReading::StandardDeviation,
            q_d_var: 5.0,
            gate: 9.21,
            init_position_var: 100.0,
            init_velocity_var: 1.0e4,
            init_distance_var: 1.0,
            init_distance_rate_var: 1.0,
            min_distance: 0.5,
            max_distance: 5.0,
        }
    }
}

impl ThermalConfig {
    pub fn q_h_var(&self) -> f64 {
        match self.q_h_reading {
            NoiseReading::StandardDeviation => self.q_h * self.q_h,
            NoiseReading::Variance => self.q_h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusteringConfig {
    pub eps: f64,
    pub min_pts: usize,
    /// Critical distance between predicted tracks that triggers refinement.
    pub d_th: f64,
    /// Squared Mahalanobis radius of the shape region around a track.
    pub gamma: f64,
    /// Mixture components lighter than `pi_thr_scale / n_group` become noise.
    pub pi_thr_scale: f64,
    /// Run the mixture refinement on top of DBSCAN.
    pub refine: bool,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            eps: 0.4,
            min_pts: 10,
            d_th: 1.2,
            gamma: 9.21,
            pi_thr_scale: 0.1,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadarTrackConfig {
    /// White-acceleration standard deviation of the CV model, m/s^2.
    pub sigma_accel: f64,
    /// Isotropic centroid observation noise standard deviation, m.
    pub sigma_obs: f64,
    /// Squared Mahalanobis gate on the centroid innovation.
    pub gate: f64,
    pub init_velocity_var: f64,
    /// Unassigned clusters closer than this to a confirmed track spawn nothing, m.
    pub birth_exclusion: f64,
    /// A confirmed track closer than this to an older confirmed track for
    /// `merge_frames` consecutive frames is dropped as a duplicate, m.
    pub merge_distance: f64,
    pub merge_frames: u32,
}

impl Default for RadarTrackConfig {
    fn default() -> Self {
        Self {
            sigma_accel: 1.0,
            sigma_obs: 0.1,
            gate: 9.21,
            init_velocity_var: 1.0,
            birth_exclusion: 0.5,
            merge_distance: 0.35,
            merge_frames: 8,
        }
    }
}

/// Birth, confirmation and deletion policy shared by both trackers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackPolicy {
    pub confirm_hits: u32,
    pub max_misses: u32,
}

impl Default for TrackPolicy {
    fn default() -> Self {
        Self {
            confirm_hits: 3,
            max_misses: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Minimum overlap, seconds, before a radar/thermal pair may be associated.
    pub min_overlap_s: f64,
    /// Associations whose final cost exceeds this are dropped.
    pub accept_threshold: f64,
    pub use_distance_cost: bool,
    pub use_horizontal_cost: bool,
    pub use_length_weight: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            min_overlap_s: 2.0,
            accept_threshold: 5.0,
            use_distance_cost: true,
            use_horizontal_cost: true,
            use_length_weight: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReidConfig {
    /// Frames per gait window.
    pub window_frames: usize,
    /// A feature vector is extracted every `feature_stride` frames.
    pub feature_stride: usize,
    pub hidden_units: usize,
    pub lambda: f64,
    /// Standard deviation of the random hidden weights and biases.
    pub weight_std: f64,
    /// Cumulative scoring window, seconds.
    pub window_seconds: f64,
}

impl Default for ReidConfig {
    fn default() -> Self {
        Self {
            window_frames: 45,
            feature_stride: 5,
            hidden_units: 1024,
            lambda: 0.1,
            weight_std: 0.1,
            window_seconds: 20.0,
        }
    }
}

/// Hyperbola `g(d) = b0 / (d + b1) + b2` coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GCoefficients {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

impl Default for GCoefficients {
    fn default() -> Self {
        Self {
            b0: 162.04,
            b1: 0.61,
            b2: -14.79,
        }
    }
}

/// Linear temperature scale `alpha(d) = a0 + a1 d` coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaCoefficients {
    pub a0: f64,
    pub a1: f64,
}

impl Default for AlphaCoefficients {
    fn default() -> Self {
        Self {
            a0: 1.116,
            a1: 0.013,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    /// Frame period, seconds.
    pub frame_period: f64,
    pub thermal: ThermalConfig,
    pub clustering: ClusteringConfig,
    pub radar: RadarTrackConfig,
    pub policy: TrackPolicy,
    pub fusion: FusionConfig,
    pub reid: ReidConfig,
    pub g: GCoefficients,
    pub alpha: AlphaCoefficients,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            frame_period: 1.0 / 15.0,
            thermal: ThermalConfig::default(),
            clustering: ClusteringConfig::default(),
            radar: RadarTrackConfig::default(),
            policy: TrackPolicy::default(),
            fusion: FusionConfig::default(),
            reid: ReidConfig::default(),
            g: GCoefficients::default(),
            alpha: AlphaCoefficients::default(),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        }
        positive("frame_period", self.frame_period)?;
        let t = &self.thermal;
        positive("thermal.r_center_var", t.r_center_var)?;
        positive("thermal.r_height_var", t.r_height_var)?;
        positive("thermal.q_x_var", t.q_x_var)?;
        positive("thermal.q_y_var", t.q_y_var)?;
        positive("thermal.q_h", t.q_h)?;
        positive("thermal.q_d_var", t.q_d_var)?;
        positive("clustering.eps", self.clustering.eps)?;
        if self.clustering.min_pts < 1 {
            return Err(Error::InvalidConfig(
                "clustering.min_pts must be >= 1".into(),
            ));
        }
        positive("clustering.d_th", self.clustering.d_th)?;
        positive("clustering.gamma", self.clustering.gamma)?;
        positive("radar.sigma_accel", self.radar.sigma_accel)?;
        positive("radar.sigma_obs", self.radar.sigma_obs)?;
        positive("reid.lambda", self.reid.lambda)?;
        if self.reid.window_frames == 0
            || self.reid.feature_stride == 0
            || self.reid.hidden_units == 0
        {
            return Err(Error::InvalidConfig(
                "reid window, stride and hidden units must be >= 1".into(),
            ));
        }
        if self.g.b0 == 0.0 {
            return Err(Error::InvalidConfig("g.b0 must be nonzero".into()));
        }
        Ok(())
    }
}
