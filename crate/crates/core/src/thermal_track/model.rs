use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::config::{GCoefficients, SystemConfig};
use crate::error::{Error, Result};

pub type Vector7 = SVector<f64, 7>;
pub type Matrix7 = SMatrix<f64, 7, 7>;
pub type Matrix7x4 = SMatrix<f64, 7, 4>;

/// Height-distance hyperbola with the residual variance of its fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GModel {
    pub coefficients: GCoefficients,
    /// Mean squared residual of the fit, px^2.
    pub residual_var: f64,
}

impl GModel {
    pub fn new(coefficients: GCoefficients) -> Self {
        Self {
            coefficients,
            residual_var: 0.0,
        }
    }

    pub fn eval(&self, d: f64) -> f64 {
        g_eval(&self.coefficients, d)
    }

    pub fn inverse(&self, h: f64) -> f64 {
        g_inverse(&self.coefficients, h)
    }
}

/// `b0 / (d + b1) + b2`.
pub fn g_eval(c: &GCoefficients, d: f64) -> f64 {
    c.b0 / (d + c.b1) + c.b2
}

pub fn g_derivative(c: &GCoefficients, d: f64) -> f64 {
    -c.b0 / (d + c.b1).powi(2)
}

/// Distance at which the hyperbola takes the value `h`.
pub fn g_inverse(c: &GCoefficients, h: f64) -> f64 {
    c.b0 / (h - c.b2) - c.b1
}

/// Face-track state `[xc, yc, vx, vy, h, d, vd]`: face center and its velocity
/// in pixels, bounding-box height in pixels, distance in meters and its rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceState {
    pub xc: f64,
    pub yc: f64,
    pub vx: f64,
    pub vy: f64,
    pub h: f64,
    pub d: f64,
    pub vd: f64,
}

impl FaceState {
    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            xc: a[0],
            yc: a[1],
            vx: a[2],
            vy: a[3],
            h: a[4],
            d: a[5],
            vd: a[6],
        }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut a = [0.0; 7];
        a.copy_from_slice(&s[..7]);
        Self::from_array(a)
    }

    pub fn from_vector(v: &Vector7) -> Self {
        Self::from_slice(v.as_slice())
    }

    pub fn to_array(&self) -> [f64; 7] {
        [self.xc, self.yc, self.vx, self.vy, self.h, self.d, self.vd]
    }

    pub fn to_vector(&self) -> Vector7 {
        Vector7::from(self.to_array())
    }
}

/// Transition `f(x, u)` of the face-track EKF, its Jacobians and the
/// transformed process noise `L Q L'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessModel {
    pub dt: f64,
    pub g: GCoefficients,
    /// Variances of `[u_x, u_y, u_h, u_d]`.
    pub q: [f64; 4],
}

impl ProcessModel {
    pub fn new(cfg: &SystemConfig) -> Self {
        let t = &cfg.thermal;
        Self {
            dt: cfg.frame_period,
            g: cfg.g,
            q: [t.q_x_var, t.q_y_var, t.q_h_var(), t.q_d_var],
        }
    }

    pub fn with_g(mut self, g: GCoefficients) -> Self {
        self.g = g;
        self
    }

    /// `f(x, u)` with `u = [u_x, u_y, u_h, u_d]`.
    pub fn transition(&self, x: &FaceState, u: [f64; 4]) -> FaceState {
        let dt = self.dt;
        let half = dt * dt / 2.0;
        let d_next = x.d + dt * x.vd + u[3] * half;
        FaceState {
            xc: x.xc + dt * x.vx + u[0] * half,
            yc: x.yc + dt * x.vy + u[1] * half,
            vx: x.vx + u[0] * dt,
            vy: x.vy + u[1] * dt,
            h: g_eval(&self.g, d_next) + u[2],
            d: d_next,
            vd: x.vd + u[3] * dt,
        }
    }

    /// Like [`ProcessModel::transition`] with `u = 0`, failing when the
    /// predicted distance leaves the domain of the hyperbola.
    pub fn predict_mean(&self, x: &FaceState) -> Result<FaceState> {
        let d_next = x.d + self.dt * x.vd;
        if !(d_next + self.g.b1 > 0.0) {
            return Err(Error::DistanceOutOfRange {
                value: d_next + self.g.b1,
            });
        }
        Ok(self.transition(x, [0.0; 4]))
    }

    /// `df/dx` at `u = 0`.
    pub fn state_jacobian(&self, x: &FaceState) -> Matrix7 {
        let dt = self.dt;
        let gp = g_derivative(&self.g, x.d + dt * x.vd);
        let mut f = Matrix7::zeros();
        for i in [0, 1, 2, 3, 5, 6] {
            f[(i, i)] = 1.0;
        }
        f[(0, 2)] = dt;
        f[(1, 3)] = dt;
        f[(5, 6)] = dt;
        f[(4, 5)] = gp;
        f[(4, 6)] = gp * dt;
        f
    }

    /// `df/du` at `u = 0`.
    pub fn noise_jacobian(&self, x: &FaceState) -> Matrix7x4 {
        let dt = self.dt;
        let half = dt * dt / 2.0;
        let gp = g_derivative(&self.g, x.d + dt * x.vd);
        let mut l = Matrix7x4::zeros();
        l[(0, 0)] = half;
        l[(2, 0)] = dt;
        l[(1, 1)] = half;
        l[(3, 1)] = dt;
        l[(4, 2)] = 1.0;
        l[(4, 3)] = gp * half;
        l[(5, 3)] = half;
        l[(6, 3)] = dt;
        l
    }

    pub fn transformed_process_noise(&self, x: &FaceState) -> Matrix7 {
        let l = self.noise_jacobian(x);
        let q = SMatrix::<f64, 4, 4>::from_diagonal(&SVector::<f64, 4>::from(self.q));
        let m = l * q * l.transpose();
        (m + m.transpose()) * 0.5
    }
}
