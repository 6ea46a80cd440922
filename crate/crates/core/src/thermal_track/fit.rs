//! Least-squares fit of the height-distance hyperbola with Levenberg-Marquardt.
//!
//! The start point comes from a scan over `b1`: for fixed `b1` the model is
//! linear in `(b0, b2)`, so each candidate is solved exactly and the best one
//! seeds the damped Gauss-Newton iterations.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use super::model::GModel;
use crate::config::GCoefficients;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const INITIAL_DAMPING: f64 = 1e-3;

/// Fits `h = b0 / (d + b1) + b2` to `(d, h)` samples.
pub fn fit_g(samples: &[(f64, f64)]) -> Result<GModel> {
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if samples.len() < 3 || distinct.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: samples.len().min(distinct.len()),
        });
    }
    if samples
        .iter()
        .any(|(d, h)| !d.is_finite() || !h.is_finite())
    {
        return Err(Error::InvalidConfig("non-finite fit sample".into()));
    }

    let d_min = distinct[0];
    let mut b = initial_guess(samples, d_min);
    let mut cost = sse(samples, &b);
    let mut damping = INITIAL_DAMPING;

    for _ in 0..MAX_ITERATIONS {
        let (jtj, jtr) = normal_equations(samples, &b);
        if jtr.amax() <= 1e-14 * (1.0 + cost) {
            return Ok(finish(samples, b));
        }
        let mut accepted = false;
        while damping < 1e16 {
            let mut a = jtj;
            for i in 0..3 {
                a[(i, i)] += damping * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&jtr)) else {
                damping *= 10.0;
                continue;
            };
            let cand = b + step;
            if d_min + cand[1] > 0.0 {
                let c = sse(samples, &cand);
                if c <= cost {
                    let converged =
                        step.norm() <= 1e-13 * (b.norm() + 1e-13) || cost - c <= 1e-15 * cost;
                    b = cand;
                    cost = c;
                    damping = (damping / 10.0).max(1e-15);
                    accepted = true;
                    if converged {
                        return Ok(finish(samples, b));
                    }
                    break;
                }
            }
            damping *= 10.0;
        }
        if !accepted {
            // No downhill step at any damping: a minimum to working precision.
            return Ok(finish(samples, b));
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
    })
}

fn finish(samples: &[(f64, f64)], b: Vector3<f64>) -> GModel {
    GModel {
        coefficients: GCoefficients {
            b0: b[0],
            b1: b[1],
            b2: b[2],
        },
        residual_var: sse(samples, &b) / samples.len() as f64,
    }
}

fn sse(samples: &[(f64, f64)], b: &Vector3<f64>) -> f64 {
    samples
        .iter()
        .map(|&(d, h)| (h - b[0] / (d + b[1]) - b[2]).powi(2))
        .sum()
}

/// `J'J` and `J'r` with `r = h - g(d)` and `J = dg/db`.
fn normal_equations(samples: &[(f64, f64)], b: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    for &(d, h) in samples {
        let inv = 1.0 / (d + b[1]);
        let j = Vector3::new(inv, -b[0] * inv * inv, 1.0);
        let r = h - b[0] * inv - b[2];
        jtj += j * j.transpose();
        jtr += j * r;
    }
    (jtj, jtr)
}

/// Best `(b0, b1, b2)` over a geometric grid of `b1` with `(b0, b2)` solved
/// linearly for each candidate.
fn initial_guess(samples: &[(f64, f64)], d_min: f64) -> Vector3<f64> {
    let lo = -d_min + 1e-3;
    let mut best = (f64::INFINITY, Vector3::new(1.0, 1.0, 0.0));
    for i in 0..400 {
        let b1 = lo + 1e-3 * (1e4f64).powf(i as f64 / 399.0) - 1e-3;
        let mut m = Matrix2::zeros();
        let mut v = Vector2::zeros();
        for &(d, h) in samples {
            let x = Vector2::new(1.0 / (d + b1), 1.0);
            m += x * x.transpose();
            v += x * h;
        }
        if let Some(sol) = m.try_inverse().map(|inv| inv * v) {
            let b = Vector3::new(sol[0], b1, sol[1]);
            let c = sse(samples, &b);
            if c < best.0 {
                best = (c, b);
            }
        }
    }
    best.1
}
