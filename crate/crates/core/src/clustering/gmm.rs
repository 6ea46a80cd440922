//! Full-covariance Gaussian mixture on the x-y plane, fitted by EM.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const TOLERANCE: f64 = 1e-6;
const REGULARIZATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GmFit {
    /// Maximum-responsibility component per point (lowest index on ties).
    pub labels: Vec<usize>,
    /// Mixing weights, summing to one.
    pub weights: Vec<f64>,
    pub means: Vec<[f64; 2]>,
    pub covariances: Vec<Matrix2<f64>>,
    /// `responsibilities[i][q]`, each row summing to one.
    pub responsibilities: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub iterations: usize,
}

/// EM fit with `n_components` components, initial means drawn with
/// k-means++ seeding from `seed`.
pub fn gm_fit(points: &[[f64; 2]], n_components: usize, seed: u64) -> Result<GmFit> {
    check_sizes(points, n_components)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = vec![points[rng.random_range(0..points.len())]];
    while means.len() < n_components {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                means
                    .iter()
                    .map(|m| sq_dist(p, m))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        means.push(points[next]);
    }
    gm_fit_from_means(points, &means)
}

/// EM fit with one component per initial mean.
pub fn gm_fit_from_means(points: &[[f64; 2]], init_means: &[[f64; 2]]) -> Result<GmFit> {
    let k = init_means.len();
    check_sizes(points, k)?;
    let n = points.len();

    let init_var = {
        let mean = points
            .iter()
            .fold([0.0; 2], |a, p| [a[0] + p[0], a[1] + p[1]]);
        let mean = [mean[0] / n as f64, mean[1] / n as f64];
        let var = points.iter().map(|p| sq_dist(p, &mean)).sum::<f64>() / (2.0 * n as f64);
        var.max(1e-4)
    };
    let init_cov = Matrix2::identity() * init_var;

    let mut means: Vec<[f64; 2]> = init_means.to_vec();
    let mut covs = vec![init_cov; k];
    let mut weights = vec![1.0 / k as f64; k];
    let mut resp = vec![vec![0.0; k]; n];
    let mut log_likelihood = f64::NEG_INFINITY;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let ll = e_step(points, &means, &covs, &weights, &mut resp);

        // M-step
        for q in 0..k {
            let nq: f64 = resp.iter().map(|r| r[q]).sum();
            if nq < 1e-10 {
                weights[q] = 0.0;
                covs[q] = init_cov;
                continue;
            }
            let mut m = [0.0; 2];
            for (p, r) in points.iter().zip(&resp) {
                m[0] += r[q] * p[0];
                m[1] += r[q] * p[1];
            }
            m = [m[0] / nq, m[1] / nq];
            let mut c = Matrix2::zeros();
            for (p, r) in points.iter().zip(&resp) {
                let d = Vector2::new(p[0] - m[0], p[1] - m[1]);
                c += r[q] * d * d.transpose();
            }
            covs[q] = c / nq + Matrix2::identity() * REGULARIZATION;
            means[q] = m;
            weights[q] = nq / n as f64;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);

        let improvement = ll - log_likelihood;
        log_likelihood = ll;
        if improvement.abs() < TOLERANCE {
            break;
        }
    }
    // Final responsibilities consistent with the returned parameters.
    log_likelihood = e_step(points, &means, &covs, &weights, &mut resp);

    let labels = resp
        .iter()
        .map(|r| {
            let mut best = 0;
            for q in 1..k {
                if r[q] > r[best] {
                    best = q;
                }
            }
            best
        })
        .collect();
    Ok(GmFit {
        labels,
        weights,
        means,
        covariances: covs,
        responsibilities: resp,
        log_likelihood,
        iterations,
    })
}

fn check_sizes(points: &[[f64; 2]], k: usize) -> Result<()> {
    if k == 0 || points.len() < k {
        return Err(Error::InsufficientPoints {
            points: points.len(),
            components: k,
        });
    }
    Ok(())
}

fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Fills responsibilities and returns the total log-likelihood.
fn e_step(
    points: &[[f64; 2]],
    means: &[[f64; 2]],
    covs: &[Matrix2<f64>],
    weights: &[f64],
    resp: &mut [Vec<f64>],
) -> f64 {
    let k = means.len();
    let comps: Vec<(Matrix2<f64>, f64)> = covs
        .iter()
        .map(|c| {
            let det = c.determinant().max(1e-300);
            let inv = c
                .try_inverse()
                .unwrap_or_else(|| Matrix2::identity() / REGULARIZATION);
            (inv, -0.5 * det.ln() - (2.0 * std::f64::consts::PI).ln())
        })
        .collect();
    let mut total = 0.0;
    for (p, r) in points.iter().zip(resp.iter_mut()) {
        let mut max = f64::NEG_INFINITY;
        for q in 0..k {
            let d = Vector2::new(p[0] - means[q][0], p[1] - means[q][1]);
            let maha = (d.transpose() * comps[q].0 * d)[(0, 0)];
            r[q] = if weights[q] > 0.0 {
                weights[q].ln() + comps[q].1 - 0.5 * maha
            } else {
                f64::NEG_INFINITY
            };
            max = max.max(r[q]);
        }
        let sum: f64 = r.iter().map(|v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        r.iter_mut().for_each(|v| *v = (*v - lse).exp());
        total += lse;
    }
    total
}
