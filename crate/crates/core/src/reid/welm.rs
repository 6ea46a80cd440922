//! Weighted extreme learning machine and the cosine-similarity baseline.
//!
//! Output weights solve the class-weighted ridge problem
//! `min ||H B - Y||^2_Omega + lambda ||B||^2` with `Omega_ii = 1 / |V_n(i)|`.
//! Both closed forms are symmetric positive-definite solves:
//! - sample space, `B = H' (H H' + lambda Omega^-1)^-1 Y`, used when `|V| <= L`;
//! - feature space, `B = (lambda I + H' Omega H)^-1 H' Omega Y`, used otherwise.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Solve;
use faer::{Accum, Mat, Par, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::features::{GaitFeature, FEATURE_DIM};
use super::store::FeatureStore;
use crate::config::ReidConfig;
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Which closed form computes the output weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    /// Pick by comparing the store size with the hidden-layer width.
    Auto,
    SampleSpace,
    FeatureSpace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelmParams {
    pub hidden_units: usize,
    pub lambda: f64,
    pub weight_std: f64,
    pub seed: u64,
}

impl WelmParams {
    pub fn from_config(cfg: &ReidConfig, seed: u64) -> Self {
        Self {
            hidden_units: cfg.hidden_units,
            lambda: cfg.lambda,
            weight_std: cfg.weight_std,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WelmModel {
    /// Hidden weights, `L x D`.
    pub weights: Mat<f64>,
    /// Hidden biases, length `L`.
    pub biases: Vec<f64>,
    /// Output weights, `L x n_classes`.
    pub output: Mat<f64>,
    pub lambda: f64,
    /// Class label of each output column.
    pub classes: Vec<u64>,
    pub seed: u64,
}

fn par(exec: Execution) -> Par {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return Par::rayon(0);
    }
    let _ = exec;
    Par::Seq
}

/// Random hidden layer drawn from `N(0, weight_std^2)`.
fn hidden_layer(params: &WelmParams) -> (Mat<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, params.weight_std).expect("finite std");
    let w = Mat::from_fn(params.hidden_units, FEATURE_DIM, |_, _| {
        normal.sample(&mut rng)
    });
    let b = (0..params.hidden_units)
        .map(|_| normal.sample(&mut rng))
        .collect();
    (w, b)
}

/// `ReLU(V W' + 1 b')` for the rows of `v` (`N x D`).
fn activations(v: &Mat<f64>, w: &Mat<f64>, b: &[f64], exec: Execution) -> Mat<f64> {
    let mut h = Mat::zeros(v.nrows(), w.nrows());
    matmul(
        h.as_mut(),
        Accum::Replace,
        v.as_ref(),
        w.transpose(),
        1.0,
        par(exec),
    );
    for j in 0..h.ncols() {
        for i in 0..h.nrows() {
            h[(i, j)] = (h[(i, j)] + b[j]).max(0.0);
        }
    }
    h
}

fn feature_matrix<'a>(features: impl ExactSizeIterator<Item = &'a [f64]>) -> Mat<f64> {
    let rows: Vec<&[f64]> = features.collect();
    Mat::from_fn(rows.len(), FEATURE_DIM, |i, j| rows[i][j])
}

fn check_store(store: &FeatureStore) -> Result<Vec<u64>> {
    if store.is_empty() {
        return Err(Error::EmptyStore);
    }
    let classes = store.classes();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    if let Some((_, f)) = store
        .entries()
        .iter()
        .find(|(_, f)| f.vector.len() != FEATURE_DIM)
    {
        return Err(Error::DimensionMismatch {
            expected: FEATURE_DIM,
            got: f.vector.len(),
        });
    }
    Ok(classes)
}

/// Trains with the closed form chosen by store size.
pub fn welm_train(store: &FeatureStore, params: &WelmParams, exec: Execution) -> Result<WelmModel> {
    welm_train_with(store, params, ClosedForm::Auto, exec)
}

pub fn welm_train_with(
    store: &FeatureStore,
    params: &WelmParams,
    form: ClosedForm,
    exec: Execution,
) -> Result<WelmModel> {
    let classes = check_store(store)?;
    if !(params.lambda > 0.0) || params.hidden_units == 0 {
        return Err(Error::InvalidConfig(
            "WELM needs lambda > 0 and at least one hidden unit".into(),
        ));
    }
    let (w, b) = hidden_layer(params);
    let v = feature_matrix(store.entries().iter().map(|(_, f)| f.vector.as_slice()));
    let h = activations(&v, &w, &b, exec);
    let omega = store.sample_weights();
    let n = store.len();
    let y = Mat::from_fn(n, classes.len(), |i, c| {
        f64::from(store.entries()[i].0 == classes[c])
    });
    let form = match form {
        ClosedForm::Auto if n > params.hidden_units => ClosedForm::FeatureSpace,
        ClosedForm::Auto => ClosedForm::SampleSpace,
        f => f,
    };
    let output = match form {
        ClosedForm::SampleSpace => sample_space(&h, &omega, &y, params.lambda, exec)?,
        _ => feature_space(&h, &omega, &y, params.lambda, exec)?,
    };
    Ok(WelmModel {
        weights: w,
        biases: b,
        output,
        lambda: params.lambda,
        classes,
        seed: params.seed,
    })
}

fn sample_space(
    h: &Mat<f64>,
    omega: &[f64],
    y: &Mat<f64>,
    lambda: f64,
    exec: Execution,
) -> Result<Mat<f64>> {
    let n = h.nrows();
    let mut k = Mat::zeros(n, n);
    matmul(
        k.as_mut(),
        Accum::Replace,
        h.as_ref(),
        h.transpose(),
        1.0,
        par(exec),
    );
    for i in 0..n {
        k[(i, i)] += lambda / omega[i];
    }
    let llt = k.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
    let x = llt.solve(y);
    let mut b = Mat::zeros(h.ncols(), y.ncols());
    matmul(
        b.as_mut(),
        Accum::Replace,
        h.transpose(),
        x.as_ref(),
        1.0,
        par(exec),
    );
    Ok(b)
}

fn feature_space(
    h: &Mat<f64>,
    omega: &[f64],
    y: &Mat<f64>,
    lambda: f64,
    exec: Execution,
) -> Result<Mat<f64>> {
    let l = h.ncols();
    let hs = Mat::from_fn(h.nrows(), l, |i, j| h[(i, j)] * omega[i].sqrt());
    let ys = Mat::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)] * omega[i].sqrt());
    let mut a = Mat::zeros(l, l);
    matmul(
        a.as_mut(),
        Accum::Replace,
        hs.transpose(),
        hs.as_ref(),
        1.0,
        par(exec),
    );
    for i in 0..l {
        a[(i, i)] += lambda;
    }
    let mut rhs = Mat::zeros(l, y.ncols());
    matmul(
        rhs.as_mut(),
        Accum::Replace,
        hs.transpose(),
        ys.as_ref(),
        1.0,
        par(exec),
    );
    let llt = a.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
    Ok(llt.solve(&rhs))
}

/// Relative Frobenius gap between the output weights of the two closed forms
/// on the same hidden layer.
pub fn welm_dual_form_gap(
    store: &FeatureStore,
    hidden_units: usize,
    lambda: f64,
    weight_std: f64,
    seed: u64,
) -> Result<f64> {
    let params = WelmParams {
        hidden_units,
        lambda,
        weight_std,
        seed,
    };
    let a = welm_train_with(store, &params, ClosedForm::SampleSpace, Execution::Parallel)?.output;
    let b = welm_train_with(
        store,
        &params,
        ClosedForm::FeatureSpace,
        Execution::Parallel,
    )?
    .output;
    let diff = (&a - &b).norm_l2();
    Ok(diff / b.norm_l2().max(f64::MIN_POSITIVE))
}

impl WelmModel {
    /// Scores of a batch of vectors, one row per vector.
    fn score_rows(&self, vectors: &[&[f64]], exec: Execution) -> Result<Mat<f64>> {
        if let Some(v) = vectors.iter().find(|v| v.len() != FEATURE_DIM) {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                got: v.len(),
            });
        }
        let v = feature_matrix(vectors.iter().copied());
        let h = activations(&v, &self.weights, &self.biases, exec);
        let mut s = Mat::zeros(vectors.len(), self.classes.len());
        matmul(
            s.as_mut(),
            Accum::Replace,
            h.as_ref(),
            self.output.as_ref(),
            1.0,
            par(exec),
        );
        Ok(s)
    }
}

/// `h(v)' B`, one score per class of the roster.
pub fn welm_score(model: &WelmModel, v: &[f64]) -> Result<Vec<f64>> {
    let s = model.score_rows(&[v], Execution::Sequential)?;
    Ok((0..s.ncols()).map(|c| s[(0, c)]).collect())
}

/// Running averages `xi_j` of the score vectors: `xi_j` is the mean of the
/// first `j + 1` scores.
pub fn cumulative_scores(scores: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(scores.len());
    for (j, s) in scores.iter().enumerate() {
        let xi = match out.last() {
            None => s.clone(),
            Some(prev) => s
                .iter()
                .zip(prev)
                .map(|(a, p)| (a + j as f64 * p) / (j as f64 + 1.0))
                .collect(),
        };
        out.push(xi);
    }
    out
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Label of the track whose feature stream is `stream`: argmax of the
/// cumulative average WELM score over the whole stream.
pub fn reidentify(model: &WelmModel, stream: &[GaitFeature]) -> Result<u64> {
    if stream.is_empty() {
        return Err(Error::NoFeatures);
    }
    let rows: Vec<&[f64]> = stream.iter().map(|f| f.vector.as_slice()).collect();
    let s = model.score_rows(&rows, Execution::Sequential)?;
    let scores: Vec<Vec<f64>> = (0..s.nrows())
        .map(|i| (0..s.ncols()).map(|c| s[(i, c)]).collect())
        .collect();
    let xi = cumulative_scores(&scores);
    Ok(model.classes[argmax(xi.last().expect("non-empty"))])
}

/// Trains on `store` and re-identifies `stream`. A roster of one class needs
/// no training and always answers that class.
pub fn reidentify_with_store(
    store: &FeatureStore,
    stream: &[GaitFeature],
    params: &WelmParams,
    exec: Execution,
) -> Result<u64> {
    if stream.is_empty() {
        return Err(Error::NoFeatures);
    }
    match store.classes().as_slice() {
        [] => Err(Error::EmptyStore),
        [only] => Ok(*only),
        _ => reidentify(&welm_train(store, params, exec)?, stream),
    }
}

/// Cosine-similarity baseline: class centroids of the store, cumulative
/// average similarity over the stream, argmax.
pub fn cs_baseline(store: &FeatureStore, stream: &[GaitFeature]) -> Result<u64> {
    if store.is_empty() {
        return Err(Error::EmptyStore);
    }
    if stream.is_empty() {
        return Err(Error::NoFeatures);
    }
    let classes = store.classes();
    let centroids: Vec<Vec<f64>> = classes
        .iter()
        .map(|&c| {
            let mut m = vec![0.0; FEATURE_DIM];
            for (_, f) in store.entries().iter().filter(|e| e.0 == c) {
                m.iter_mut().zip(&f.vector).for_each(|(a, b)| *a += b);
            }
            m
        })
        .collect();
    let mut scores = Vec::with_capacity(stream.len());
    for f in stream {
        if f.vector.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                got: f.vector.len(),
            });
        }
        let vn = f.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        scores.push(
            centroids
                .iter()
                .map(|c| {
                    let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let dot: f64 = c.iter().zip(&f.vector).map(|(a, b)| a * b).sum();
                    if cn > 0.0 && vn > 0.0 {
                        dot / (cn * vn)
                    } else {
                        0.0
                    }
                })
                .collect(),
        );
    }
    let xi = cumulative_scores(&scores);
    Ok(classes[argmax(xi.last().expect("non-empty"))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::suites::random_store;
    use rand::Rng;

    fn params(seed: u64) -> WelmParams {
        WelmParams {
            hidden_units: 1024,
            lambda: 0.1,
            weight_std: 0.1,
            seed,
        }
    }

    fn separated_store(seed: u64, per_class: usize) -> (FeatureStore, Vec<(u64, GaitFeature)>) {
        // Two classes around orthogonal directions, noise well below the gap.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut store = FeatureStore::default();
        let mut all = Vec::new();
        for label in 0..2u64 {
            for _ in 0..per_class {
                let mut v: Vec<f64> = (0..FEATURE_DIM).map(|_| noise.sample(&mut rng)).collect();
                v[label as usize] += 1.0;
                let f = GaitFeature::from_raw(v, 0, 0).unwrap();
                store.push(label, f.clone());
                all.push((label, f));
            }
        }
        (store, all)
    }

    #[test]
    fn omega_for_balanced_pairs() {
        let (store, _) = separated_store(1, 2);
        assert_eq!(store.sample_weights(), vec![0.5; 4]);
    }

    #[test]
    fn closed_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let store = random_store(&mut rng, 50, 3);
        let gap = welm_dual_form_gap(&store, 1024, 0.1, 0.1, 9).unwrap();
        assert!(gap < 1e-8, "{gap}");
        let big = random_store(&mut rng, 300, 4);
        assert!(welm_dual_form_gap(&big, 128, 0.1, 0.1, 2).unwrap() < 1e-8);
    }

    #[test]
    fn heavy_regularization_shrinks_weights() {
        let (store, _) = separated_store(2, 10);
        let base = welm_train(&store, &params(3), Execution::Sequential)
            .unwrap()
            .output
            .norm_l2();
        let p = WelmParams {
            lambda: 1e9,
            ..params(3)
        };
        let tiny = welm_train(&store, &p, Execution::Sequential)
            .unwrap()
            .output
            .norm_l2();
        assert!(tiny < 1e-6 * base, "{tiny} vs {base}");
    }

    #[test]
    fn fits_separated_training_data() {
        let (store, all) = separated_store(3, 40);
        let m = welm_train(&store, &params(4), Execution::Sequential).unwrap();
        let correct = all
            .iter()
            .filter(|(l, f)| {
                let s = welm_score(&m, &f.vector).unwrap();
                m.classes[argmax(&s)] == *l
            })
            .count();
        assert!(correct as f64 >= 0.95 * all.len() as f64, "{correct}");
        assert_eq!(welm_score(&m, &all[0].1.vector).unwrap().len(), 2);
        assert!(matches!(
            welm_score(&m, &[1.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn store_preconditions() {
        assert!(matches!(
            welm_train(&FeatureStore::default(), &params(0), Execution::Sequential),
            Err(Error::EmptyStore)
        ));
        let (store, _) = separated_store(4, 3);
        let one = store.filtered(|l| l == 1);
        assert!(matches!(
            welm_train(&one, &params(0), Execution::Sequential),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn single_class_roster_answers_that_class() {
        let (store, all) = separated_store(5, 3);
        let one = store.filtered(|l| l == 1);
        let label =
            reidentify_with_store(&one, &[all[0].1.clone()], &params(0), Execution::Sequential)
                .unwrap();
        assert_eq!(label, 1);
    }

    #[test]
    fn recursion_is_the_running_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let scores: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let xi = cumulative_scores(&scores);
        for j in 0..scores.len() {
            for c in 0..3 {
                let mean = scores[..=j].iter().map(|s| s[c]).sum::<f64>() / (j + 1) as f64;
                assert!((xi[j][c] - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reidentify_is_deterministic() {
        let (store, all) = separated_store(6, 20);
        let m = welm_train(&store, &params(7), Execution::Parallel).unwrap();
        let stream: Vec<GaitFeature> = all.iter().skip(20).take(5).map(|e| e.1.clone()).collect();
        assert_eq!(reidentify(&m, &stream).unwrap(), 1);
        assert_eq!(
            reidentify(&m, &stream).unwrap(),
            reidentify(&m, &stream).unwrap()
        );
        assert!(matches!(reidentify(&m, &[]), Err(Error::NoFeatures)));
    }

    #[test]
    fn cosine_baseline_cases() {
        let (store, _) = separated_store(7, 10);
        let mut v = vec![0.0; FEATURE_DIM];
        v[1] = 1.0;
        v[7] = 1e-3;
        assert_eq!(
            cs_baseline(&store, &[GaitFeature::from_raw(v, 0, 0).unwrap()]).unwrap(),
            1
        );
        assert!(matches!(
            cs_baseline(&FeatureStore::default(), &[]),
            Err(Error::EmptyStore)
        ));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let (store, _) = separated_store(9, 30);
        let a = welm_train(&store, &params(1), Execution::Sequential)
            .unwrap()
            .output;
        let b = welm_train(&store, &params(1), Execution::Parallel)
            .unwrap()
            .output;
        assert!((&a - &b).norm_l2() <= 1e-12 * a.norm_l2());
    }
}
