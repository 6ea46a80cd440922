//! Re-identification benchmark over simulated walking sessions.
//!
//! Every subject walks one training session and one separate test session.
//! Training features are cut to the requested number of minutes; test
//! streams are split into non-overlapping events of `W` seconds of features.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::pipeline::{run_pipeline, PipelineSetup};
use crate::reid::{cs_baseline, reidentify, welm_train, FeatureStore, GaitFeature, WelmParams};
use crate::sim::{reid_session, run_scenario, subject_roster};

use super::reid_accuracy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReidBenchConfig {
    pub subjects: usize,
    /// Training minutes per subject.
    pub train_minutes: f64,
    /// Length of each test session, minutes.
    pub test_minutes: f64,
    /// Cumulative scoring windows, seconds.
    pub windows_s: Vec<f64>,
    /// Number of WELM initializations averaged.
    pub welm_seeds: u64,
    /// Seed of the simulated sessions.
    pub data_seed: u64,
    /// Optional imbalanced store: the first half of the subjects gets the
    /// first value in minutes, the rest the second.
    pub imbalanced: Option<(f64, f64)>,
}

impl Default for ReidBenchConfig {
    fn default() -> Self {
        Self {
            subjects: 6,
            train_minutes: 3.0,
            test_minutes: 2.0,
            windows_s: vec![0.0, 10.0, 20.0],
            welm_seeds: 20,
            data_seed: 0,
            imbalanced: None,
        }
    }
}

/// Accuracy at one scoring window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReidBenchRow {
    /// Store layout: `balanced` or `imbalanced`.
    pub store: String,
    pub window_s: f64,
    pub events: usize,
    pub welm_mean: f64,
    pub welm_std: f64,
    pub cs_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReidBenchReport {
    pub config: ReidBenchConfig,
    pub rows: Vec<ReidBenchRow>,
    /// Slowest single WELM training, seconds.
    pub max_train_seconds: f64,
    /// Store sizes (samples) of the balanced and imbalanced runs.
    pub store_sizes: Vec<usize>,
}

/// Feature streams of one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectFeatures {
    pub label: u64,
    pub train: Vec<GaitFeature>,
    pub test: Vec<GaitFeature>,
}

/// Gait features of every confirmed track of a single-subject session.
pub fn session_features(
    duration: f64,
    label: u64,
    seed: u64,
    roster_seed: u64,
    n: usize,
) -> Result<Vec<GaitFeature>> {
    let roster = subject_roster(n, roster_seed);
    let entry = roster
        .get(label as usize)
        .ok_or_else(|| Error::InvalidConfig(format!("no roster entry {label}")))?;
    let scenario = reid_session(entry, label, duration, seed);
    let sim = run_scenario(&scenario)?;
    let setup = PipelineSetup {
        config: &scenario.config,
        camera: &scenario.camera,
        placement: &scenario.placement,
        exec: Execution::Sequential,
        collect_features: true,
    };
    Ok(run_pipeline(&sim.radar, &[], &setup)?.features)
}

/// Simulates the training and test sessions of every subject.
pub fn generate_reid_data(cfg: &ReidBenchConfig, exec: Execution) -> Result<Vec<SubjectFeatures>> {
    let longest = cfg
        .imbalanced
        .map_or(cfg.train_minutes, |(a, b)| cfg.train_minutes.max(a).max(b));
    exec.try_map_range(cfg.subjects, |i| {
        let label = i as u64;
        let base = cfg.data_seed.wrapping_mul(1_000).wrapping_add(2 * label);
        Ok(SubjectFeatures {
            label,
            train: session_features(longest * 60.0, label, base, cfg.data_seed, cfg.subjects)?,
            test: session_features(
                cfg.test_minutes * 60.0,
                label,
                base + 1,
                cfg.data_seed,
                cfg.subjects,
            )?,
        })
    })
}

/// Store with the first `minutes(label)` minutes of each subject's training
/// features.
pub fn build_store(
    data: &[SubjectFeatures],
    frame_period: f64,
    minutes: impl Fn(u64) -> f64,
) -> FeatureStore {
    let mut store = FeatureStore::default();
    for s in data {
        let last = (minutes(s.label) * 60.0 / frame_period).round() as u64;
        for f in s.train.iter().filter(|f| f.frame < last) {
            store.push(s.label, f.clone());
        }
    }
    store
}

/// Splits test streams into events of `1 + W / (stride * dt)` consecutive
/// features of one track.
pub fn reid_events(
    data: &[SubjectFeatures],
    window_s: f64,
    cfg: &SystemConfig,
) -> Vec<(u64, Vec<GaitFeature>)> {
    let stride = cfg.reid.feature_stride as u64;
    let len = 1 + (window_s / (stride as f64 * cfg.frame_period)).round() as usize;
    let mut events = Vec::new();
    for s in data {
        let mut stream: Vec<&GaitFeature> = s.test.iter().collect();
        stream.sort_by_key(|f| (f.track_id, f.frame));
        let mut run: Vec<GaitFeature> = Vec::new();
        for f in stream {
            let contiguous = run
                .last()
                .is_some_and(|p| p.track_id == f.track_id && f.frame == p.frame + stride);
            if !contiguous {
                run.clear();
            }
            run.push(f.clone());
            if run.len() == len {
                events.push((s.label, std::mem::take(&mut run)));
            }
        }
    }
    events
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len().max(1) as f64;
    let m = x.iter().sum::<f64>() / n;
    (
        m,
        (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt(),
    )
}

/// WELM accuracy per seed at every window, and the slowest training time.
fn welm_grid(
    store: &FeatureStore,
    events: &[Vec<(u64, Vec<GaitFeature>)>],
    cfg: &SystemConfig,
    seeds: u64,
    exec: Execution,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let per_seed = exec.try_map_range(seeds as usize, |k| -> Result<(Vec<f64>, f64)> {
        let start = Instant::now();
        // Retraining per event would rebuild this same model.
        let model = welm_train(
            store,
            &WelmParams::from_config(&cfg.reid, k as u64),
            Execution::Sequential,
        )?;
        let elapsed = start.elapsed().as_secs_f64();
        let acc = events
            .iter()
            .map(|ev| {
                let predictions = ev
                    .iter()
                    .map(|(_, stream)| reidentify(&model, stream))
                    .collect::<Result<Vec<u64>>>()?;
                let truth: Vec<u64> = ev.iter().map(|e| e.0).collect();
                Ok(reid_accuracy(&predictions, &truth))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok((acc, elapsed))
    })?;
    let slowest = per_seed.iter().map(|p| p.1).fold(0.0, f64::max);
    let by_window = (0..events.len())
        .map(|w| per_seed.iter().map(|p| p.0[w]).collect())
        .collect();
    Ok((by_window, slowest))
}

fn score_store(
    name: &str,
    store: &FeatureStore,
    bench: &ReidBenchConfig,
    events: &[Vec<(u64, Vec<GaitFeature>)>],
    cfg: &SystemConfig,
    exec: Execution,
) -> Result<(Vec<ReidBenchRow>, f64)> {
    let (accs, slowest) = welm_grid(store, events, cfg, bench.welm_seeds, exec)?;
    let mut rows = Vec::new();
    for (w, ev) in events.iter().enumerate() {
        let predictions = ev
            .iter()
            .map(|(_, s)| cs_baseline(store, s))
            .collect::<Result<Vec<u64>>>()?;
        let truth: Vec<u64> = ev.iter().map(|e| e.0).collect();
        let (welm_mean, welm_std) = mean_std(&accs[w]);
        rows.push(ReidBenchRow {
            store: name.to_string(),
            window_s: bench.windows_s[w],
            events: ev.len(),
            welm_mean,
            welm_std,
            cs_accuracy: reid_accuracy(&predictions, &truth),
        });
    }
    Ok((rows, slowest))
}

/// Runs the balanced grid and, when configured, the imbalanced one on the
/// same sessions.
pub fn run_reid_bench(bench: &ReidBenchConfig, exec: Execution) -> Result<ReidBenchReport> {
    if bench.subjects < 2 || bench.welm_seeds == 0 || bench.windows_s.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least two subjects, one seed and one window".into(),
        ));
    }
    if bench.windows_s.iter().any(|w| !(*w >= 0.0))
        || !(bench.train_minutes > 0.0 && bench.test_minutes > 0.0)
    {
        return Err(Error::InvalidConfig(
            "windows and durations must be non-negative".into(),
        ));
    }
    let cfg = SystemConfig::default();
    let data = generate_reid_data(bench, exec)?;
    let events: Vec<Vec<(u64, Vec<GaitFeature>)>> = bench
        .windows_s
        .iter()
        .map(|&w| reid_events(&data, w, &cfg))
        .collect();
    if events.iter().any(|e| e.is_empty()) {
        return Err(Error::NoFeatures);
    }

    let balanced = build_store(&data, cfg.frame_period, |_| bench.train_minutes);
    let (mut rows, mut slowest) = score_store("balanced", &balanced, bench, &events, &cfg, exec)?;
    let mut store_sizes = vec![balanced.len()];
    if let Some((a, b)) = bench.imbalanced {
        let half = (bench.subjects / 2) as u64;
        let store = build_store(&data, cfg.frame_period, |l| if l < half { a } else { b });
        let (more, t) = score_store("imbalanced", &store, bench, &events, &cfg, exec)?;
        rows.extend(more);
        slowest = slowest.max(t);
        store_sizes.push(store.len());
    }
    Ok(ReidBenchReport {
        config: bench.clone(),
        rows,
        max_train_seconds: slowest,
        store_sizes,
    })
}
