use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{
    evaluate_run, run_pipeline, FaceTrackReport, FrameLabels, FrameRow, MetricsReport,
    PipelineSetup, RadarTrackReport, RunOutput,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fusion::{FusedIdentity, PairCost};
use crate::geometry::PointCloudFrame;
use crate::reid::GaitFeature;
use crate::sim::{run_scenario, GroundTruthRecord, PointLabels, Scenario, SimOutput};
use crate::thermal_track::DetectionFrame;

/// Writes one JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a JSON-lines file, skipping blank lines.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Layout of a simulation or run output directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

/// Short temperature summary of one identity.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
struct TemperatureRow {
    tc_id: u64,
    radar_id: Option<u64>,
    t_hat: f64,
    readings: usize,
    radar_distance: bool,
}

impl RunDir {
    pub const SCENARIO: &'static str = "scenario.json";
    pub const RADAR_FRAMES: &'static str = "radar_frames.jsonl";
    pub const DETECTIONS: &'static str = "detections.jsonl";
    pub const GROUND_TRUTH: &'static str = "ground_truth.jsonl";
    pub const POINT_LABELS: &'static str = "labels.jsonl";
    pub const FUSED: &'static str = "fused_identities.json";
    pub const ASSOCIATIONS: &'static str = "associations.json";
    pub const RADAR_TRACKS: &'static str = "radar_tracks.json";
    pub const FACE_TRACKS: &'static str = "face_tracks.json";
    pub const TEMPERATURES: &'static str = "temperatures.json";
    pub const CLUSTERS: &'static str = "cluster_labels.jsonl";
    pub const FEATURES: &'static str = "features.json";
    pub const FRAMES_CSV: &'static str = "frames.csv";
    pub const METRICS: &'static str = "metrics.json";

    /// Uses `root`, creating it when needed.
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn open(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{} is not a directory", root.display()),
            )));
        }
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_simulation(&self, scenario: &Scenario, sim: &SimOutput) -> Result<()> {
        write_json(&self.path(Self::SCENARIO), scenario)?;
        write_jsonl(&self.path(Self::RADAR_FRAMES), &sim.radar)?;
        write_jsonl(&self.path(Self::DETECTIONS), &sim.thermal)?;
        write_jsonl(&self.path(Self::GROUND_TRUTH), &sim.ground_truth)?;
        write_jsonl(&self.path(Self::POINT_LABELS), &sim.labels)
    }

    pub fn read_scenario(&self) -> Result<Scenario> {
        Scenario::load(&self.path(Self::SCENARIO))
    }

    pub fn read_simulation(&self) -> Result<SimOutput> {
        Ok(SimOutput {
            radar: read_jsonl::<PointCloudFrame>(&self.path(Self::RADAR_FRAMES))?,
            thermal: read_jsonl::<DetectionFrame>(&self.path(Self::DETECTIONS))?,
            labels: read_jsonl::<PointLabels>(&self.path(Self::POINT_LABELS))?,
            ground_truth: read_jsonl::<GroundTruthRecord>(&self.path(Self::GROUND_TRUTH))?,
        })
    }

    pub fn write_run(&self, run: &RunOutput, scenario: &Scenario) -> Result<()> {
        write_json(&self.path(Self::FUSED), &run.identities)?;
        write_json(&self.path(Self::ASSOCIATIONS), &run.associations)?;
        write_json(&self.path(Self::RADAR_TRACKS), &run.radar_tracks)?;
        write_json(&self.path(Self::FACE_TRACKS), &run.face_tracks)?;
        write_json(&self.path(Self::FEATURES), &run.features)?;
        write_jsonl(&self.path(Self::CLUSTERS), &run.labels)?;
        let temps: Vec<TemperatureRow> = run
            .identities
            .iter()
            .map(|i| TemperatureRow {
                tc_id: i.tc_id,
                radar_id: i.radar_id,
                t_hat: i.t_hat,
                readings: i.per_frame.len(),
                radar_distance: i.radar_id.is_some(),
            })
            .collect();
        write_json(&self.path(Self::TEMPERATURES), &temps)?;
        let mut csv = csv::Writer::from_path(self.path(Self::FRAMES_CSV)).map_err(csv_error)?;
        for row in run.frame_rows(&scenario.placement) {
            csv.serialize(row).map_err(csv_error)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn read_run(&self) -> Result<RunOutput> {
        Ok(RunOutput {
            radar_tracks: read_json::<Vec<RadarTrackReport>>(&self.path(Self::RADAR_TRACKS))?,
            face_tracks: read_json::<Vec<FaceTrackReport>>(&self.path(Self::FACE_TRACKS))?,
            associations: read_json::<Vec<PairCost>>(&self.path(Self::ASSOCIATIONS))?,
            identities: read_json::<Vec<FusedIdentity>>(&self.path(Self::FUSED))?,
            labels: read_jsonl::<FrameLabels>(&self.path(Self::CLUSTERS))?,
            features: read_json::<Vec<GaitFeature>>(&self.path(Self::FEATURES))?,
        })
    }

    pub fn write_metrics<T: Serialize>(&self, metrics: &T) -> Result<()> {
        write_json(&self.path(Self::METRICS), metrics)
    }

    pub fn read_frame_rows(&self) -> Result<Vec<FrameRow>> {
        let mut r = csv::Reader::from_path(self.path(Self::FRAMES_CSV)).map_err(csv_error)?;
        r.deserialize().map(|row| row.map_err(csv_error)).collect()
    }
}

/// Simulates `scenario`, runs the full chain and writes both the input
/// streams and every report under `out`.
pub fn execute_run(scenario: &Scenario, out: &Path, exec: Execution) -> Result<RunOutput> {
    let sim = run_scenario(scenario)?;
    let setup = PipelineSetup {
        config: &scenario.config,
        camera: &scenario.camera,
        placement: &scenario.placement,
        exec,
        collect_features: true,
    };
    let run = run_pipeline(&sim.radar, &sim.thermal, &setup)?;
    let dir = RunDir::create(out)?;
    dir.write_simulation(scenario, &sim)?;
    dir.write_run(&run, scenario)?;
    Ok(run)
}

/// Scores a directory written by [`execute_run`] and stores the metrics next
/// to the run.
pub fn evaluate_dir(root: &Path) -> Result<MetricsReport> {
    let dir = RunDir::open(root)?;
    let scenario = dir.read_scenario()?;
    let sim = dir.read_simulation()?;
    let run = dir.read_run()?;
    let report = evaluate_run(&run, &sim.ground_truth, &sim.labels, &scenario.config);
    dir.write_metrics(&report)?;
    Ok(report)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}
