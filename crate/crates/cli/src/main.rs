//! `radtherm` command-line front end: scenario presets, simulation, the full
//! pipeline, evaluation, the re-identification grid and the oracle suites.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use radtherm::error::Error;
use radtherm::eval::{run_reid_bench, ReidBenchConfig};
use radtherm::exec::Execution;
use radtherm::oracle;
use radtherm::pipeline::{evaluate_dir, execute_run, MetricsReport, RunDir};
use radtherm::sim::{
    parallel_walk, run_scenario, temperature_scene, three_subject_scene, Scenario,
};

#[derive(Parser)]
#[command(
    name = "radtherm",
    version,
    about = "Radar and thermal people tracking, fusion and screening"
)]
struct Cli {
    /// Run batch work on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Three subjects walking back and forth in parallel lanes.
    Three,
    /// Two subjects walking side by side.
    Parallel,
    /// Four subjects inside the thermal range, for temperature screening.
    Temperature,
}

#[derive(Subcommand)]
enum Command {
    /// Write a built-in scenario as JSON.
    Preset {
        #[arg(value_enum)]
        preset: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Side-by-side spacing for the `parallel` preset, meters.
        #[arg(long, default_value_t = 0.6)]
        spacing: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize radar frames, thermal detections and ground truth.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate and run the full processing chain, writing every report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a run directory against its ground truth.
    Eval {
        #[arg(long)]
        run: PathBuf,
        /// Print the metrics as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Re-identification accuracy grid, as CSV.
    ReidBench {
        #[arg(long, default_value_t = 6)]
        subjects: usize,
        #[arg(long = "train-min", default_value_t = 3.0)]
        train_min: f64,
        #[arg(long = "test-min", default_value_t = 2.0)]
        test_min: f64,
        /// Scoring windows in seconds; repeat or separate with commas.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 10.0, 20.0])]
        window: Vec<f64>,
        /// Number of WELM initializations.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long = "data-seed", default_value_t = 0)]
        data_seed: u64,
        /// Also score an imbalanced store: minutes for the first and second half
        /// of the subjects, e.g. `1,4`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        imbalanced: Option<Vec<f64>>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the brute-force oracle suites and print pass/fail.
    OracleCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

enum Failure {
    Lib(Error),
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Lib(Error::Io(std::io::Error::other(e.to_string())))
    }
}

impl Failure {
    fn report(&self) -> ErrorReport<'_> {
        match self {
            Failure::Lib(e) => ErrorReport {
                error: e.kind(),
                message: e.to_string(),
            },
            Failure::Usage(m) => ErrorReport {
                error: "usage",
                message: m.clone(),
            },
            Failure::Check(m) => ErrorReport {
                error: "check_failed",
                message: m.clone(),
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            e.exit()
        }
        Err(e) => return fail(&Failure::Usage(e.to_string().trim_end().to_string())),
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(&f),
    }
}

fn fail(f: &Failure) -> ExitCode {
    let json =
        serde_json::to_string(&f.report()).unwrap_or_else(|_| "{\"error\":\"internal\"}".into());
    eprintln!("{json}");
    ExitCode::from(match f {
        Failure::Usage(_) => 2,
        _ => 1,
    })
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario, Failure> {
    let mut s = Scenario::load(path)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Preset {
            preset,
            seed,
            spacing,
            out,
        } => {
            let s = match preset {
                Preset::Three => three_subject_scene(seed),
                Preset::Parallel => parallel_walk(seed, spacing),
                Preset::Temperature => temperature_scene(seed),
            };
            s.validate()?;
            std::fs::write(&out, s.to_json()? + "\n").map_err(Error::from)?;
        }
        Command::Simulate {
            scenario,
            seed,
            out,
        } => {
            let s = load_scenario(&scenario, seed)?;
            let sim = run_scenario(&s)?;
            RunDir::create(&out)?.write_simulation(&s, &sim)?;
            println!(
                "{} frames, {} ground-truth records -> {}",
                sim.radar.len(),
                sim.ground_truth.len(),
                out.display()
            );
        }
        Command::Run {
            scenario,
            seed,
            out,
        } => {
            let s = load_scenario(&scenario, seed)?;
            let run = execute_run(&s, &out, exec)?;
            let fused = run
                .identities
                .iter()
                .filter(|i| i.radar_id.is_some())
                .count();
            println!(
                "{} radar tracks, {} face tracks, {} fused identities -> {}",
                run.radar_tracks.len(),
                run.face_tracks.len(),
                fused,
                out.display()
            );
        }
        Command::Eval { run, json } => {
            let report = evaluate_dir(&run)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).map_err(Error::from)?
                );
            } else {
                print_table(&report);
            }
        }
        Command::ReidBench {
            subjects,
            train_min,
            test_min,
            window,
            seeds,
            data_seed,
            imbalanced,
            out,
        } => {
            let imbalanced = match imbalanced.as_deref() {
                None => None,
                Some([a, b]) => Some((*a, *b)),
                Some(_) => return Err(Failure::Usage("--imbalanced takes two values".into())),
            };
            let bench = ReidBenchConfig {
                subjects,
                train_minutes: train_min,
                test_minutes: test_min,
                windows_s: window,
                welm_seeds: seeds,
                data_seed,
                imbalanced,
            };
            let report = run_reid_bench(&bench, exec)?;
            let sink: Box<dyn std::io::Write> = match &out {
                Some(p) => Box::new(std::fs::File::create(p).map_err(Error::from)?),
                None => Box::new(std::io::stdout()),
            };
            let mut w = csv::Writer::from_writer(sink);
            for row in &report.rows {
                w.serialize(row)?;
            }
            w.flush().map_err(Error::from)?;
            eprintln!("slowest WELM training {:.3}s", report.max_train_seconds);
        }
        Command::OracleCheck { seed } => {
            let outcomes = oracle::run_all(seed)?;
            let mut failed = Vec::new();
            for o in &outcomes {
                let verdict = if o.passed() { "PASS" } else { "FAIL" };
                println!(
                    "{verdict} {:<16} {} cases, {} failures, worst {:.3e}",
                    o.name, o.cases, o.failures, o.worst
                );
                if !o.passed() {
                    failed.push(o.name.clone());
                }
            }
            if !failed.is_empty() {
                return Err(Failure::Check(format!(
                    "oracle suites failed: {}",
                    failed.join(", ")
                )));
            }
        }
    }
    Ok(())
}

fn print_table(m: &MetricsReport) {
    let a = &m.association;
    let f = &m.association_per_frame;
    println!(
        "association (per track)   precision {:.3}  recall {:.3}  ({} performed, {} relevant)",
        a.precision,
        a.recall,
        a.performed.len(),
        a.relevant
    );
    println!(
        "association (per frame)   precision {:.3}  recall {:.3}",
        f.precision, f.recall
    );
    match &m.tracking {
        Some(t) => {
            let d = t
                .distance_rmse
                .map_or("n/a".to_string(), |d| format!("{d:.3} m"));
            println!(
                "positioning               RMSE {:.3} m  inter-subject distance RMSE {d}",
                t.position_rmse
            );
        }
        None => {
            println!("positioning               no confirmed radar track overlaps the ground truth")
        }
    }
    println!(
        "clustering                r_cl {:.3} over {} frames",
        m.clustering.r_cl,
        m.clustering.correct.len()
    );
    if !m.temperatures.is_empty() {
        println!();
        println!(
            "{:>6} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "face", "radar", "subject", "T_hat", "T_true", "raw_sd", "corr_sd"
        );
        for t in &m.temperatures {
            let opt = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
            let truth = t.t_true.map_or("-".to_string(), |v| format!("{v:.2}"));
            println!(
                "{:>6} {:>6} {:>8} {:>8.2} {:>8} {:>8.3} {:>8.3}",
                t.tc_id,
                opt(t.radar_id),
                opt(t.subject),
                t.t_hat,
                truth,
                t.raw_std,
                t.corrected_std
            );
        }
    }
}
