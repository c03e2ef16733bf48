//! Command implementations for the `fmotrack` binary.
//!
//! Four subcommands cover the pipeline end to end: `simulate` writes a
//! scenario's ground truth and corrupted detection stream, `track` runs
//! one of the trackers over a stream, `evaluate` scores a trajectory
//! against truth, and `compare` sweeps both trackers over many seeds.
//!
//! Every run is deterministic: the same command line produces the same
//! bytes, whether seeds are processed serially or in parallel. Exit
//! codes: 0 on success, 1 when inputs fail validation, 2 on usage
//! errors. Set `RUST_LOG` to control log verbosity.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fmotrack::io::{self, RunManifest, FORMAT_VERSION};
use fmotrack::{kf, metrics, simulator};
use fmotrack::{
    Detection, Error, KfParams, PhysicsTracker, Result, ScenarioSpec, TimedCollision, Trajectory,
};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Track fast-moving objects in bounded court volumes.
#[derive(Debug, Parser)]
#[command(name = "fmotrack", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a scenario's ground truth, detections, and collision events
    Simulate {
        /// Builtin scenario name or path to a scenario TOML file
        #[arg(long)]
        scenario: String,
        /// Override the scenario's corruption seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, created if missing
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a tracker over a detection stream
    Track {
        /// Detection stream produced by `simulate` (or hand-written JSONL)
        #[arg(long)]
        detections: PathBuf,
        /// Scenario TOML describing the court, frame rate, and noise level
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = TrackerKind::Physics)]
        tracker: TrackerKind,
        /// Output trajectory file
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a predicted trajectory against ground truth
    Evaluate {
        /// Predicted trajectory produced by `track`
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth trajectory produced by `simulate`
        #[arg(long)]
        truth: PathBuf,
        /// Collision events enabling the per-segment breakdown
        #[arg(long)]
        events: Option<PathBuf>,
        /// Output report file
        #[arg(long)]
        out: PathBuf,
    },
    /// Run both trackers over many seeds and print median metrics
    Compare {
        /// Builtin scenario name or path to a scenario TOML file
        #[arg(long)]
        scenario: String,
        /// Number of corruption seeds (0, 1, .., N-1)
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// Also write the comparison as a JSON file
        #[arg(long)]
        out: Option<PathBuf>,
        /// Process seeds sequentially instead of in parallel
        #[arg(long)]
        serial: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrackerKind {
    Physics,
    Kf,
}

impl TrackerKind {
    fn name(self) -> &'static str {
        match self {
            TrackerKind::Physics => "physics",
            TrackerKind::Kf => "kf",
        }
    }
}

/// Parses and runs a full command line (including argv[0]) and returns
/// the process exit code. Split from `main` so tests can drive the CLI
/// in-process.
pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or("warn"),
    )
    .format_timestamp(None)
    .try_init();

    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = err.exit_code();
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate { scenario, seed, out } => cmd_simulate(&scenario, seed, &out),
        Command::Track {
            detections,
            config,
            tracker,
            out,
        } => cmd_track(&detections, &config, tracker, &out),
        Command::Evaluate {
            pred,
            truth,
            events,
            out,
        } => cmd_evaluate(&pred, &truth, events.as_deref(), &out),
        Command::Compare {
            scenario,
            seeds,
            out,
            serial,
        } => cmd_compare(&scenario, seeds, out.as_deref(), serial),
    }
}

/// Accepts either a builtin scenario name or a path to a TOML file.
fn load_scenario_arg(arg: &str) -> Result<ScenarioSpec> {
    if let Ok(spec) = simulator::builtin::<f64>(arg) {
        return Ok(spec);
    }
    let path = Path::new(arg);
    if path.exists() {
        return io::load_scenario(path);
    }
    let names: Vec<String> = simulator::builtin_scenarios::<f64>()
        .into_iter()
        .map(|s| s.name)
        .collect();
    Err(Error::UnknownScenario(format!(
        "{arg}; not a file either. Builtin scenarios: {}",
        names.join(", ")
    )))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|name| name.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_simulate(scenario: &str, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut spec = load_scenario_arg(scenario)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let (truth, events) = simulator::simulate_with_events(&spec)?;
    let frames = simulator::corrupt(&truth, &spec)?;

    std::fs::create_dir_all(out)?;
    let manifest = RunManifest {
        scenario: spec.name.clone(),
        config_sha256: io::config_sha256(&spec),
        seed: spec.seed,
        tracker: "none".into(),
        tool_version: TOOL_VERSION.into(),
        outputs: vec![
            "detections.jsonl".into(),
            "events.jsonl".into(),
            "scenario.toml".into(),
            "truth.jsonl".into(),
        ],
    };
    io::save_scenario(out.join("scenario.toml"), &spec)?;
    io::write_trajectory(out.join("truth.jsonl"), &truth, Some(&manifest))?;
    io::write_detections(out.join("detections.jsonl"), &frames, Some(&manifest))?;
    io::write_events(out.join("events.jsonl"), &events, Some(&manifest))?;
    log::info!("simulated `{}` with seed {}", spec.name, spec.seed);
    println!(
        "simulated {}: {} frames, {} collisions",
        spec.name,
        frames.len(),
        events.len()
    );
    Ok(())
}

fn run_tracker(
    frames: &[Option<Detection>],
    spec: &ScenarioSpec,
    tracker: TrackerKind,
) -> Result<Trajectory> {
    let config = spec.tracker_config()?;
    match tracker {
        TrackerKind::Physics => PhysicsTracker::run(frames, &config),
        TrackerKind::Kf => kf::run_kf(frames, &config, &KfParams::with_sigma(spec.noise_sigma)),
    }
}

fn cmd_track(detections: &Path, config: &Path, tracker: TrackerKind, out: &Path) -> Result<()> {
    let spec: ScenarioSpec = io::load_scenario(config)?;
    let (frames, _) = io::read_detections::<f64>(detections)?;
    log::info!("loaded {} frame slots", frames.len());
    let trajectory = run_tracker(&frames, &spec, tracker)?;
    let manifest = RunManifest {
        scenario: spec.name.clone(),
        config_sha256: io::config_sha256(&spec),
        seed: spec.seed,
        tracker: tracker.name().into(),
        tool_version: TOOL_VERSION.into(),
        outputs: vec![file_name(out)],
    };
    io::write_trajectory(out, &trajectory, Some(&manifest))?;
    println!(
        "tracked {} frames with the {} tracker",
        trajectory.len(),
        tracker.name()
    );
    Ok(())
}

fn cmd_evaluate(pred: &Path, truth: &Path, events: Option<&Path>, out: &Path) -> Result<()> {
    let (estimated, pred_manifest) = io::read_trajectory::<f64>(pred)?;
    let (reference, _) = io::read_trajectory::<f64>(truth)?;
    let events: Vec<TimedCollision> = match events {
        Some(path) => io::read_events(path)?.0,
        None => Vec::new(),
    };
    let report = metrics::report(&estimated, &reference, &events)?;
    let manifest = pred_manifest.map(|m| RunManifest {
        outputs: vec![file_name(out)],
        ..m
    });
    io::write_report(out, &report, manifest.as_ref())?;
    println!(
        "ade_m {} amd {} over {} points",
        report.ade, report.amd, report.n_points
    );
    Ok(())
}

/// Median metrics for one tracker over a seed sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub tracker: String,
    pub median_ade_m: f64,
    pub median_amd: f64,
}

/// Output of `compare`: both trackers' medians over the same seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub format_version: u32,
    pub kind: String,
    pub scenario: String,
    pub config_sha256: String,
    pub seeds: u64,
    pub rows: Vec<ComparisonRow>,
}

struct SeedMetrics {
    physics_ade: f64,
    physics_amd: f64,
    kf_ade: f64,
    kf_amd: f64,
}

fn compare_seed(base: &ScenarioSpec, seed: u64) -> Result<SeedMetrics> {
    let spec = base.with_seed(seed);
    let truth = simulator::simulate(&spec)?;
    let frames = simulator::corrupt(&truth, &spec)?;
    let physics = run_tracker(&frames, &spec, TrackerKind::Physics)?;
    let kalman = run_tracker(&frames, &spec, TrackerKind::Kf)?;
    Ok(SeedMetrics {
        physics_ade: metrics::ade(&physics, &truth)?,
        physics_amd: metrics::amd(&physics, &truth)?,
        kf_ade: metrics::ade(&kalman, &truth)?,
        kf_amd: metrics::amd(&kalman, &truth)?,
    })
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs both trackers over `seeds` corruption seeds of one scenario.
/// Seed order is fixed, so serial and parallel execution produce the
/// same result.
pub fn compare_scenario(spec: &ScenarioSpec, seeds: u64, serial: bool) -> Result<Comparison> {
    if seeds == 0 {
        return Err(Error::InvalidInput("--seeds must be at least 1".into()));
    }
    let results: Result<Vec<SeedMetrics>> = if serial {
        (0..seeds).map(|seed| compare_seed(spec, seed)).collect()
    } else {
        (0..seeds)
            .into_par_iter()
            .map(|seed| compare_seed(spec, seed))
            .collect()
    };
    let results = results?;
    let row = |tracker: &str, ade: Vec<f64>, amd: Vec<f64>| ComparisonRow {
        tracker: tracker.into(),
        median_ade_m: median(ade),
        median_amd: median(amd),
    };
    Ok(Comparison {
        format_version: FORMAT_VERSION,
        kind: "comparison".into(),
        scenario: spec.name.clone(),
        config_sha256: io::config_sha256(spec),
        seeds,
        rows: vec![
            row(
                "physics",
                results.iter().map(|r| r.physics_ade).collect(),
                results.iter().map(|r| r.physics_amd).collect(),
            ),
            row(
                "kf",
                results.iter().map(|r| r.kf_ade).collect(),
                results.iter().map(|r| r.kf_amd).collect(),
            ),
        ],
    })
}

fn render_table(comparison: &Comparison) -> String {
    let mut table = format!(
        "scenario {}  seeds {}\n{:<10}{:>16}{:>16}\n",
        comparison.scenario, comparison.seeds, "tracker", "median_ade_m", "median_amd"
    );
    for row in &comparison.rows {
        table.push_str(&format!(
            "{:<10}{:>16.6}{:>16.6}\n",
            row.tracker, row.median_ade_m, row.median_amd
        ));
    }
    table
}

fn cmd_compare(scenario: &str, seeds: u64, out: Option<&Path>, serial: bool) -> Result<()> {
    let spec = load_scenario_arg(scenario)?;
    let comparison = compare_scenario(&spec, seeds, serial)?;
    print!("{}", render_table(&comparison));
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&comparison).expect("comparison serializes");
        std::fs::write(path, text + "\n")?;
    }
    Ok(())
}
