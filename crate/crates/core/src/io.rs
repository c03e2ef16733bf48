//! File formats: line-delimited JSON streams for detections and
//! trajectories, TOML scenario configs, JSON metric reports, and the run
//! manifest that stamps every output.
//!
//! Every format is deterministic: serializing the same values twice
//! yields identical bytes, and floats are written shortest-round-trip so
//! read-back is exact.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::collision::TimedCollision;
use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::math::Real;
use crate::metrics::MetricsReport;
use crate::simulator::ScenarioSpec;
use crate::types::{Detection, TrackedPoint, Trajectory};

/// Version stamp on every structured output file.
pub const FORMAT_VERSION: u32 = 1;

/// A detection stream (one optional detection per frame slot) plus the
/// run manifest from the header line, when one is present.
pub type DetectionStream<T> = (Vec<Option<Detection<T>>>, Option<RunManifest>);

/// Identifies one reproducible run: re-running a pipeline with the same
/// manifest must reproduce its outputs byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    /// SHA-256 of the canonical (JSON) scenario config.
    pub config_sha256: String,
    pub seed: u64,
    /// Which tracker produced the output, if any ("physics", "kf",
    /// "none").
    pub tracker: String,
    pub tool_version: String,
    /// Output file names (no directories), in a fixed order.
    pub outputs: Vec<String>,
}

/// First line of every line-delimited file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest: Option<RunManifest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<BTreeMap<String, String>>,
}

/// Hex SHA-256 of the scenario's canonical JSON form.
pub fn config_sha256<T: Real + Serialize>(spec: &ScenarioSpec<T>) -> String {
    let canonical = serde_json::to_string(spec).expect("scenario serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

fn parse_error(line: usize, err: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        message: err.to_string(),
    }
}

fn check_header(header: &Header, expected_kind: &str) -> Result<()> {
    if header.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion(header.format_version));
    }
    if header.kind != expected_kind {
        return Err(parse_error(
            1,
            format!("expected kind `{expected_kind}`, found `{}`", header.kind),
        ));
    }
    Ok(())
}

/// Reads a line-delimited file: optional header line, then one JSON
/// record per line. Returns records and the header, if any.
fn read_lines<R: DeserializeOwned>(
    path: &Path,
    expected_kind: &str,
) -> Result<(Vec<R>, Option<Header>)> {
    let file = File::open(path)?;
    let mut records = Vec::new();
    let mut header = None;
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let number = index + 1;
        if number == 1 {
            let value: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| parse_error(number, e))?;
            if value.get("format_version").is_some() {
                let parsed: Header =
                    serde_json::from_value(value).map_err(|e| parse_error(number, e))?;
                check_header(&parsed, expected_kind)?;
                header = Some(parsed);
                continue;
            }
            records.push(serde_json::from_value(value).map_err(|e| parse_error(number, e))?);
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| parse_error(number, e))?);
    }
    Ok((records, header))
}

fn write_lines<R: Serialize>(
    path: &Path,
    kind: &str,
    manifest: Option<&RunManifest>,
    metadata: Option<&BTreeMap<String, String>>,
    records: impl Iterator<Item = R>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let header = Header {
        format_version: FORMAT_VERSION,
        kind: kind.into(),
        manifest: manifest.cloned(),
        metadata: metadata.filter(|m| !m.is_empty()).cloned(),
    };
    serde_json::to_writer(&mut out, &header).map_err(|e| parse_error(1, e))?;
    out.write_all(b"\n")?;
    for record in records {
        serde_json::to_writer(&mut out, &record).map_err(|e| parse_error(0, e))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a detection stream: one line per frame slot, `null` for a
/// missed frame.
pub fn write_detections<T: Real + Serialize>(
    path: impl AsRef<Path>,
    frames: &[Option<Detection<T>>],
    manifest: Option<&RunManifest>,
) -> Result<()> {
    write_lines(
        path.as_ref(),
        "detections",
        manifest,
        None,
        frames.iter(),
    )
}

/// Reads a detection stream. An empty file is an empty stream; the
/// header line is optional so hand-written files work.
pub fn read_detections<T: Real + DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<DetectionStream<T>> {
    let (frames, header) = read_lines(path.as_ref(), "detections")?;
    Ok((frames, header.and_then(|h| h.manifest)))
}

/// Writes a trajectory: header carries the trajectory metadata, then one
/// point per line.
pub fn write_trajectory<T: Real + Serialize>(
    path: impl AsRef<Path>,
    trajectory: &Trajectory<T>,
    manifest: Option<&RunManifest>,
) -> Result<()> {
    write_lines(
        path.as_ref(),
        "trajectory",
        manifest,
        Some(&trajectory.metadata),
        trajectory.points.iter(),
    )
}

pub fn read_trajectory<T: Real + DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<(Trajectory<T>, Option<RunManifest>)> {
    let (points, header): (Vec<TrackedPoint<T>>, _) =
        read_lines(path.as_ref(), "trajectory")?;
    let mut trajectory = Trajectory::from_points(points);
    let manifest = header.and_then(|h| {
        if let Some(metadata) = h.metadata {
            trajectory.metadata = metadata;
        }
        h.manifest
    });
    Ok((trajectory, manifest))
}

/// Writes collision events, one per line, so a trajectory can later be
/// split into pre/post-impact segments without re-simulating.
pub fn write_events<T: Real + Serialize>(
    path: impl AsRef<Path>,
    events: &[TimedCollision<T>],
    manifest: Option<&RunManifest>,
) -> Result<()> {
    write_lines(path.as_ref(), "events", manifest, None, events.iter())
}

pub fn read_events<T: Real + DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<(Vec<TimedCollision<T>>, Option<RunManifest>)> {
    let (events, header) = read_lines(path.as_ref(), "events")?;
    Ok((events, header.and_then(|h| h.manifest)))
}

/// Single-document wrapper for the report file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
struct ReportFile<T: Real> {
    format_version: u32,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest: Option<RunManifest>,
    report: MetricsReport<T>,
}

/// Writes a metrics report as a single indented JSON document.
pub fn write_report<T: Real + Serialize>(
    path: impl AsRef<Path>,
    report: &MetricsReport<T>,
    manifest: Option<&RunManifest>,
) -> Result<()> {
    let file = ReportFile {
        format_version: FORMAT_VERSION,
        kind: "report".into(),
        manifest: manifest.cloned(),
        report: report.clone(),
    };
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    let text = serde_json::to_string_pretty(&file).map_err(|e| parse_error(0, e))?;
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_report<T: Real + DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<(MetricsReport<T>, Option<RunManifest>)> {
    let file = File::open(path.as_ref())?;
    let parsed: ReportFile<T> =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| parse_error(1, e))?;
    if parsed.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion(parsed.format_version));
    }
    if parsed.kind != "report" {
        return Err(parse_error(
            1,
            format!("expected kind `report`, found `{}`", parsed.kind),
        ));
    }
    Ok((parsed.report, parsed.manifest))
}

/// Saves a scenario as human-editable TOML.
pub fn save_scenario<T: Real + Serialize>(
    path: impl AsRef<Path>,
    spec: &ScenarioSpec<T>,
) -> Result<()> {
    spec.validate()?;
    let text = toml::to_string_pretty(spec)
        .map_err(|e| Error::InvalidScenario(format!("cannot serialize scenario: {e}")))?;
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

/// Loads and validates a scenario TOML file.
pub fn load_scenario<T: Real + DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<ScenarioSpec<T>> {
    let mut text = String::new();
    File::open(path.as_ref())?.read_to_string(&mut text)?;
    let spec: ScenarioSpec<T> = toml::from_str(&text)
        .map_err(|e| Error::InvalidScenario(format!("cannot parse scenario: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

/// Writes a depth map as a whitespace grid: `width height` on the first
/// line, then one row per line ("NaN" marks missing returns).
pub fn write_depth_map<T: Real>(path: impl AsRef<Path>, map: &DepthMap<T>) -> Result<()> {
    map.validate()?;
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "{} {}", map.width, map.height)?;
    for row in 0..map.height {
        let cells: Vec<String> = (0..map.width)
            .map(|col| {
                let v = map.values[(row * map.width + col) as usize];
                format!("{}", v.as_f64())
            })
            .collect();
        writeln!(out, "{}", cells.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_depth_map<T: Real>(path: impl AsRef<Path>) -> Result<DepthMap<T>> {
    let file = File::open(path.as_ref())?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| parse_error(1, "empty depth map file"))??;
    let mut dims = first.split_whitespace();
    let width: u32 = dims
        .next()
        .ok_or_else(|| parse_error(1, "missing width"))?
        .parse()
        .map_err(|e| parse_error(1, e))?;
    let height: u32 = dims
        .next()
        .ok_or_else(|| parse_error(1, "missing height"))?
        .parse()
        .map_err(|e| parse_error(1, e))?;

    let mut values = Vec::with_capacity((width * height) as usize);
    for (index, line) in lines.enumerate() {
        let line = line?;
        let number = index + 2;
        if line.trim().is_empty() {
            continue;
        }
        for token in line.split_whitespace() {
            let v: f64 = token.parse().map_err(|e| parse_error(number, e))?;
            values.push(T::of(v));
        }
    }
    DepthMap::new(width, height, values)
}
