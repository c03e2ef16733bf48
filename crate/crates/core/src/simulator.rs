//! Deterministic scenario simulation: exact ballistic ground truth plus
//! seeded measurement corruption.
//!
//! Ground truth is segment-wise analytic (free flight solved in closed
//! form between impacts), so it doubles as the numerical oracle the
//! trackers are judged against. Corruption draws from one seeded ChaCha
//! stream in a fixed per-frame order, which makes every detection stream
//! reproducible byte for byte from `(scenario, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::collision::{step_with_collisions, TimedCollision};
use crate::depth::{project, CameraIntrinsics};
use crate::error::{Error, Result};
use crate::math::{Real, Vec3};
use crate::types::{
    CourtGeometry, Detection, KinematicState, PointSource, TrackedPoint, TrackerConfig,
    Trajectory,
};

/// Default capture rate, typical for consumer sports cameras.
pub const DEFAULT_FPS: f64 = 60.0;

/// A complete description of one simulated rally segment.
///
/// `dropout_windows` are inclusive frame ranges with no detection at all
/// (occlusions); `dropout_prob` adds i.i.d. single-frame misses on top.
/// With `outlier_prob`, a frame's detection is displaced by
/// `outlier_magnitude` in a uniformly random direction instead of
/// receiving Gaussian noise. When `intrinsics` is present, detections are
/// emitted as pixel + depth observations rather than world positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct ScenarioSpec<T: Real> {
    // Scalar fields first so the TOML form lists them before the court,
    // initial-state, and camera tables.
    pub name: String,
    #[serde(rename = "duration_s")]
    pub duration: T,
    pub fps: T,
    #[serde(rename = "noise_sigma_m")]
    pub noise_sigma: T,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropout_windows: Vec<(u64, u64)>,
    #[serde(default)]
    pub dropout_prob: T,
    #[serde(default)]
    pub outlier_prob: T,
    #[serde(rename = "outlier_magnitude_m")]
    pub outlier_magnitude: T,
    pub seed: u64,
    pub court: CourtGeometry<T>,
    pub initial: KinematicState<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsics: Option<CameraIntrinsics<T>>,
}

impl<T: Real> ScenarioSpec<T> {
    /// Number of frames simulated: `duration * fps`, rounded to the
    /// nearest integer to absorb representation error.
    pub fn n_frames(&self) -> u64 {
        (self.duration * self.fps).round().to_u64().unwrap_or(0)
    }

    pub fn frame_interval(&self) -> T {
        T::one() / self.fps
    }

    pub fn validate(&self) -> Result<()> {
        self.court.validate().map_err(|e| {
            Error::InvalidScenario(format!("scenario `{}`: {e}", self.name))
        })?;
        if !self.fps.is_finite() || self.fps <= T::zero() {
            return Err(Error::InvalidScenario(format!(
                "fps {} must be positive",
                self.fps
            )));
        }
        if !self.duration.is_finite() || self.duration <= T::zero() {
            return Err(Error::InvalidScenario(format!(
                "duration {} must be positive",
                self.duration
            )));
        }
        if self.n_frames() == 0 {
            return Err(Error::InvalidScenario(
                "duration * fps rounds to zero frames".into(),
            ));
        }
        if !self.initial.is_finite() {
            return Err(Error::InvalidScenario("non-finite initial state".into()));
        }
        if !(self.noise_sigma >= T::zero() && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidScenario("noise sigma must be >= 0".into()));
        }
        for (p, label) in [
            (self.dropout_prob, "dropout probability"),
            (self.outlier_prob, "outlier probability"),
        ] {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::InvalidScenario(format!(
                    "{label} {p} outside [0, 1]"
                )));
            }
        }
        if !(self.outlier_magnitude >= T::zero() && self.outlier_magnitude.is_finite()) {
            return Err(Error::InvalidScenario(
                "outlier magnitude must be >= 0".into(),
            ));
        }
        let n = self.n_frames();
        for &(start, end) in &self.dropout_windows {
            if start > end || end >= n {
                return Err(Error::InvalidScenario(format!(
                    "dropout window [{start}, {end}] outside frame range 0..{n}"
                )));
            }
        }
        if let Some(intr) = &self.intrinsics {
            intr.validate()?;
        }
        Ok(())
    }

    /// The same scenario with a different corruption seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut spec = self.clone();
        spec.seed = seed;
        spec
    }

    /// The same scenario with all corruption disabled: no noise, no
    /// dropouts (windows included), no outliers.
    pub fn without_corruption(&self) -> Self {
        let mut spec = self.clone();
        spec.noise_sigma = T::zero();
        spec.dropout_windows.clear();
        spec.dropout_prob = T::zero();
        spec.outlier_prob = T::zero();
        spec
    }

    /// Tracker configuration matching this scenario's court and frame
    /// rate, with the default gate.
    pub fn tracker_config(&self) -> Result<TrackerConfig<T>> {
        let mut config = TrackerConfig::new(self.court, self.frame_interval())?;
        config.intrinsics = self.intrinsics;
        Ok(config)
    }
}

/// Simulates the noise-free ground-truth trajectory: one point per frame
/// at `t = i / fps`, all tagged [`PointSource::Measured`].
pub fn simulate<T: Real>(spec: &ScenarioSpec<T>) -> Result<Trajectory<T>> {
    simulate_with_events(spec).map(|(trajectory, _)| trajectory)
}

/// [`simulate`] plus the collision events, each tagged with the frame
/// whose inter-frame step contained it.
pub fn simulate_with_events<T: Real>(
    spec: &ScenarioSpec<T>,
) -> Result<(Trajectory<T>, Vec<TimedCollision<T>>)> {
    spec.validate()?;
    if !spec.court.contains(spec.initial.position, T::of(1e-9)) {
        return Err(Error::InvalidScenario(format!(
            "initial position ({}, {}, {}) outside the court",
            spec.initial.position.x, spec.initial.position.y, spec.initial.position.z
        )));
    }

    let n = spec.n_frames();
    let mut state = spec.initial;
    state.timestamp = T::zero();
    let mut points = Vec::with_capacity(n as usize);
    let mut collisions = Vec::new();

    for i in 0..n {
        points.push(TrackedPoint {
            frame_index: i,
            timestamp: state.timestamp,
            position: state.position,
            velocity: state.velocity,
            source: PointSource::Measured,
        });
        if i + 1 == n {
            break;
        }
        // Timestamps are computed as i/fps rather than accumulated, so
        // they carry no drift; the step duration is their difference.
        let t_next = T::from_u64(i + 1).expect("frame index fits scalar") / spec.fps;
        let dt = t_next - state.timestamp;
        let (next, events) = step_with_collisions(&state, dt, &spec.court)
            .map_err(|e| e.at_frame(i + 1))?;
        for event in events {
            collisions.push(TimedCollision {
                frame_index: i + 1,
                time: state.timestamp + event.impact_fraction * dt,
                event,
            });
        }
        state = next;
        state.timestamp = t_next;
    }

    let mut trajectory = Trajectory::from_points(points);
    trajectory
        .metadata
        .insert("scenario".into(), spec.name.clone());
    trajectory.metadata.insert("kind".into(), "truth".into());
    Ok((trajectory, collisions))
}

/// Applies dropout, noise, and outliers to a ground-truth trajectory,
/// producing one optional detection per frame.
///
/// Per frame the RNG is consumed in a fixed order — dropout coin, three
/// noise normals, outlier coin, then (only on outlier frames) two
/// direction draws — so a given `(spec, seed)` always yields the same
/// stream regardless of which draws end up used.
pub fn corrupt<T: Real>(
    truth: &Trajectory<T>,
    spec: &ScenarioSpec<T>,
) -> Result<Vec<Option<Detection<T>>>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut frames = Vec::with_capacity(truth.len());

    for point in &truth.points {
        let i = point.frame_index;
        let u_dropout: f64 = rng.gen();
        let noise: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let u_outlier: f64 = rng.gen();

        let in_window = spec
            .dropout_windows
            .iter()
            .any(|&(start, end)| i >= start && i <= end);
        if in_window || u_dropout < spec.dropout_prob.as_f64() {
            frames.push(None);
            continue;
        }

        let displacement = if u_outlier < spec.outlier_prob.as_f64() {
            // Uniform direction on the sphere, scaled to the outlier
            // magnitude; replaces the Gaussian noise entirely.
            let z: f64 = rng.gen_range(-1.0..=1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).max(0.0).sqrt();
            Vec3::of(r * phi.cos(), r * phi.sin(), z) * spec.outlier_magnitude
        } else {
            Vec3::of(noise[0], noise[1], noise[2]) * spec.noise_sigma
        };
        let observed = point.position + displacement;

        let detection = match &spec.intrinsics {
            None => Some(Detection::at_world(i, point.timestamp, observed)),
            Some(intr) => {
                // A ball outside the frustum is simply not seen.
                project(observed, intr).map(|(u, v)| {
                    Detection::at_pixel(i, point.timestamp, u, v, observed.z)
                })
            }
        };
        frames.push(detection);
    }

    Ok(frames)
}

/// The five builtin scenarios. Corruption defaults match the standard
/// evaluation sweep: sigma = 0.01 m, 15% i.i.d. dropout, no outliers.
pub fn builtin_scenarios<T: Real>() -> Vec<ScenarioSpec<T>> {
    vec![
        bounce_multi(),
        wall_highspeed(),
        occlusion(),
        depth_sweep(),
        mixed_collision(),
    ]
}

/// Looks up a builtin scenario by name.
pub fn builtin<T: Real>(name: &str) -> Result<ScenarioSpec<T>> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.into()))
}

/// A racquetball-sized court: 12.2 x 6.1 x 6.1 m, floor at y = 0.
fn standard_court<T: Real>() -> CourtGeometry<T> {
    CourtGeometry {
        min_corner: Vec3::zero(),
        max_corner: Vec3::of(12.2, 6.1, 6.1),
        gravity: Vec3::standard_gravity(),
        restitution: T::of(0.95),
    }
}

fn base_spec<T: Real>(
    name: &str,
    court: CourtGeometry<T>,
    position: Vec3<T>,
    velocity: Vec3<T>,
    duration: f64,
) -> ScenarioSpec<T> {
    ScenarioSpec {
        name: name.into(),
        court,
        initial: KinematicState::new(position, velocity, T::zero()),
        duration: T::of(duration),
        fps: T::of(DEFAULT_FPS),
        noise_sigma: T::of(0.01),
        dropout_windows: Vec::new(),
        dropout_prob: T::of(0.15),
        outlier_prob: T::zero(),
        outlier_magnitude: T::one(),
        seed: 0,
        intrinsics: None,
    }
}

/// Four floor bounces over four seconds at a lazy lob pace, with a
/// 13-frame occlusion mid-rally.
fn bounce_multi<T: Real>() -> ScenarioSpec<T> {
    let mut spec = base_spec(
        "bounce-multi",
        standard_court(),
        Vec3::of(1.0, 1.5, 3.0),
        Vec3::of(2.2, -2.0, 0.3),
        4.0,
    );
    spec.dropout_windows = vec![(100, 112)];
    spec
}

/// A 70 m/s drive that caroms between front and back walls several times
/// in one second; per-frame travel exceeds a meter, and a short occlusion
/// covers one of the caroms.
fn wall_highspeed<T: Real>() -> ScenarioSpec<T> {
    let mut spec = base_spec(
        "wall-highspeed",
        standard_court(),
        Vec3::of(1.0, 2.0, 3.0),
        Vec3::of(70.0, 3.0, 1.0),
        1.0,
    );
    spec.dropout_windows = vec![(20, 26)];
    spec
}

/// A collision-free lob with a 15-frame occlusion window around its apex.
fn occlusion<T: Real>() -> ScenarioSpec<T> {
    let mut spec = base_spec(
        "occlusion",
        standard_court(),
        Vec3::of(1.0, 1.2, 3.0),
        Vec3::of(4.5, 7.0, 0.4),
        1.4,
    );
    spec.dropout_windows = vec![(30, 44)];
    spec
}

/// A throw toward the camera: depth sweeps from 9 m down to ~3 m, and
/// detections are emitted as pixel + depth through the camera model; an
/// 11-frame occlusion interrupts the approach.
fn depth_sweep<T: Real>() -> ScenarioSpec<T> {
    let court = CourtGeometry {
        min_corner: Vec3::of(-3.0, -2.0, 0.0),
        max_corner: Vec3::of(3.0, 4.0, 12.0),
        gravity: Vec3::standard_gravity(),
        restitution: T::of(0.95),
    };
    let mut spec = base_spec(
        "depth-sweep",
        court,
        Vec3::of(0.3, 0.5, 9.0),
        Vec3::of(-0.3, 3.5, -6.5),
        0.9,
    );
    spec.dropout_windows = vec![(24, 34)];
    spec.intrinsics = Some(CameraIntrinsics {
        fx: T::of(700.0),
        fy: T::of(700.0),
        cx: T::of(640.0),
        cy: T::of(360.0),
        width: 1280,
        height: 720,
    });
    spec
}

/// Floor and side-wall contacts mixed in one three-second rally, with a
/// 13-frame occlusion between contacts.
fn mixed_collision<T: Real>() -> ScenarioSpec<T> {
    let mut spec = base_spec(
        "mixed-collision",
        standard_court(),
        Vec3::of(2.0, 2.0, 1.0),
        Vec3::of(5.0, -3.0, 3.0),
        3.0,
    );
    spec.dropout_windows = vec![(70, 82)];
    spec
}
