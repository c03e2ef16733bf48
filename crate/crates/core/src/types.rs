//! Domain types shared by the tracker, simulator, and metrics layers.
//!
//! Positions are meters in a y-up world frame, timestamps are seconds,
//! and frame indices are 0-based. Detection `depth` is the single field
//! where NaN or infinite values are tolerated (a rangefinder can fail);
//! everywhere else non-finite components are invariant violations.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::depth::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::math::{Real, Vec3};

/// Fast end of the expected speed range for small-ball sports (~180 mph).
/// Used to size the default association gate.
pub const MAX_EXPECTED_SPEED_MPS: f64 = 80.0;

/// The default gate is this multiple of the worst-case per-frame travel,
/// wide enough to re-acquire a fast object from a cold (zero-velocity) start.
pub const GATE_SPEED_MULTIPLIER: f64 = 3.0;

/// Position and velocity of the tracked object at an instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicState<T> {
    #[serde(rename = "position_m")]
    pub position: Vec3<T>,
    #[serde(rename = "velocity_mps")]
    pub velocity: Vec3<T>,
    #[serde(rename = "timestamp_s")]
    pub timestamp: T,
}

impl<T: Real> KinematicState<T> {
    pub fn new(position: Vec3<T>, velocity: Vec3<T>, timestamp: T) -> Self {
        Self {
            position,
            velocity,
            timestamp,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.velocity.is_finite() && self.timestamp.is_finite()
    }
}

fn default_confidence<T: Real>() -> T {
    T::one()
}

/// A single-frame observation of the object.
///
/// At least one of `world_position` or `pixel_center` + `depth` must be
/// present. `depth` may be NaN or infinite — missing range data is a fact
/// of life for depth sensors and is resolved downstream, not rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Detection<T: Real> {
    pub frame_index: u64,
    #[serde(rename = "timestamp_s")]
    pub timestamp: T,
    #[serde(
        rename = "pixel_center_px",
        default = "Option::default",
        skip_serializing_if = "Option::is_none"
    )]
    pub pixel_center: Option<(T, T)>,
    #[serde(
        rename = "depth_m",
        default = "Option::default",
        skip_serializing_if = "Option::is_none",
        with = "depth_value"
    )]
    pub depth: Option<T>,
    #[serde(
        rename = "world_position_m",
        default = "Option::default",
        skip_serializing_if = "Option::is_none"
    )]
    pub world_position: Option<Vec3<T>>,
    #[serde(default = "default_confidence")]
    pub confidence: T,
}

impl<T: Real> Detection<T> {
    /// Convenience constructor for a detection that already carries a
    /// world-space position.
    pub fn at_world(frame_index: u64, timestamp: T, position: Vec3<T>) -> Self {
        Self {
            frame_index,
            timestamp,
            pixel_center: None,
            depth: None,
            world_position: Some(position),
            confidence: T::one(),
        }
    }

    /// Convenience constructor for a pixel + depth observation.
    pub fn at_pixel(frame_index: u64, timestamp: T, u: T, v: T, depth: T) -> Self {
        Self {
            frame_index,
            timestamp,
            pixel_center: Some((u, v)),
            depth: Some(depth),
            world_position: None,
            confidence: T::one(),
        }
    }

    /// True when the detection carries enough data to ever yield a 3D
    /// position (possibly after depth fallback).
    pub fn has_position_source(&self) -> bool {
        self.world_position.is_some() || (self.pixel_center.is_some() && self.depth.is_some())
    }

    /// Checks the structural invariants that do not depend on camera
    /// calibration: a position source exists, confidence is in [0, 1],
    /// and every field except `depth` is finite.
    pub fn validate(&self) -> Result<()> {
        if !self.has_position_source() {
            return Err(Error::InvalidInput(
                "detection needs world_position or pixel_center + depth".into(),
            ));
        }
        if !(self.confidence >= T::zero() && self.confidence <= T::one()) {
            return Err(Error::InvalidInput(format!(
                "confidence {} outside [0, 1]",
                self.confidence
            )));
        }
        if !self.timestamp.is_finite() {
            return Err(Error::InvalidInput("non-finite timestamp".into()));
        }
        if let Some((u, v)) = self.pixel_center {
            if !(u.is_finite() && v.is_finite()) {
                return Err(Error::InvalidInput("non-finite pixel center".into()));
            }
        }
        if let Some(p) = self.world_position {
            if !p.is_finite() {
                return Err(Error::InvalidInput("non-finite world position".into()));
            }
        }
        Ok(())
    }
}

/// Encodes `depth` so that NaN and infinities survive JSON, which has no
/// literal for them: finite values are numbers, the rest are the strings
/// "nan", "inf", and "-inf".
mod depth_value {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::math::Real;

    pub fn serialize<T: Real, S: Serializer>(
        value: &Option<T>,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match value {
            None => serializer.serialize_none(),
            Some(d) if d.is_nan() => serializer.serialize_str("nan"),
            Some(d) if d.is_infinite() && d.is_sign_positive() => serializer.serialize_str("inf"),
            Some(d) if d.is_infinite() => serializer.serialize_str("-inf"),
            Some(d) => serializer.serialize_f64(d.as_f64()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, T: Real, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Option<T>, D::Error> {
        match Option::<Repr>::deserialize(deserializer)? {
            None => Ok(None),
            Some(Repr::Number(v)) => Ok(Some(T::of(v))),
            Some(Repr::Text(s)) => match s.as_str() {
                "nan" => Ok(Some(T::nan())),
                "inf" | "+inf" => Ok(Some(T::infinity())),
                "-inf" => Ok(Some(T::neg_infinity())),
                other => Err(serde::de::Error::custom(format!(
                    "invalid depth string `{other}` (expected nan, inf, or -inf)"
                ))),
            },
        }
    }
}

/// How a trajectory point was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointSource {
    /// An accepted detection, emitted where it was observed.
    Measured,
    /// No usable detection this frame; emitted at the model prediction.
    Predicted,
    /// A detection was consumed but overridden: either rejected by the
    /// gate (point sits at the prediction) or its depth was replaced by
    /// the kinematic fallback.
    Corrected,
}

impl PointSource {
    pub fn as_str(self) -> &'static str {
        match self {
            PointSource::Measured => "measured",
            PointSource::Predicted => "predicted",
            PointSource::Corrected => "corrected",
        }
    }
}

/// One output sample of a tracker or of the simulator's ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedPoint<T> {
    pub frame_index: u64,
    #[serde(rename = "timestamp_s")]
    pub timestamp: T,
    #[serde(rename = "position_m")]
    pub position: Vec3<T>,
    #[serde(rename = "velocity_mps")]
    pub velocity: Vec3<T>,
    pub source: PointSource,
}

/// An ordered sequence of tracked points plus free-form metadata
/// (scenario name, tracker kind, staleness markers, ...).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Trajectory<T: Real> {
    pub points: Vec<TrackedPoint<T>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl<T: Real> Trajectory<T> {
    pub fn new() -> Self {
        Self {
            points: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn from_points(points: Vec<TrackedPoint<T>>) -> Self {
        Self {
            points,
            metadata: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks the trajectory invariants; see [`validate`].
    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }
}

/// A single invariant violation found by [`validate`]. Violations are
/// data, not errors: callers decide whether they are fatal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Index of the offending point within the trajectory.
    pub index: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    TimestampNotIncreasing,
    FrameIndexNotIncreasing,
    NonFinitePosition,
    NonFiniteVelocity,
    NonFiniteTimestamp,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::TimestampNotIncreasing => "timestamp does not increase",
            ViolationKind::FrameIndexNotIncreasing => "frame index does not increase",
            ViolationKind::NonFinitePosition => "non-finite position",
            ViolationKind::NonFiniteVelocity => "non-finite velocity",
            ViolationKind::NonFiniteTimestamp => "non-finite timestamp",
        };
        write!(f, "point {}: {}", self.index, what)
    }
}

/// Checks that timestamps and frame indices strictly increase and that
/// every component is finite. Returns one entry per violated invariant;
/// an empty list means the trajectory is well-formed.
pub fn validate<T: Real>(trajectory: &Trajectory<T>) -> Vec<Violation> {
    let mut violations = Vec::new();
    for (i, p) in trajectory.points.iter().enumerate() {
        if !p.position.is_finite() {
            violations.push(Violation {
                index: i,
                kind: ViolationKind::NonFinitePosition,
            });
        }
        if !p.velocity.is_finite() {
            violations.push(Violation {
                index: i,
                kind: ViolationKind::NonFiniteVelocity,
            });
        }
        if !p.timestamp.is_finite() {
            violations.push(Violation {
                index: i,
                kind: ViolationKind::NonFiniteTimestamp,
            });
        }
        if i > 0 {
            let prev = &trajectory.points[i - 1];
            if prev.timestamp.partial_cmp(&p.timestamp) != Some(Ordering::Less) {
                violations.push(Violation {
                    index: i,
                    kind: ViolationKind::TimestampNotIncreasing,
                });
            }
            if p.frame_index <= prev.frame_index {
                violations.push(Violation {
                    index: i,
                    kind: ViolationKind::FrameIndexNotIncreasing,
                });
            }
        }
    }
    violations
}

/// The axis-aligned court volume the object is confined to, together
/// with the gravity vector and the wall/floor restitution coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CourtGeometry<T> {
    #[serde(rename = "min_corner_m")]
    pub min_corner: Vec3<T>,
    #[serde(rename = "max_corner_m")]
    pub max_corner: Vec3<T>,
    #[serde(rename = "gravity_mps2")]
    pub gravity: Vec3<T>,
    pub restitution: T,
}

impl<T: Real> CourtGeometry<T> {
    pub fn new(
        min_corner: Vec3<T>,
        max_corner: Vec3<T>,
        gravity: Vec3<T>,
        restitution: T,
    ) -> Result<Self> {
        let court = Self {
            min_corner,
            max_corner,
            gravity,
            restitution,
        };
        court.validate()?;
        Ok(court)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_corner.is_finite() && self.max_corner.is_finite()) {
            return Err(Error::InvalidInput("non-finite court corner".into()));
        }
        if !(self.min_corner.x < self.max_corner.x
            && self.min_corner.y < self.max_corner.y
            && self.min_corner.z < self.max_corner.z)
        {
            return Err(Error::InvalidInput(
                "court min corner must be strictly below max corner on every axis".into(),
            ));
        }
        if !self.gravity.is_finite() {
            return Err(Error::InvalidInput("non-finite gravity".into()));
        }
        if !(self.restitution > T::zero() && self.restitution <= T::one()) {
            return Err(Error::InvalidInput(format!(
                "restitution {} outside (0, 1]",
                self.restitution
            )));
        }
        Ok(())
    }

    /// Projects `point` onto the closed volume, axis by axis. A point
    /// already inside comes back bit-identical.
    pub fn clamp(&self, point: Vec3<T>) -> Vec3<T> {
        Vec3::new(
            point.x.max(self.min_corner.x).min(self.max_corner.x),
            point.y.max(self.min_corner.y).min(self.max_corner.y),
            point.z.max(self.min_corner.z).min(self.max_corner.z),
        )
    }

    /// True if `point` lies inside the volume or within `tol` of it.
    pub fn contains(&self, point: Vec3<T>, tol: T) -> bool {
        point.x >= self.min_corner.x - tol
            && point.x <= self.max_corner.x + tol
            && point.y >= self.min_corner.y - tol
            && point.y <= self.max_corner.y + tol
            && point.z >= self.min_corner.z - tol
            && point.z <= self.max_corner.z + tol
    }

    /// True if `point` is strictly inside the open volume.
    pub fn strictly_contains(&self, point: Vec3<T>) -> bool {
        point.x > self.min_corner.x
            && point.x < self.max_corner.x
            && point.y > self.min_corner.y
            && point.y < self.max_corner.y
            && point.z > self.min_corner.z
            && point.z < self.max_corner.z
    }
}

/// Tracker configuration. Gravity and restitution are duplicated from the
/// court for direct access; the constructors keep them consistent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct TrackerConfig<T: Real> {
    #[serde(rename = "gate_threshold_m")]
    pub gate_threshold: T,
    pub restitution: T,
    #[serde(rename = "gravity_mps2")]
    pub gravity: Vec3<T>,
    pub court: CourtGeometry<T>,
    #[serde(rename = "frame_interval_s")]
    pub frame_interval: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsics: Option<CameraIntrinsics<T>>,
}

impl<T: Real> TrackerConfig<T> {
    /// Builds a config from the court, with the default association gate
    /// for the given frame interval.
    pub fn new(court: CourtGeometry<T>, frame_interval: T) -> Result<Self> {
        let config = Self {
            gate_threshold: Self::default_gate(frame_interval),
            restitution: court.restitution,
            gravity: court.gravity,
            court,
            frame_interval,
            intrinsics: None,
        };
        config.validate()?;
        Ok(config)
    }

    /// Default gate radius: three times the distance the fastest expected
    /// object travels in one frame.
    pub fn default_gate(frame_interval: T) -> T {
        T::of(GATE_SPEED_MULTIPLIER) * T::of(MAX_EXPECTED_SPEED_MPS) * frame_interval
    }

    pub fn validate(&self) -> Result<()> {
        self.court.validate()?;
        if self.gate_threshold.is_nan() || self.gate_threshold <= T::zero() {
            return Err(Error::InvalidInput(format!(
                "gate threshold {} must be positive",
                self.gate_threshold
            )));
        }
        if !(self.restitution > T::zero() && self.restitution <= T::one()) {
            return Err(Error::InvalidInput(format!(
                "restitution {} outside (0, 1]",
                self.restitution
            )));
        }
        if self.frame_interval.is_nan() || self.frame_interval <= T::zero() {
            return Err(Error::InvalidInput(format!(
                "frame interval {} must be positive",
                self.frame_interval
            )));
        }
        if let Some(intr) = &self.intrinsics {
            intr.validate()?;
        }
        Ok(())
    }
}
