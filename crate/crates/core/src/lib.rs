//! Physics-guided 3D tracking of fast-moving objects in bounded court
//! volumes, with a Kalman-filter baseline, a deterministic simulator,
//! and trajectory quality metrics.
//!
//! All math is generic over the scalar type via [`math::Real`] (f32 or
//! f64); the aliases at the crate root fix f64, which is what the
//! simulator, the CLI, and the file formats use.

pub mod collision;
pub mod depth;
pub mod error;
pub mod io;
pub mod kf;
pub mod kinematics;
pub mod math;
pub mod metrics;
pub mod simulator;
pub mod tracker;
pub mod types;

pub use error::{Error, Result};
pub use math::{Axis, Real};
pub use types::{validate, PointSource, Violation, ViolationKind};

/// Double-precision aliases for the generic core types.
pub type Vec3 = math::Vec3<f64>;
pub type KinematicState = types::KinematicState<f64>;
pub type Detection = types::Detection<f64>;
pub type TrackedPoint = types::TrackedPoint<f64>;
pub type Trajectory = types::Trajectory<f64>;
pub type CourtGeometry = types::CourtGeometry<f64>;
pub type TrackerConfig = types::TrackerConfig<f64>;
pub type CameraIntrinsics = depth::CameraIntrinsics<f64>;
pub type CollisionEvent = collision::CollisionEvent<f64>;
pub type TimedCollision = collision::TimedCollision<f64>;
pub type ScenarioSpec = simulator::ScenarioSpec<f64>;
pub type MetricsReport = metrics::MetricsReport<f64>;
pub type PhysicsTracker = tracker::PhysicsTracker<f64>;
pub type KalmanState = kf::KalmanState<f64>;
pub type KfParams = kf::KfParams<f64>;
