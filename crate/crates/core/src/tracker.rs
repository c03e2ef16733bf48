//! The physics tracking loop: predict ballistically (with mid-interval
//! collision reflection), gate incoming detections against the
//! prediction, and fill gaps from the motion model.
//!
//! The tracker is a sequential state machine over one object. Its belief
//! carries position, velocity, and time; velocity is re-estimated from
//! finite differences of recently accepted measurements, with a
//! half-interval gravity correction that makes the estimate exact for
//! free flight:
//!
//! for constant acceleration, `(p_b - p_a) / dt` equals the instantaneous
//! velocity at the midpoint of `[t_a, t_b]`, so adding `g * dt / 2` yields
//! the velocity at `t_b` with no truncation error. A collision inside a
//! step invalidates the difference window, so the window resets and the
//! reflected model velocity takes over.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::collision::{step_with_collisions, CollisionEvent};
use crate::depth::{resolve, DepthOptions, ResolutionSource};
use crate::error::{Error, Result};
use crate::math::{Real, Vec3};
use crate::types::{
    Detection, KinematicState, PointSource, TrackedPoint, TrackerConfig, Trajectory,
};

/// How many recent accepted measurements feed the velocity estimate.
/// Longer windows average out more detection noise; the gravity-corrected
/// difference stays exact for free flight at any window length.
pub const VELOCITY_WINDOW: usize = 5;

/// After this many consecutive frames without an accepted detection the
/// track is flagged stale in the trajectory metadata (prediction
/// continues regardless).
pub const STALE_AFTER: u32 = 30;

/// Everything one tracker step produced, beyond the emitted point.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T: Real> {
    pub point: TrackedPoint<T>,
    /// Model prediction for this frame (after any collision reflection);
    /// the gate is measured from here.
    pub predicted: Vec3<T>,
    /// Collisions the model crossed inside the elapsed interval.
    pub events: Vec<CollisionEvent<T>>,
    /// True when the detection passed the gate and updated the belief.
    pub accepted: bool,
    /// True when the accepted position's depth came from the kinematic
    /// fallback rather than a measurement.
    pub depth_fallback: bool,
}

/// Single-object tracker driven by ballistic prediction and gating.
#[derive(Debug, Clone)]
pub struct PhysicsTracker<T: Real> {
    belief: KinematicState<T>,
    last_measured: Option<KinematicState<T>>,
    consecutive_predictions: u32,
    config: TrackerConfig<T>,
    /// Court with the config's gravity and restitution applied, so the
    /// config fields stay authoritative when they differ.
    court: crate::types::CourtGeometry<T>,
    frame: u64,
    /// Recent accepted (position, timestamp) pairs for the velocity
    /// difference window.
    window: VecDeque<(Vec3<T>, T)>,
    depth_options: DepthOptions<T>,
}

impl<T: Real> PhysicsTracker<T> {
    /// Starts a track from the first detection. The initial velocity is
    /// zero: nothing can be differenced yet.
    pub fn init(config: TrackerConfig<T>, first: &Detection<T>) -> Result<Self> {
        config.validate()?;
        first.validate()?;
        let depth_options = DepthOptions {
            consistency_threshold: Some(config.gate_threshold),
            ..DepthOptions::default()
        };
        let resolved = resolve(
            first,
            None,
            config.gravity,
            config.intrinsics.as_ref(),
            &depth_options,
        )
        .ok_or_else(|| {
            Error::Initialization(format!(
                "frame {}: first detection has no resolvable 3D position",
                first.frame_index
            ))
        })?;
        let mut court = config.court;
        court.gravity = config.gravity;
        court.restitution = config.restitution;
        let belief = KinematicState::new(
            court.clamp(resolved.position),
            Vec3::zero(),
            first.timestamp,
        );
        let mut window = VecDeque::with_capacity(VELOCITY_WINDOW);
        window.push_back((belief.position, belief.timestamp));
        Ok(Self {
            belief,
            last_measured: Some(belief),
            consecutive_predictions: 0,
            config,
            court,
            frame: first.frame_index,
            window,
            depth_options,
        })
    }

    pub fn belief(&self) -> &KinematicState<T> {
        &self.belief
    }

    pub fn last_measured(&self) -> Option<&KinematicState<T>> {
        self.last_measured.as_ref()
    }

    pub fn consecutive_predictions(&self) -> u32 {
        self.consecutive_predictions
    }

    pub fn config(&self) -> &TrackerConfig<T> {
        &self.config
    }

    /// Advances one frame slot. `None` means the frame had no detection.
    pub fn step(&mut self, detection: Option<&Detection<T>>) -> Result<StepOutcome<T>> {
        let (frame, dt) = match detection {
            Some(det) => {
                det.validate()?;
                if det.frame_index <= self.frame {
                    return Err(Error::OutOfOrder(format!(
                        "detection frame {} not after tracker frame {}",
                        det.frame_index, self.frame
                    )));
                }
                if self.belief.timestamp.partial_cmp(&det.timestamp) != Some(Ordering::Less) {
                    return Err(Error::OutOfOrder(format!(
                        "detection timestamp {} not after belief timestamp {}",
                        det.timestamp, self.belief.timestamp
                    )));
                }
                (det.frame_index, det.timestamp - self.belief.timestamp)
            }
            None => (self.frame + 1, self.config.frame_interval),
        };

        // Model prediction across the elapsed interval, reflecting at
        // court boundaries mid-interval when the path crosses one.
        let (predicted, events) =
            step_with_collisions(&self.belief, dt, &self.court).map_err(|e| e.at_frame(frame))?;
        if !events.is_empty() {
            // The difference window straddles a velocity discontinuity;
            // only the reflected model velocity is trustworthy now.
            self.window.clear();
        }

        let resolved = detection.and_then(|det| {
            resolve(
                det,
                Some(&self.belief),
                self.config.gravity,
                self.config.intrinsics.as_ref(),
                &self.depth_options,
            )
        });

        let outcome = match resolved {
            Some(r) if r.position.distance(predicted.position) <= self.config.gate_threshold => {
                // Accept: the detection position becomes the belief.
                let timestamp = detection.expect("resolved implies detection").timestamp;
                self.window.push_back((r.position, timestamp));
                while self.window.len() > VELOCITY_WINDOW {
                    self.window.pop_front();
                }
                let velocity = self.window_velocity().unwrap_or(predicted.velocity);
                // Noise can push a measurement past a wall; the emitted
                // point keeps the measurement, but the belief must stay
                // inside the court for the collision model.
                let belief_position = self.court.clamp(r.position);
                self.belief = KinematicState::new(belief_position, velocity, timestamp);
                self.last_measured = Some(self.belief);
                self.consecutive_predictions = 0;
                let source = if r.source == ResolutionSource::FallbackDepth {
                    PointSource::Corrected
                } else {
                    PointSource::Measured
                };
                StepOutcome {
                    point: TrackedPoint {
                        frame_index: frame,
                        timestamp,
                        position: r.position,
                        velocity,
                        source,
                    },
                    predicted: predicted.position,
                    events,
                    accepted: true,
                    depth_fallback: r.depth_replaced(),
                }
            }
            other => {
                // Reject or no detection: coast on the model.
                let source = if other.is_some() {
                    PointSource::Corrected
                } else {
                    PointSource::Predicted
                };
                self.belief = predicted;
                self.consecutive_predictions += 1;
                StepOutcome {
                    point: TrackedPoint {
                        frame_index: frame,
                        timestamp: predicted.timestamp,
                        position: predicted.position,
                        velocity: predicted.velocity,
                        source,
                    },
                    predicted: predicted.position,
                    events,
                    accepted: false,
                    depth_fallback: false,
                }
            }
        };
        self.frame = frame;
        Ok(outcome)
    }

    /// Velocity from the difference window: span difference plus the
    /// half-interval gravity correction (exact for free flight).
    fn window_velocity(&self) -> Option<Vec3<T>> {
        let (first, t0) = *self.window.front()?;
        let (last, t1) = *self.window.back()?;
        let span = t1 - t0;
        if span.is_nan() || span <= T::zero() {
            return None;
        }
        let half = T::of(0.5);
        Some((last - first) / span + self.config.gravity * (half * span))
    }

    /// Runs the whole stream: one output point per input slot.
    ///
    /// Leading frames with no resolvable detection are backfilled at the
    /// first resolved position (source Predicted) so the output always
    /// has one point per slot; a stream with no resolvable detection at
    /// all is an initialization error.
    pub fn run(
        detections: &[Option<Detection<T>>],
        config: &TrackerConfig<T>,
    ) -> Result<Trajectory<T>> {
        if detections.is_empty() {
            return Err(Error::InsufficientData("empty detection stream".into()));
        }
        let start = detections
            .iter()
            .position(|d| d.is_some())
            .ok_or_else(|| {
                Error::Initialization("detection stream has no detections at all".into())
            })?;
        let first = detections[start].as_ref().expect("found above");
        let mut tracker = Self::init(config.clone(), first)
            .map_err(|e| e.at_frame(first.frame_index))?;

        let mut points = Vec::with_capacity(detections.len());
        for i in (0..start).rev() {
            // Backfill the blind lead-in, stepping timestamps backwards.
            let offset = T::from_usize(start - i).expect("offset fits scalar");
            points.push(TrackedPoint {
                frame_index: first.frame_index - (start - i) as u64,
                timestamp: first.timestamp - offset * config.frame_interval,
                position: tracker.belief.position,
                velocity: Vec3::zero(),
                source: PointSource::Predicted,
            });
        }
        points.reverse();
        points.push(TrackedPoint {
            frame_index: first.frame_index,
            timestamp: first.timestamp,
            position: tracker.belief.position,
            velocity: tracker.belief.velocity,
            source: PointSource::Measured,
        });

        let mut stale_at: Option<u64> = None;
        for slot in &detections[start + 1..] {
            let outcome = tracker.step(slot.as_ref())?;
            if tracker.consecutive_predictions == STALE_AFTER && stale_at.is_none() {
                stale_at = Some(outcome.point.frame_index);
            }
            points.push(outcome.point);
        }

        let mut trajectory = Trajectory::from_points(points);
        if let Some(frame) = stale_at {
            trajectory.metadata.insert("stale".into(), "true".into());
            trajectory
                .metadata
                .insert("stale_at_frame".into(), frame.to_string());
        }
        Ok(trajectory)
    }
}
