//! Constant-acceleration Kalman filter baseline with Mahalanobis gating.
//!
//! This is the comparison tracker: a competent, conventionally tuned
//! filter with no knowledge of gravity or walls. Its state stacks
//! position, velocity, and acceleration per axis (9 numbers); process
//! noise is the standard white-noise-jerk model. Updates use the Joseph
//! form so the covariance stays symmetric positive-definite over long
//! runs.

use std::cmp::Ordering;

use nalgebra::{Cholesky, Const, RealField, SMatrix, SVector};
use num_traits::Float;

use crate::depth::{resolve, DepthOptions, ResolutionSource};
use crate::error::{Error, Result};
use crate::math::{Real, Vec3};
use crate::tracker::STALE_AFTER;
use crate::types::{
    Detection, KinematicState, PointSource, TrackedPoint, TrackerConfig, Trajectory,
};

type Mat9<T> = SMatrix<T, 9, 9>;
type Vec9<T> = SVector<T, 9>;
type Mat3<T> = SMatrix<T, 3, 3>;
type V3<T> = SVector<T, 3>;

/// 99th percentile of the chi-square distribution with 3 degrees of
/// freedom; squared-Mahalanobis gate for 3D innovations.
pub const CHI2_99_3DOF: f64 = 11.344866730144373;

/// Default white-noise-jerk spectral density, m^2/s^5. Ball flight
/// between contacts is nearly constant-acceleration, but bounces are
/// millisecond-scale velocity reversals; a hot filter stays responsive
/// through them and through occlusion gaps instead of being sandbagged.
pub const DEFAULT_PROCESS_NOISE: f64 = 500.0;

/// Fallback measurement standard deviation when the stream's noise level
/// is unknown.
pub const DEFAULT_MEASUREMENT_SIGMA_M: f64 = 0.01;

/// Floor applied to the measurement sigma so a nominally noise-free
/// stream still yields a positive-definite innovation covariance.
pub const MIN_MEASUREMENT_SIGMA_M: f64 = 1e-6;

const INIT_VELOCITY_STD: f64 = 100.0;
const INIT_ACCEL_STD: f64 = 50.0;

/// Filter tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfParams<T> {
    /// White-noise-jerk spectral density (m^2/s^5).
    pub process_noise: T,
    /// Detection noise standard deviation (m).
    pub measurement_sigma: T,
    /// Squared-Mahalanobis acceptance threshold for innovations.
    pub gate_sq: T,
}

impl<T: Real> Default for KfParams<T> {
    fn default() -> Self {
        Self {
            process_noise: T::of(DEFAULT_PROCESS_NOISE),
            measurement_sigma: T::of(DEFAULT_MEASUREMENT_SIGMA_M),
            gate_sq: T::of(CHI2_99_3DOF),
        }
    }
}

impl<T: Real> KfParams<T> {
    /// Params matched to a known detection noise level.
    pub fn with_sigma(sigma: T) -> Self {
        Self {
            measurement_sigma: sigma,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.process_noise.is_finite() || self.process_noise < T::zero() {
            return Err(Error::InvalidInput(format!(
                "process noise {} must be >= 0",
                self.process_noise
            )));
        }
        if !self.measurement_sigma.is_finite() || self.measurement_sigma < T::zero() {
            return Err(Error::InvalidInput(format!(
                "measurement sigma {} must be >= 0",
                self.measurement_sigma
            )));
        }
        if self.gate_sq.is_nan() || self.gate_sq <= T::zero() {
            return Err(Error::InvalidInput(format!(
                "gate {} must be positive",
                self.gate_sq
            )));
        }
        Ok(())
    }

    fn variance(&self) -> T {
        let sigma = Float::max(self.measurement_sigma, T::of(MIN_MEASUREMENT_SIGMA_M));
        sigma * sigma
    }
}

/// Gaussian belief over position, velocity, and acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState<T: Real + RealField> {
    /// (px, py, pz, vx, vy, vz, ax, ay, az).
    pub mean: Vec9<T>,
    pub covariance: Mat9<T>,
    pub timestamp: T,
}

impl<T: Real + RealField> KalmanState<T> {
    /// A fresh track at a known position: uninformative velocity and
    /// acceleration, position pinned to the measurement noise.
    pub fn from_position(position: Vec3<T>, timestamp: T, params: &KfParams<T>) -> Self {
        let mut mean = Vec9::zeros();
        mean[0] = position.x;
        mean[1] = position.y;
        mean[2] = position.z;
        let mut covariance = Mat9::zeros();
        let pos_var = params.variance();
        let vel_var = T::of(INIT_VELOCITY_STD * INIT_VELOCITY_STD);
        let acc_var = T::of(INIT_ACCEL_STD * INIT_ACCEL_STD);
        for i in 0..3 {
            covariance[(i, i)] = pos_var;
            covariance[(i + 3, i + 3)] = vel_var;
            covariance[(i + 6, i + 6)] = acc_var;
        }
        Self {
            mean,
            covariance,
            timestamp,
        }
    }

    pub fn position(&self) -> Vec3<T> {
        Vec3::new(self.mean[0], self.mean[1], self.mean[2])
    }

    pub fn velocity(&self) -> Vec3<T> {
        Vec3::new(self.mean[3], self.mean[4], self.mean[5])
    }

    pub fn acceleration(&self) -> Vec3<T> {
        Vec3::new(self.mean[6], self.mean[7], self.mean[8])
    }

    fn check_well_formed(&self) -> Result<()> {
        for r in 0..9 {
            for c in 0..r {
                let gap = Float::abs(self.covariance[(r, c)] - self.covariance[(c, r)]);
                if gap.is_nan() || gap > T::of(1e-9) {
                    return Err(Error::NumericalState(format!(
                        "covariance asymmetric at ({r}, {c}): gap {gap}"
                    )));
                }
            }
        }
        if Cholesky::new(self.covariance).is_none() {
            return Err(Error::NumericalState(
                "covariance not positive-definite".into(),
            ));
        }
        Ok(())
    }
}

fn symmetrize<T: Real + RealField>(m: &mut Mat9<T>) {
    let half = T::of(0.5);
    let t = m.transpose();
    for r in 0..9 {
        for c in 0..9 {
            m[(r, c)] = (m[(r, c)] + t[(r, c)]) * half;
        }
    }
}

/// Propagates the belief by `dt` under the constant-acceleration model
/// with white-noise-jerk process noise of spectral density
/// `process_noise`.
pub fn kf_predict<T: Real + RealField>(
    state: &KalmanState<T>,
    dt: T,
    process_noise: T,
) -> Result<KalmanState<T>> {
    if !dt.is_finite() || dt <= T::zero() {
        return Err(Error::InvalidInput(format!(
            "prediction interval {dt} must be positive and finite"
        )));
    }
    if !process_noise.is_finite() || process_noise < T::zero() {
        return Err(Error::InvalidInput(format!(
            "process noise {process_noise} must be >= 0"
        )));
    }
    state.check_well_formed()?;

    let half = T::of(0.5);
    let mut f = Mat9::identity();
    for i in 0..6 {
        f[(i, i + 3)] = dt;
    }
    for i in 0..3 {
        f[(i, i + 6)] = half * dt * dt;
    }

    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    let dt4 = dt3 * dt;
    let dt5 = dt4 * dt;
    let q_pp = process_noise * dt5 / T::of(20.0);
    let q_pv = process_noise * dt4 / T::of(8.0);
    let q_pa = process_noise * dt3 / T::of(6.0);
    let q_vv = process_noise * dt3 / T::of(3.0);
    let q_va = process_noise * dt2 * half;
    let q_aa = process_noise * dt;
    let mut q = Mat9::zeros();
    for i in 0..3 {
        q[(i, i)] = q_pp;
        q[(i + 3, i + 3)] = q_vv;
        q[(i + 6, i + 6)] = q_aa;
        q[(i, i + 3)] = q_pv;
        q[(i + 3, i)] = q_pv;
        q[(i, i + 6)] = q_pa;
        q[(i + 6, i)] = q_pa;
        q[(i + 3, i + 6)] = q_va;
        q[(i + 6, i + 3)] = q_va;
    }

    let mean = f * state.mean;
    let mut covariance = f * state.covariance * f.transpose() + q;
    symmetrize(&mut covariance);
    Ok(KalmanState {
        mean,
        covariance,
        timestamp: state.timestamp + dt,
    })
}

fn innovation<T: Real + RealField>(
    state: &KalmanState<T>,
    measurement: Vec3<T>,
    measurement_variance: T,
) -> Result<(V3<T>, Cholesky<T, Const<3>>)> {
    if !measurement.is_finite() {
        return Err(Error::InvalidInput("non-finite measurement".into()));
    }
    if !measurement_variance.is_finite() || measurement_variance < T::zero() {
        return Err(Error::InvalidInput(format!(
            "measurement variance {measurement_variance} must be >= 0"
        )));
    }
    let y = V3::new(
        measurement.x - state.mean[0],
        measurement.y - state.mean[1],
        measurement.z - state.mean[2],
    );
    let mut s: Mat3<T> = state.covariance.fixed_view::<3, 3>(0, 0).into_owned();
    for i in 0..3 {
        s[(i, i)] += measurement_variance;
    }
    let chol = Cholesky::new(s).ok_or_else(|| {
        Error::NumericalState("singular innovation covariance".into())
    })?;
    Ok((y, chol))
}

/// Squared Mahalanobis distance of a measurement under the predicted
/// belief; this is what the association gate thresholds.
pub fn innovation_distance_sq<T: Real + RealField>(
    state: &KalmanState<T>,
    measurement: Vec3<T>,
    measurement_variance: T,
) -> Result<T> {
    state.check_well_formed()?;
    let (y, chol) = innovation(state, measurement, measurement_variance)?;
    let solved = chol.solve(&y);
    Ok(y.dot(&solved))
}

/// Conditions the belief on a position measurement (Joseph-form update).
pub fn kf_update<T: Real + RealField>(
    state: &KalmanState<T>,
    measurement: Vec3<T>,
    measurement_variance: T,
) -> Result<KalmanState<T>> {
    state.check_well_formed()?;
    let (y, chol) = innovation(state, measurement, measurement_variance)?;

    // K = P H^T S^-1, built by solving S K^T = H P.
    let ph_t = state.covariance.fixed_view::<9, 3>(0, 0).into_owned();
    let k = chol.solve(&ph_t.transpose()).transpose();

    let mean = state.mean + k * y;

    // Joseph form: P = (I - K H) P (I - K H)^T + K R K^T.
    let mut i_kh: Mat9<T> = Mat9::identity();
    for r in 0..9 {
        for c in 0..3 {
            i_kh[(r, c)] -= k[(r, c)];
        }
    }
    let mut covariance =
        i_kh * state.covariance * i_kh.transpose() + k * k.transpose() * measurement_variance;
    symmetrize(&mut covariance);

    Ok(KalmanState {
        mean,
        covariance,
        timestamp: state.timestamp,
    })
}

/// Runs the filter over a full detection stream with the same contract
/// as the physics tracker's run: one point per slot, leading unresolvable
/// frames backfilled, gating by squared Mahalanobis distance, missed or
/// rejected frames emitting the predicted mean.
pub fn run_kf<T: Real + RealField>(
    detections: &[Option<Detection<T>>],
    config: &TrackerConfig<T>,
    params: &KfParams<T>,
) -> Result<Trajectory<T>> {
    config.validate()?;
    params.validate()?;
    if detections.is_empty() {
        return Err(Error::InsufficientData("empty detection stream".into()));
    }
    let depth_options = DepthOptions {
        consistency_threshold: Some(config.gate_threshold),
        ..DepthOptions::default()
    };

    let start = detections
        .iter()
        .position(|d| d.is_some())
        .ok_or_else(|| Error::Initialization("detection stream has no detections at all".into()))?;
    let first = detections[start].as_ref().expect("found above");
    first.validate()?;
    let first_pos = resolve(
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
    })?
    .position;

    let mut state = KalmanState::from_position(first_pos, first.timestamp, params);
    let variance = params.variance();

    let mut points = Vec::with_capacity(detections.len());
    for i in (0..start).rev() {
        let offset = T::from_usize(start - i).expect("offset fits scalar");
        points.push(TrackedPoint {
            frame_index: first.frame_index - (start - i) as u64,
            timestamp: first.timestamp - offset * config.frame_interval,
            position: first_pos,
            velocity: Vec3::zero(),
            source: PointSource::Predicted,
        });
    }
    points.reverse();
    points.push(TrackedPoint {
        frame_index: first.frame_index,
        timestamp: first.timestamp,
        position: first_pos,
        velocity: Vec3::zero(),
        source: PointSource::Measured,
    });

    let mut frame = first.frame_index;
    let mut misses = 0u32;
    let mut stale_at: Option<u64> = None;
    for slot in &detections[start + 1..] {
        let (this_frame, dt) = match slot {
            Some(det) => {
                det.validate()?;
                if det.frame_index <= frame
                    || state.timestamp.partial_cmp(&det.timestamp) != Some(Ordering::Less)
                {
                    return Err(Error::OutOfOrder(format!(
                        "detection frame {} / time {} not after frame {} / time {}",
                        det.frame_index, det.timestamp, frame, state.timestamp
                    )));
                }
                (det.frame_index, det.timestamp - state.timestamp)
            }
            None => (frame + 1, config.frame_interval),
        };

        let prior = KinematicState::new(state.position(), state.velocity(), state.timestamp);
        state = kf_predict(&state, dt, params.process_noise).map_err(|e| e.at_frame(this_frame))?;

        let resolved = slot.as_ref().and_then(|det| {
            resolve(
                det,
                Some(&prior),
                config.gravity,
                config.intrinsics.as_ref(),
                &depth_options,
            )
        });

        let point = match resolved {
            Some(r)
                if innovation_distance_sq(&state, r.position, variance)
                    .map_err(|e| e.at_frame(this_frame))?
                    <= params.gate_sq =>
            {
                state = kf_update(&state, r.position, variance)
                    .map_err(|e| e.at_frame(this_frame))?;
                state.timestamp = slot.as_ref().expect("resolved implies detection").timestamp;
                misses = 0;
                let source = if r.source == ResolutionSource::FallbackDepth {
                    PointSource::Corrected
                } else {
                    PointSource::Measured
                };
                TrackedPoint {
                    frame_index: this_frame,
                    timestamp: state.timestamp,
                    position: state.position(),
                    velocity: state.velocity(),
                    source,
                }
            }
            other => {
                misses += 1;
                if misses == STALE_AFTER && stale_at.is_none() {
                    stale_at = Some(this_frame);
                }
                TrackedPoint {
                    frame_index: this_frame,
                    timestamp: state.timestamp,
                    position: state.position(),
                    velocity: state.velocity(),
                    source: if other.is_some() {
                        PointSource::Corrected
                    } else {
                        PointSource::Predicted
                    },
                }
            }
        };
        frame = this_frame;
        points.push(point);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ade;
    use crate::simulator::{builtin, corrupt, simulate_with_events};
    use crate::tracker::PhysicsTracker;
    use crate::types::CourtGeometry;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fresh(pos: [f64; 3]) -> KalmanState<f64> {
        KalmanState::from_position(
            Vec3::new(pos[0], pos[1], pos[2]),
            0.0,
            &KfParams::default(),
        )
    }

    #[test]
    fn predict_keeps_a_stationary_state_in_place() {
        let state = fresh([1.0, 2.0, 3.0]);
        let out = kf_predict(&state, 0.5, 50.0).unwrap();
        assert_eq!(out.position(), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(out.timestamp, 0.5);
    }

    #[test]
    fn predict_translates_by_velocity() {
        let mut state = fresh([0.0, 0.0, 0.0]);
        state.mean[3] = 1.0;
        let out = kf_predict(&state, 2.0, 50.0).unwrap();
        assert_relative_eq!(out.position().x, 2.0, epsilon = 1e-12);
        assert_eq!(out.position().y, 0.0);
    }

    #[test]
    fn predict_applies_half_accel_dt_squared() {
        let mut state = fresh([0.0, 0.0, 0.0]);
        state.mean[4] = 3.0; // vy
        state.mean[7] = -9.81; // ay
        let out = kf_predict(&state, 0.1, 50.0).unwrap();
        assert_relative_eq!(out.position().y, 3.0 * 0.1 - 0.5 * 9.81 * 0.01, epsilon = 1e-12);
        assert_relative_eq!(out.velocity().y, 3.0 - 0.981, epsilon = 1e-12);
    }

    #[test]
    fn process_noise_strictly_grows_the_covariance_trace() {
        let state = fresh([0.0, 0.0, 0.0]);
        let out = kf_predict(&state, 1.0 / 60.0, 50.0).unwrap();
        assert!(out.covariance.trace() > state.covariance.trace());
    }

    #[test]
    fn nonpositive_dt_is_rejected() {
        let state = fresh([0.0, 0.0, 0.0]);
        assert!(matches!(
            kf_predict(&state, 0.0, 50.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            kf_predict(&state, -0.1, 50.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn zero_innovation_leaves_the_mean_position_unchanged() {
        let state = fresh([1.0, 2.0, 3.0]);
        let out = kf_update(&state, Vec3::new(1.0, 2.0, 3.0), 1e-4).unwrap();
        assert_relative_eq!(out.position().x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(out.position().y, 2.0, epsilon = 1e-12);
        assert_relative_eq!(out.position().z, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn infinite_measurement_noise_means_zero_gain() {
        let state = fresh([1.0, 2.0, 3.0]);
        let out = kf_update(&state, Vec3::new(5.0, 5.0, 5.0), 1e12).unwrap();
        assert_relative_eq!(out.position().x, 1.0, epsilon = 1e-9);
        assert_relative_eq!(out.position().y, 2.0, epsilon = 1e-9);
        assert_relative_eq!(out.position().z, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn update_never_increases_the_trace() {
        let mut state = fresh([0.0, 0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            state = kf_predict(&state, 1.0 / 60.0, 50.0).unwrap();
            let before = state.covariance.trace();
            let z = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen(), rng.gen());
            state = kf_update(&state, z, 1e-4).unwrap();
            assert!(state.covariance.trace() <= before + 1e-12);
        }
    }

    #[test]
    fn repeated_identical_measurements_converge_on_the_measurement() {
        // Matched to a noise-free stream: the variance floor applies.
        let params = KfParams::with_sigma(0.0);
        let mut state =
            KalmanState::from_position(Vec3::new(10.0, 0.0, 0.0), 0.0, &params);
        let target = Vec3::new(0.0, 0.0, 0.0);
        let r = params.variance();
        let mut err = state.position().distance(target);
        for step in 1..=40 {
            state = kf_predict(&state, 1.0 / 60.0, 50.0).unwrap();
            state = kf_update(&state, target, r).unwrap();
            if step % 5 == 0 {
                let now = state.position().distance(target);
                assert!(
                    now <= f64::max(err * 0.5, 1e-9),
                    "step {step}: error {now} vs {err} five steps ago"
                );
                err = now;
            }
        }
        assert!(err < 1e-9, "final error {err}");
    }

    /// Long predict/update alternation keeps the covariance symmetric
    /// and positive-definite (the Joseph form's whole point).
    #[test]
    fn covariance_stays_pd_through_ten_thousand_cycles() {
        let mut state = fresh([0.0, 0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for i in 0..10_000 {
            state = kf_predict(&state, 1.0 / 60.0, 50.0).unwrap();
            if i % 3 != 2 {
                let z = Vec3::new(
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                );
                state = kf_update(&state, z, 1e-4).unwrap();
            }
        }
        for r in 0..9 {
            for c in 0..9 {
                let gap = (state.covariance[(r, c)] - state.covariance[(c, r)]).abs();
                assert!(gap <= 1e-9, "asymmetry {gap} at ({r},{c})");
            }
        }
        assert!(Cholesky::new(state.covariance).is_some());
    }

    #[test]
    fn degenerate_covariance_is_a_numerical_state_error() {
        let mut state = fresh([0.0, 0.0, 0.0]);
        state.covariance = Mat9::zeros();
        assert!(matches!(
            kf_update(&state, Vec3::zero(), 1e-4),
            Err(Error::NumericalState(_))
        ));
        assert!(matches!(
            kf_predict(&state, 0.1, 50.0),
            Err(Error::NumericalState(_))
        ));
    }

    #[test]
    fn negative_measurement_variance_is_invalid_input() {
        let state = fresh([0.0, 0.0, 0.0]);
        assert!(matches!(
            kf_update(&state, Vec3::zero(), -1.0),
            Err(Error::InvalidInput(_))
        ));
    }

    fn linear_stream(n: usize) -> (Vec<Option<Detection<f64>>>, Vec<Vec3<f64>>) {
        let dt = 1.0 / 60.0;
        let v = Vec3::new(3.0, 1.0, -2.0);
        let p0 = Vec3::new(0.0, 50.0, 0.0);
        let mut dets = Vec::new();
        let mut truth = Vec::new();
        for i in 0..n {
            let t = i as f64 * dt;
            let p = p0 + v * t;
            truth.push(p);
            dets.push(Some(Detection::at_world(i as u64, t, p)));
        }
        (dets, truth)
    }

    fn open_config() -> TrackerConfig<f64> {
        let court = CourtGeometry {
            min_corner: Vec3::new(-1000.0, -1000.0, -1000.0),
            max_corner: Vec3::new(1000.0, 1000.0, 1000.0),
            gravity: Vec3::zero(),
            restitution: 0.95,
        };
        TrackerConfig::new(court, 1.0 / 60.0).unwrap()
    }

    #[test]
    fn noiseless_linear_motion_converges_after_burn_in() {
        let (dets, truth) = linear_stream(60);
        let track = run_kf(&dets, &open_config(), &KfParams::default()).unwrap();
        let mut worst = 0.0f64;
        for (point, expected) in track.points.iter().zip(&truth).skip(10) {
            worst = worst.max(point.position.distance(*expected));
        }
        assert!(worst < 1e-3, "worst post-burn-in error {worst}");
    }

    #[test]
    fn all_missing_after_the_first_frame_coasts_forever() {
        let (mut dets, _) = linear_stream(30);
        for slot in dets.iter_mut().skip(1) {
            *slot = None;
        }
        let track = run_kf(&dets, &open_config(), &KfParams::default()).unwrap();
        assert_eq!(track.len(), 30);
        // Initial velocity estimate is zero, so the coast is stationary.
        for p in &track.points[1..] {
            assert_eq!(p.source, PointSource::Predicted);
            assert_eq!(p.position, track.points[0].position);
        }
    }

    #[test]
    fn converged_filter_rejects_a_one_meter_outlier() {
        let (mut dets, truth) = linear_stream(40);
        let outlier = truth[30] + Vec3::new(1.0, 0.0, 0.0);
        dets[30] = Some(Detection::at_world(30, 30.0 / 60.0, outlier));
        let track = run_kf(&dets, &open_config(), &KfParams::default()).unwrap();
        assert_eq!(track.points[30].source, PointSource::Corrected);
        assert!(track.points[30].position.distance(truth[30]) < 0.05);
        assert_eq!(track.points[31].source, PointSource::Measured);
    }

    /// The desk-scale headline: across a bounce with occlusion around it,
    /// the ballistic tracker beats the filter on the same stream.
    #[test]
    fn physics_tracker_beats_the_filter_across_a_bounce() {
        let spec = builtin::<f64>("bounce-multi").unwrap();
        let (truth, events) = simulate_with_events(&spec).unwrap();
        let bounce = events[0].frame_index;
        let mut spec = spec;
        spec.dropout_windows = vec![(bounce - 3, bounce + 3)];
        spec.seed = 9;
        let frames = corrupt(&truth, &spec).unwrap();
        let config = spec.tracker_config().unwrap();

        let physics = PhysicsTracker::run(&frames, &config).unwrap();
        let kf = run_kf(&frames, &config, &KfParams::with_sigma(spec.noise_sigma)).unwrap();
        let physics_ade = ade(&physics, &truth).unwrap();
        let kf_ade = ade(&kf, &truth).unwrap();
        assert!(
            physics_ade < kf_ade,
            "physics {physics_ade} vs filter {kf_ade}"
        );
    }

    #[test]
    fn leading_dropouts_are_backfilled_like_the_physics_tracker() {
        let (mut dets, _) = linear_stream(20);
        dets[0] = None;
        dets[1] = None;
        let track = run_kf(&dets, &open_config(), &KfParams::default()).unwrap();
        assert_eq!(track.len(), 20);
        assert!(track.validate().is_empty());
        assert_eq!(track.points[0].source, PointSource::Predicted);
        assert_eq!(track.points[2].source, PointSource::Measured);
    }
}
