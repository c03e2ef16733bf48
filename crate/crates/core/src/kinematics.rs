//! Ballistic motion under constant gravity.
//!
//! Between surface contacts the object is in free flight, so position is
//! a closed-form quadratic in time and velocity is linear. Everything in
//! this module is exact up to floating-point rounding; there is no
//! numerical integration.

use crate::error::{Error, Result};
use crate::math::{Axis, Real, Vec3};
use crate::types::KinematicState;

/// Impact-time roots smaller than this (seconds) are treated as "already
/// on the plane" and skipped, so a state that starts exactly on a surface
/// does not re-collide with it at t = 0.
pub const TOI_EPS_S: f64 = 1e-9;

fn check_state<T: Real>(state: &KinematicState<T>) -> Result<()> {
    if !state.is_finite() {
        return Err(Error::InvalidInput("non-finite kinematic state".into()));
    }
    Ok(())
}

fn check_dt<T: Real>(dt: T) -> Result<()> {
    if !dt.is_finite() || dt < T::zero() {
        return Err(Error::InvalidInput(format!(
            "time step {dt} must be finite and non-negative"
        )));
    }
    Ok(())
}

/// Position after `dt` seconds of free flight:
/// `p = p0 + v0*dt + g*dt^2/2`.
pub fn predict_position<T: Real>(
    state: &KinematicState<T>,
    dt: T,
    gravity: Vec3<T>,
) -> Result<Vec3<T>> {
    check_state(state)?;
    check_dt(dt)?;
    if !gravity.is_finite() {
        return Err(Error::InvalidInput("non-finite gravity".into()));
    }
    let half = T::of(0.5);
    Ok(state.position + state.velocity * dt + gravity * (half * dt * dt))
}

/// Full state after `dt` seconds of free flight: position as in
/// [`predict_position`], velocity advanced by `g*dt`, timestamp by `dt`.
pub fn predict_state<T: Real>(
    state: &KinematicState<T>,
    dt: T,
    gravity: Vec3<T>,
) -> Result<KinematicState<T>> {
    let position = predict_position(state, dt, gravity)?;
    Ok(KinematicState {
        position,
        velocity: state.velocity + gravity * dt,
        timestamp: state.timestamp + dt,
    })
}

/// Average velocity between two timed positions: `(p_j - p_i) / (t_j - t_i)`.
///
/// For constant-acceleration motion this equals the instantaneous
/// velocity at the midpoint `(t_i + t_j) / 2` exactly.
pub fn estimate_velocity<T: Real>(p_i: Vec3<T>, p_j: Vec3<T>, t_i: T, t_j: T) -> Result<Vec3<T>> {
    if !(p_i.is_finite() && p_j.is_finite() && t_i.is_finite() && t_j.is_finite()) {
        return Err(Error::InvalidInput(
            "non-finite input to velocity estimate".into(),
        ));
    }
    if t_j <= t_i {
        return Err(Error::DegenerateInterval);
    }
    Ok((p_j - p_i) / (t_j - t_i))
}

/// Earliest future time at which the free-flight path crosses the plane
/// `axis = plane_value`, or `None` if it never does.
///
/// Solves `g_a/2 * t^2 + v_a * t + (p_a - plane) = 0` per axis with the
/// numerically stable quadratic form. Roots below [`TOI_EPS_S`] are
/// skipped so a state resting on the plane is not an instant impact.
pub fn time_of_impact<T: Real>(
    state: &KinematicState<T>,
    plane_axis: Axis,
    plane_value: T,
    gravity: Vec3<T>,
) -> Result<Option<T>> {
    check_state(state)?;
    if !(plane_value.is_finite() && gravity.is_finite()) {
        return Err(Error::InvalidInput("non-finite plane or gravity".into()));
    }

    let eps = T::of(TOI_EPS_S);
    let a = T::of(0.5) * gravity.axis(plane_axis);
    let b = state.velocity.axis(plane_axis);
    let c = state.position.axis(plane_axis) - plane_value;

    let mut best: Option<T> = None;
    let mut consider = |t: T| {
        if t > eps && best.is_none_or(|cur| t < cur) {
            best = Some(t);
        }
    };

    if a == T::zero() {
        // Linear motion along this axis.
        if b != T::zero() {
            consider(-c / b);
        }
    } else {
        let disc = b * b - T::of(4.0) * a * c;
        if disc >= T::zero() {
            // q-form avoids cancellation between -b and the square root.
            let sqrt_disc = disc.sqrt();
            let q = if b >= T::zero() {
                -(b + sqrt_disc) / T::of(2.0)
            } else {
                -(b - sqrt_disc) / T::of(2.0)
            };
            consider(q / a);
            if q != T::zero() {
                consider(c / q);
            }
        }
    }

    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn state(p: Vec3<f64>, v: Vec3<f64>, t: f64) -> KinematicState<f64> {
        KinematicState::new(p, v, t)
    }

    fn g() -> Vec3<f64> {
        Vec3::standard_gravity()
    }

    #[test]
    fn one_second_of_flight_drops_by_half_g() {
        // p0 = 0, v0 = (2, 10, 0), dt = 1: x = 2, y = 10 - 9.81/2 = 5.095.
        let s = state(Vec3::zero(), Vec3::new(2.0, 10.0, 0.0), 0.0);
        let p = predict_position(&s, 1.0, g()).unwrap();
        assert_relative_eq!(p.x, 2.0, max_relative = 1e-12);
        assert_relative_eq!(p.y, 5.095, max_relative = 1e-12);
        assert_eq!(p.z, 0.0);
    }

    #[test]
    fn zero_dt_is_identity() {
        let s = state(Vec3::new(1.0, 2.0, 3.0), Vec3::new(-4.0, 5.0, 6.0), 7.0);
        assert_eq!(predict_position(&s, 0.0, g()).unwrap(), s.position);
        let next = predict_state(&s, 0.0, g()).unwrap();
        assert_eq!(next.position, s.position);
        assert_eq!(next.velocity, s.velocity);
        assert_eq!(next.timestamp, s.timestamp);
    }

    #[test]
    fn at_rest_with_zero_gravity_nothing_moves() {
        let s = state(Vec3::new(1.0, 2.0, 3.0), Vec3::zero(), 0.0);
        let p = predict_position(&s, 10.0, Vec3::zero()).unwrap();
        assert_eq!(p, s.position);
    }

    #[test]
    fn velocity_picks_up_g_dt() {
        let s = state(Vec3::zero(), Vec3::new(0.0, 10.0, 0.0), 0.0);
        let next = predict_state(&s, 1.0, g()).unwrap();
        assert_relative_eq!(next.velocity.y, 0.19, max_relative = 1e-12);
        assert_eq!(next.velocity.x, 0.0);
        assert_eq!(next.timestamp, 1.0);
    }

    #[test]
    fn non_finite_state_is_rejected() {
        let s = state(Vec3::new(f64::NAN, 0.0, 0.0), Vec3::zero(), 0.0);
        assert!(predict_position(&s, 1.0, g()).is_err());
        let s = state(Vec3::zero(), Vec3::zero(), 0.0);
        assert!(predict_position(&s, f64::INFINITY, g()).is_err());
        assert!(predict_position(&s, -1.0, g()).is_err());
    }

    #[test]
    fn displacement_over_time_gives_velocity() {
        let v =
            estimate_velocity(Vec3::zero(), Vec3::new(1.0, 2.0, 3.0), 0.0, 1.0).unwrap();
        assert_eq!(v, Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn degenerate_interval_is_an_error() {
        let r = estimate_velocity(Vec3::zero(), Vec3::new(1.0, 0.0, 0.0), 1.0, 1.0);
        assert!(matches!(r, Err(Error::DegenerateInterval)));
        let r = estimate_velocity(Vec3::zero(), Vec3::new(1.0, 0.0, 0.0), 2.0, 1.0);
        assert!(matches!(r, Err(Error::DegenerateInterval)));
    }

    #[test]
    fn free_fall_hits_the_floor_at_sqrt_2h_over_g() {
        // Drop from 1 m: t = sqrt(2/9.81) = 0.45152 s.
        let s = state(Vec3::new(0.0, 1.0, 0.0), Vec3::zero(), 0.0);
        let t = time_of_impact(&s, Axis::Y, 0.0, g()).unwrap().unwrap();
        assert_relative_eq!(t, 0.45152, max_relative = 1e-4);
        assert_relative_eq!(t, (2.0 / 9.81f64).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn linear_axis_impact_is_distance_over_speed() {
        // No gravity on x: wall at x = 2, speed 1 -> t = 2.
        let s = state(Vec3::zero(), Vec3::new(1.0, 0.0, 0.0), 0.0);
        let t = time_of_impact(&s, Axis::X, 2.0, g()).unwrap().unwrap();
        assert_relative_eq!(t, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn receding_from_the_plane_never_impacts() {
        let s = state(Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 1.0, 0.0), 0.0);
        // Moving up with gravity off: never returns to y = 0.
        let t = time_of_impact(&s, Axis::Y, 0.0, Vec3::zero()).unwrap();
        assert!(t.is_none());
    }

    #[test]
    fn thrown_up_returns_to_launch_height_at_2v_over_g() {
        let s = state(Vec3::zero(), Vec3::new(0.0, 5.0, 0.0), 0.0);
        let t = time_of_impact(&s, Axis::Y, 0.0, g()).unwrap().unwrap();
        assert_relative_eq!(t, 2.0 * 5.0 / 9.81, max_relative = 1e-12);
    }

    #[test]
    fn resting_on_the_plane_is_not_an_impact() {
        // On the floor, zero vertical velocity: the only root is t = 0,
        // which is below the epsilon and skipped.
        let s = state(Vec3::zero(), Vec3::new(3.0, 0.0, 0.0), 0.0);
        let t = time_of_impact(&s, Axis::Y, 0.0, Vec3::zero()).unwrap();
        assert!(t.is_none());
    }

    #[test]
    fn impact_position_lands_on_the_plane() {
        let s = state(Vec3::new(0.3, 2.0, -1.0), Vec3::new(4.0, -1.0, 2.0), 0.0);
        let t = time_of_impact(&s, Axis::Y, 0.5, g()).unwrap().unwrap();
        let p = predict_position(&s, t, g()).unwrap();
        assert!((p.y - 0.5).abs() < 1e-9);
    }

    #[test]
    fn prediction_composes_like_a_semigroup() {
        // predict(s, a + b) == predict(predict(s, a), b)
        let s = state(Vec3::new(1.0, 4.0, 2.0), Vec3::new(12.0, 3.0, -7.0), 0.5);
        let (a, b) = (0.325, 0.175);
        let direct = predict_state(&s, a + b, g()).unwrap();
        let stepped = predict_state(&predict_state(&s, a, g()).unwrap(), b, g()).unwrap();
        assert_relative_eq!(direct.position.x, stepped.position.x, max_relative = 1e-12);
        assert_relative_eq!(direct.position.y, stepped.position.y, max_relative = 1e-12);
        assert_relative_eq!(direct.position.z, stepped.position.z, max_relative = 1e-12);
        assert_relative_eq!(direct.velocity.y, stepped.velocity.y, max_relative = 1e-12);
    }

    #[test]
    fn central_difference_matches_analytic_velocity() {
        let s = state(Vec3::new(0.0, 3.0, 0.0), Vec3::new(5.0, 2.0, -1.0), 0.0);
        let t = 0.4;
        let h = 0.01;
        let ahead = predict_position(&s, t + h, g()).unwrap();
        let behind = predict_position(&s, t - h, g()).unwrap();
        let fd = estimate_velocity(behind, ahead, t - h, t + h).unwrap();
        let analytic = predict_state(&s, t, g()).unwrap().velocity;
        // Exact for quadratic motion, up to rounding.
        assert_relative_eq!(fd.x, analytic.x, max_relative = 1e-9);
        assert_relative_eq!(fd.y, analytic.y, max_relative = 1e-9);
        assert_relative_eq!(fd.z, analytic.z, max_relative = 1e-9);
    }

    #[test]
    fn works_at_single_precision() {
        let s: KinematicState<f32> = KinematicState::new(
            Vec3::zero(),
            Vec3::new(2.0, 10.0, 0.0),
            0.0,
        );
        let p = predict_position(&s, 1.0, Vec3::standard_gravity()).unwrap();
        assert!((p.y - 5.095).abs() < 1e-5);
    }
}
