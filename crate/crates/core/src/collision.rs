//! Surface impacts against the axis-aligned court volume.
//!
//! Impacts are instantaneous: the velocity component along the inward
//! surface normal is negated and scaled by the restitution coefficient,
//! while the tangential components pass through untouched. Between
//! impacts motion is the closed-form free flight from [`crate::kinematics`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{predict_state, time_of_impact};
use crate::math::{Axis, Real, Vec3};
use crate::types::{CourtGeometry, KinematicState};

/// More sub-step impacts than this in one step is treated as degenerate
/// geometry (a sliver court or a near-Zeno bounce cascade).
pub const MAX_COLLISIONS_PER_STEP: u32 = 16;

/// Distance (meters) within which a position counts as touching a face.
const CONTACT_EPS_M: f64 = 1e-9;

/// Normal speeds (m/s) at or below this are resting contact, not a bounce.
const REST_SPEED_EPS_MPS: f64 = 1e-9;

/// One impact against a court face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent<T> {
    /// Axis the struck face is perpendicular to.
    pub surface_axis: Axis,
    /// Unit normal of the struck face, pointing into the court.
    pub surface_normal: Vec3<T>,
    /// Where within the step the impact occurred, as a fraction of the
    /// step duration in [0, 1].
    pub impact_fraction: T,
    /// World position of the impact, on the face plane.
    pub impact_point: Vec3<T>,
}

/// A collision event tagged with the frame it belongs to, used to split
/// trajectories into pre/post-impact segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedCollision<T> {
    /// Frame whose step (from the previous frame) contained the impact.
    pub frame_index: u64,
    /// Absolute impact time in seconds.
    #[serde(rename = "time_s")]
    pub time: T,
    pub event: CollisionEvent<T>,
}

/// Reflects `velocity` off a surface with unit inward normal `normal`:
/// the normal component is negated and scaled by `restitution`, the
/// tangential part is preserved (bit-identical for axis-aligned normals).
pub fn reflect_velocity<T: Real>(
    velocity: Vec3<T>,
    normal: Vec3<T>,
    restitution: T,
) -> Result<Vec3<T>> {
    if !velocity.is_finite() {
        return Err(Error::InvalidInput("non-finite velocity".into()));
    }
    if !normal.is_finite() || (normal.norm_squared() - T::one()).abs() > T::of(1e-9) {
        return Err(Error::InvalidInput(format!(
            "surface normal ({}, {}, {}) is not unit length",
            normal.x, normal.y, normal.z
        )));
    }
    if !(restitution > T::zero() && restitution <= T::one()) {
        return Err(Error::InvalidInput(format!(
            "restitution {restitution} outside (0, 1]"
        )));
    }

    // Axis-aligned fast path: touch only the normal component, so the
    // tangential components stay bit-identical and the normal speed is
    // exactly -e * v_n.
    for axis in Axis::ALL {
        let n = normal.axis(axis);
        let others_zero = Axis::ALL
            .into_iter()
            .filter(|a| *a != axis)
            .all(|a| normal.axis(a) == T::zero());
        if others_zero && n != T::zero() {
            let mut out = velocity;
            out.set_axis(axis, -(restitution * velocity.axis(axis)));
            return Ok(out);
        }
    }

    let vn = velocity.dot(normal);
    Ok(velocity - normal * (vn * (T::one() + restitution)))
}

/// The two faces perpendicular to `axis`: (plane coordinate, inward
/// normal sign).
fn faces<T: Real>(court: &CourtGeometry<T>, axis: Axis) -> [(T, T); 2] {
    [
        (court.min_corner.axis(axis), T::one()),
        (court.max_corner.axis(axis), -T::one()),
    ]
}

/// How far `p` sits beyond the face (positive = outside the court).
fn outward_depth<T: Real>(p: T, plane: T, inward_sign: T) -> T {
    if inward_sign > T::zero() {
        plane - p
    } else {
        p - plane
    }
}

/// Tests whether the straight segment `p_prev -> p_next` leaves the court,
/// and if so reports the first face crossed. `p_prev` must be strictly
/// inside. Simultaneous corner crossings resolve to the lowest axis.
pub fn detect_collision<T: Real>(
    p_prev: Vec3<T>,
    p_next: Vec3<T>,
    court: &CourtGeometry<T>,
) -> Result<Option<CollisionEvent<T>>> {
    if !(p_prev.is_finite() && p_next.is_finite()) {
        return Err(Error::InvalidInput("non-finite segment endpoint".into()));
    }
    if !court.strictly_contains(p_prev) {
        return Err(Error::OutsideCourt(format!(
            "segment start ({}, {}, {}) is not strictly inside the court",
            p_prev.x, p_prev.y, p_prev.z
        )));
    }

    let delta = p_next - p_prev;
    let mut best: Option<(T, Axis, T, T)> = None;
    for axis in Axis::ALL {
        let d = delta.axis(axis);
        if d == T::zero() {
            continue;
        }
        for (plane, inward) in faces(court, axis) {
            // Moving toward this face and ending on or beyond it?
            let toward = if inward > T::zero() {
                d < T::zero()
            } else {
                d > T::zero()
            };
            if !toward || outward_depth(p_next.axis(axis), plane, inward) < T::zero() {
                continue;
            }
            let fraction = (plane - p_prev.axis(axis)) / d;
            if fraction >= T::zero()
                && fraction <= T::one()
                && best.is_none_or(|(f, ..)| fraction < f)
            {
                best = Some((fraction, axis, plane, inward));
            }
        }
    }

    Ok(best.map(|(fraction, axis, plane, inward)| {
        let mut impact_point = p_prev + delta * fraction;
        impact_point.set_axis(axis, plane);
        CollisionEvent {
            surface_axis: axis,
            surface_normal: Vec3::axis_unit(axis, inward),
            impact_fraction: fraction,
            impact_point,
        }
    }))
}

/// Advances `state` by `dt` seconds of free flight inside the court,
/// reflecting off faces as they are reached. Returns the final state and
/// the impacts in time order.
///
/// Resting contact is stable: an object sitting on a face with negligible
/// normal speed, pressed into it by gravity, stays on the face instead of
/// tunneling or bouncing forever.
pub fn step_with_collisions<T: Real>(
    state: &KinematicState<T>,
    dt: T,
    court: &CourtGeometry<T>,
) -> Result<(KinematicState<T>, Vec<CollisionEvent<T>>)> {
    if !state.is_finite() {
        return Err(Error::InvalidInput("non-finite kinematic state".into()));
    }
    if !dt.is_finite() || dt <= T::zero() {
        return Err(Error::InvalidInput(format!(
            "step duration {dt} must be positive and finite"
        )));
    }
    court.validate()?;
    let contact_eps = T::of(CONTACT_EPS_M);
    if !court.contains(state.position, contact_eps) {
        return Err(Error::OutsideCourt(format!(
            "position ({}, {}, {}) starts outside the court",
            state.position.x, state.position.y, state.position.z
        )));
    }

    let rest_eps = T::of(REST_SPEED_EPS_MPS);
    let mut s = *state;
    let mut events: Vec<CollisionEvent<T>> = Vec::new();
    let mut remaining = dt;
    let mut impacts = 0u32;

    loop {
        // Reflect off any face we are touching (or have just penetrated)
        // while still moving outward. Handles fresh impacts after an
        // advance and simultaneous corner contacts in one place.
        loop {
            let mut reflected = false;
            for axis in Axis::ALL {
                for (plane, inward) in faces(court, axis) {
                    let depth = outward_depth(s.position.axis(axis), plane, inward);
                    let v = s.velocity.axis(axis);
                    let moving_out = if inward > T::zero() {
                        v < -rest_eps
                    } else {
                        v > rest_eps
                    };
                    if depth >= -contact_eps && moving_out {
                        impacts += 1;
                        if impacts > MAX_COLLISIONS_PER_STEP {
                            return Err(Error::PathologicalGeometry {
                                max: MAX_COLLISIONS_PER_STEP,
                            });
                        }
                        s.position.set_axis(axis, plane);
                        let normal = Vec3::axis_unit(axis, inward);
                        s.velocity = reflect_velocity(s.velocity, normal, court.restitution)?;
                        let fraction = ((dt - remaining) / dt).min(T::one()).max(T::zero());
                        events.push(CollisionEvent {
                            surface_axis: axis,
                            surface_normal: normal,
                            impact_fraction: fraction,
                            impact_point: s.position,
                        });
                        reflected = true;
                    }
                }
            }
            if !reflected {
                break;
            }
        }

        // Resting contact: cancel gravity into faces we are lying on.
        let mut g_eff = court.gravity;
        for axis in Axis::ALL {
            for (plane, inward) in faces(court, axis) {
                let depth = outward_depth(s.position.axis(axis), plane, inward);
                let v = s.velocity.axis(axis);
                let g = court.gravity.axis(axis);
                let presses_out = if inward > T::zero() {
                    g < T::zero()
                } else {
                    g > T::zero()
                };
                if depth.abs() <= contact_eps && v.abs() <= rest_eps && presses_out {
                    s.position.set_axis(axis, plane);
                    s.velocity.set_axis(axis, T::zero());
                    g_eff.set_axis(axis, T::zero());
                }
            }
        }

        if remaining.is_nan() || remaining <= T::zero() {
            break;
        }

        // Earliest genuine impact within the remaining time: the object
        // must reach the face plane and be moving outward when it does.
        let mut first: Option<(T, Axis, T)> = None;
        for axis in Axis::ALL {
            for (plane, inward) in faces(court, axis) {
                if let Some(t) = time_of_impact(&s, axis, plane, g_eff)? {
                    if t > remaining {
                        continue;
                    }
                    let v_at = s.velocity.axis(axis) + g_eff.axis(axis) * t;
                    let outward = if inward > T::zero() {
                        v_at < T::zero()
                    } else {
                        v_at > T::zero()
                    };
                    if outward && first.is_none_or(|(bt, ..)| t < bt) {
                        first = Some((t, axis, plane));
                    }
                }
            }
        }

        match first {
            None => {
                s = predict_state(&s, remaining, g_eff)?;
                remaining = T::zero();
            }
            Some((t, axis, plane)) => {
                s = predict_state(&s, t, g_eff)?;
                // Land exactly on the face; the reflection happens at the
                // top of the next iteration.
                s.position.set_axis(axis, plane);
                remaining -= t;
            }
        }
    }

    // Sub-step times accumulate rounding; pin the endpoint exactly.
    s.timestamp = state.timestamp + dt;
    Ok((s, events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_court() -> CourtGeometry<f64> {
        CourtGeometry::new(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(10.0, 10.0, 10.0),
            Vec3::standard_gravity(),
            0.95,
        )
        .unwrap()
    }

    #[test]
    fn floor_bounce_reverses_and_scales_the_normal_component() {
        let v = reflect_velocity(Vec3::new(0.0, -5.0, 0.0), Vec3::new(0.0, 1.0, 0.0), 0.95)
            .unwrap();
        assert_eq!(v, Vec3::new(0.0, 4.75, 0.0));
    }

    #[test]
    fn tangential_components_are_bit_identical() {
        let v_in: Vec3<f64> = Vec3::new(3.0, -5.0, 2.0);
        let v = reflect_velocity(v_in, Vec3::new(0.0, 1.0, 0.0), 0.95).unwrap();
        assert_eq!(v.x.to_bits(), v_in.x.to_bits());
        assert_eq!(v.z.to_bits(), v_in.z.to_bits());
        assert_eq!(v.y, 4.75);
    }

    #[test]
    fn non_unit_normal_is_rejected() {
        let r = reflect_velocity(Vec3::new(0.0, -5.0, 0.0), Vec3::new(0.0, 2.0, 0.0), 0.95);
        assert!(r.is_err());
        let r = reflect_velocity(Vec3::new(0.0, -5.0, 0.0), Vec3::zero(), 0.95);
        assert!(r.is_err());
    }

    #[test]
    fn perfect_restitution_reflection_is_an_involution() {
        let v = Vec3::new(3.25, -7.5, 1.125);
        let n = Vec3::new(0.0, 1.0, 0.0);
        let twice =
            reflect_velocity(reflect_velocity(v, n, 1.0).unwrap(), n, 1.0).unwrap();
        assert_eq!(twice, v);
    }

    #[test]
    fn oblique_unit_normal_preserves_tangential_speed() {
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let n = Vec3::new(inv_sqrt2, inv_sqrt2, 0.0);
        let v = Vec3::new(-3.0, -1.0, 2.0);
        let out = reflect_velocity(v, n, 1.0).unwrap();
        // Normal speed preserved at e = 1, tangential untouched.
        assert_relative_eq!(out.dot(n), -v.dot(n), max_relative = 1e-12);
        let tang_in = v - n * v.dot(n);
        let tang_out = out - n * out.dot(n);
        assert_relative_eq!(tang_in.x, tang_out.x, epsilon = 1e-12);
        assert_relative_eq!(tang_in.y, tang_out.y, epsilon = 1e-12);
    }

    #[test]
    fn downward_segment_crosses_the_floor_at_its_midpoint() {
        let court = unit_court();
        let hit = detect_collision(
            Vec3::new(5.0, 0.5, 5.0),
            Vec3::new(5.0, -0.5, 5.0),
            &court,
        )
        .unwrap()
        .unwrap();
        assert_eq!(hit.surface_axis, Axis::Y);
        assert_eq!(hit.surface_normal, Vec3::new(0.0, 1.0, 0.0));
        assert_relative_eq!(hit.impact_fraction, 0.5, max_relative = 1e-12);
        assert_eq!(hit.impact_point, Vec3::new(5.0, 0.0, 5.0));
    }

    #[test]
    fn interior_segment_reports_no_collision() {
        let court = unit_court();
        let hit = detect_collision(
            Vec3::new(2.0, 2.0, 2.0),
            Vec3::new(8.0, 8.0, 8.0),
            &court,
        )
        .unwrap();
        assert!(hit.is_none());
    }

    #[test]
    fn exact_corner_hit_reports_the_lowest_axis_face() {
        let court = unit_court();
        // Crosses x = 10 and y = 10 at the same fraction.
        let hit = detect_collision(
            Vec3::new(9.0, 9.0, 5.0),
            Vec3::new(11.0, 11.0, 5.0),
            &court,
        )
        .unwrap()
        .unwrap();
        assert_eq!(hit.surface_axis, Axis::X);
        assert_eq!(hit.surface_normal, Vec3::new(-1.0, 0.0, 0.0));
    }

    #[test]
    fn segment_starting_outside_is_an_invalid_state() {
        let court = unit_court();
        let r = detect_collision(
            Vec3::new(-1.0, 5.0, 5.0),
            Vec3::new(5.0, 5.0, 5.0),
            &court,
        );
        assert!(matches!(r, Err(Error::OutsideCourt(_))));
    }

    #[test]
    fn ball_at_rest_on_the_floor_stays_at_rest() {
        let court = unit_court();
        let s = KinematicState::new(Vec3::new(5.0, 0.0, 5.0), Vec3::zero(), 0.0);
        let (out, events) = step_with_collisions(&s, 0.25, &court).unwrap();
        assert!(events.is_empty());
        assert_eq!(out.position, s.position);
        assert_eq!(out.velocity, s.velocity);
        assert_eq!(out.timestamp, 0.25);
    }

    #[test]
    fn drop_with_perfect_restitution_exits_at_entry_speed() {
        let mut court = unit_court();
        court.restitution = 1.0;
        let s = KinematicState::new(Vec3::new(5.0, 1.0, 5.0), Vec3::zero(), 0.0);
        // 1 m drop takes ~0.45 s; step past the bounce.
        let (out, events) = step_with_collisions(&s, 0.6, &court).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].surface_axis, Axis::Y);
        let impact_speed = (2.0f64 * 9.81 * 1.0).sqrt();
        let t_impact = (2.0f64 / 9.81).sqrt();
        let expected_v = impact_speed - 9.81 * (0.6 - t_impact);
        assert_relative_eq!(out.velocity.y, expected_v, max_relative = 1e-9);
        // Energy check: speed at equal height is equal.
        let e0 = 9.81 * 1.0;
        let e1 = 0.5 * out.velocity.norm_squared() + 9.81 * out.position.y;
        assert_relative_eq!(e0, e1, max_relative = 1e-9);
    }

    #[test]
    fn wall_impact_scales_only_the_perpendicular_velocity() {
        let court = unit_court();
        let s = KinematicState::new(
            Vec3::new(9.5, 5.0, 5.0),
            Vec3::new(10.0, 0.0, 0.0),
            0.0,
        );
        let (out, events) = step_with_collisions(&s, 0.1, &court).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].surface_axis, Axis::X);
        assert_eq!(events[0].surface_normal, Vec3::new(-1.0, 0.0, 0.0));
        assert_relative_eq!(events[0].impact_fraction, 0.5, max_relative = 1e-9);
        assert_relative_eq!(out.velocity.x, -9.5, max_relative = 1e-12);
        assert_eq!(out.velocity.z, 0.0);
    }

    #[test]
    fn bounce_cascade_beyond_the_cap_is_pathological() {
        let tiny = CourtGeometry::new(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.001, 1.0, 1.0),
            Vec3::zero(),
            0.95,
        )
        .unwrap();
        let s = KinematicState::new(
            Vec3::new(0.0005, 0.5, 0.5),
            Vec3::new(100.0, 0.0, 0.0),
            0.0,
        );
        let r = step_with_collisions(&s, 1.0, &tiny);
        assert!(matches!(r, Err(Error::PathologicalGeometry { .. })));
    }

    #[test]
    fn multi_bounce_step_keeps_the_ball_inside() {
        let court = unit_court();
        let s = KinematicState::new(
            Vec3::new(1.0, 3.0, 2.0),
            Vec3::new(25.0, -5.0, 18.0),
            0.0,
        );
        let (out, events) = step_with_collisions(&s, 1.5, &court).unwrap();
        assert!(!events.is_empty());
        assert!(court.contains(out.position, 1e-9));
        let mut last = 0.0;
        for e in &events {
            assert!(e.impact_fraction >= last && e.impact_fraction <= 1.0);
            last = e.impact_fraction;
            assert!((e.surface_normal.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rolling_into_a_wall_reflects_while_staying_on_the_floor() {
        let court = unit_court();
        let s = KinematicState::new(
            Vec3::new(9.0, 0.0, 5.0),
            Vec3::new(4.0, 0.0, 0.0),
            0.0,
        );
        let (out, events) = step_with_collisions(&s, 0.5, &court).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].surface_axis, Axis::X);
        assert_eq!(out.position.y, 0.0);
        assert_relative_eq!(out.velocity.x, -3.8, max_relative = 1e-12);
    }
}
