//! Pinhole deprojection and recovery of 3D positions from detections
//! whose depth may be missing or garbage.
//!
//! The camera frame is identified with the world frame: +z along the
//! optical axis, pixel (cx, cy) on it. When a detection's depth is
//! unusable, the object's distance is synthesized from the kinematic
//! prior instead — free flight gives a z estimate, and the pixel ray
//! pins down x and y at that distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::predict_position;
use crate::math::{Real, Vec3};
use crate::types::{Detection, KinematicState};

/// Depth readings outside this range (meters) are sensor garbage:
/// closer than any playable shot or beyond any court.
pub const DEPTH_VALID_MIN_M: f64 = 0.1;
pub const DEPTH_VALID_MAX_M: f64 = 50.0;

/// Pinhole camera intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics<T> {
    #[serde(rename = "fx_px")]
    pub fx: T,
    #[serde(rename = "fy_px")]
    pub fy: T,
    #[serde(rename = "cx_px")]
    pub cx: T,
    #[serde(rename = "cy_px")]
    pub cy: T,
    #[serde(rename = "width_px")]
    pub width: u32,
    #[serde(rename = "height_px")]
    pub height: u32,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: u32, height: u32) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > T::zero() && self.fy > T::zero())
            || !self.fx.is_finite()
            || !self.fy.is_finite()
        {
            return Err(Error::InvalidInput(
                "focal lengths must be positive and finite".into(),
            ));
        }
        let w = T::from_u32(self.width).expect("width fits scalar");
        let h = T::from_u32(self.height).expect("height fits scalar");
        if !(self.cx >= T::zero() && self.cx < w && self.cy >= T::zero() && self.cy < h) {
            return Err(Error::InvalidInput(
                "principal point must lie inside the image".into(),
            ));
        }
        Ok(())
    }
}

/// Back-projects pixel (u, v) at `depth` meters into the camera frame:
/// `x = (u - cx) * d / fx`, `y = (v - cy) * d / fy`, `z = d`.
pub fn deproject<T: Real>(u: T, v: T, depth: T, intr: &CameraIntrinsics<T>) -> Result<Vec3<T>> {
    if !depth.is_finite() || depth <= T::zero() {
        return Err(Error::InvalidDepth(format!(
            "depth {depth} is not a finite positive distance"
        )));
    }
    if !(u.is_finite() && v.is_finite()) {
        return Err(Error::InvalidInput("non-finite pixel coordinates".into()));
    }
    Ok(Vec3::new(
        (u - intr.cx) * depth / intr.fx,
        (v - intr.cy) * depth / intr.fy,
        depth,
    ))
}

/// Forward projection, the inverse of [`deproject`]. Returns `None` for
/// points at or behind the camera plane or outside the image bounds.
pub fn project<T: Real>(p: Vec3<T>, intr: &CameraIntrinsics<T>) -> Option<(T, T)> {
    if !p.is_finite() || p.z <= T::zero() {
        return None;
    }
    let u = intr.fx * p.x / p.z + intr.cx;
    let v = intr.fy * p.y / p.z + intr.cy;
    let w = T::from_u32(intr.width).expect("width fits scalar");
    let h = T::from_u32(intr.height).expect("height fits scalar");
    if u >= T::zero() && u < w && v >= T::zero() && v < h {
        Some((u, v))
    } else {
        None
    }
}

/// How a resolved position was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolutionSource {
    /// The detection carried a world-space position.
    World,
    /// Deprojected from pixel + measured depth.
    MeasuredDepth,
    /// Depth was unusable; z came from the kinematic prior.
    FallbackDepth,
}

/// A resolved 3D position plus its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved<T> {
    pub position: Vec3<T>,
    pub source: ResolutionSource,
}

impl<T> Resolved<T> {
    /// True when the measured depth was discarded and replaced by the
    /// kinematic estimate.
    pub fn depth_replaced(&self) -> bool {
        matches!(self.source, ResolutionSource::FallbackDepth)
    }
}

/// Knobs for depth validity checking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthOptions<T> {
    /// Valid measured-depth range in meters.
    pub min_depth: T,
    pub max_depth: T,
    /// When set, a measured depth differing from the prior's predicted z
    /// by more than this is treated as invalid (temporal consistency).
    /// `None` disables the check, in which case a valid measured depth is
    /// resolved identically with or without a prior.
    pub consistency_threshold: Option<T>,
}

impl<T: Real> Default for DepthOptions<T> {
    fn default() -> Self {
        Self {
            min_depth: T::of(DEPTH_VALID_MIN_M),
            max_depth: T::of(DEPTH_VALID_MAX_M),
            consistency_threshold: None,
        }
    }
}

/// Resolves a detection to a 3D position if possible, with provenance.
///
/// Precedence: an explicit world position wins; then pixel + valid depth;
/// then pixel + prior-predicted z (free flight from `prior` to the
/// detection timestamp); otherwise unresolvable.
pub fn resolve<T: Real>(
    detection: &Detection<T>,
    prior: Option<&KinematicState<T>>,
    gravity: Vec3<T>,
    intr: Option<&CameraIntrinsics<T>>,
    options: &DepthOptions<T>,
) -> Option<Resolved<T>> {
    if let Some(p) = detection.world_position {
        return Some(Resolved {
            position: p,
            source: ResolutionSource::World,
        });
    }

    let (u, v) = detection.pixel_center?;
    let intr = intr?;

    // The prior's z estimate at the detection time, used both for the
    // consistency check and as the fallback depth. Shares the free-flight
    // math with the rest of the crate, so the fallback z is exactly what
    // the tracker would predict.
    let predicted_z = prior.and_then(|state| {
        let dt = detection.timestamp - state.timestamp;
        if !dt.is_finite() || dt < T::zero() {
            return None;
        }
        predict_position(state, dt, gravity).ok().map(|p| p.z)
    });

    if let Some(depth) = detection.depth {
        let in_range =
            depth.is_finite() && depth >= options.min_depth && depth <= options.max_depth;
        let consistent = match (options.consistency_threshold, predicted_z) {
            (Some(threshold), Some(z)) => (depth - z).abs() <= threshold,
            _ => true,
        };
        if in_range && consistent {
            return deproject(u, v, depth, intr).ok().map(|position| Resolved {
                position,
                source: ResolutionSource::MeasuredDepth,
            });
        }
    }

    // Fallback: synthesize depth from the prior.
    let z = predicted_z?;
    if !z.is_finite() || z <= T::zero() {
        return None;
    }
    deproject(u, v, z, intr).ok().map(|position| Resolved {
        position,
        source: ResolutionSource::FallbackDepth,
    })
}

/// [`resolve`] with default options, reduced to just the position.
pub fn resolve_position<T: Real>(
    detection: &Detection<T>,
    prior: Option<&KinematicState<T>>,
    gravity: Vec3<T>,
    intr: Option<&CameraIntrinsics<T>>,
) -> Option<Vec3<T>> {
    resolve(detection, prior, gravity, intr, &DepthOptions::default()).map(|r| r.position)
}

/// A dense depth image: row-major meters, NaN for missing returns.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap<T> {
    pub width: u32,
    pub height: u32,
    pub values: Vec<T>,
}

impl<T: Real> DepthMap<T> {
    pub fn new(width: u32, height: u32, values: Vec<T>) -> Result<Self> {
        if values.len() != (width as usize) * (height as usize) {
            return Err(Error::InvalidInput(format!(
                "depth map payload has {} values, expected {}",
                values.len(),
                (width as usize) * (height as usize)
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Checks the payload length against the stated dimensions.
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != (self.width as usize) * (self.height as usize) {
            return Err(Error::InvalidInput(format!(
                "depth map payload has {} values, expected {}",
                self.values.len(),
                (self.width as usize) * (self.height as usize)
            )));
        }
        Ok(())
    }

    fn at(&self, x: i64, y: i64) -> Option<T> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return None;
        }
        Some(self.values[y as usize * self.width as usize + x as usize])
    }

    /// Depth at the pixel containing (u, v). When `median3` is set, the
    /// median of the finite values in the 3x3 neighborhood is returned
    /// instead, which shrugs off single-pixel dropouts on the object rim.
    pub fn sample(&self, u: T, v: T, median3: bool) -> Option<T> {
        if !(u.is_finite() && v.is_finite()) {
            return None;
        }
        let x = u.floor().to_i64()?;
        let y = v.floor().to_i64()?;
        if !median3 {
            return self.at(x, y);
        }
        let mut neighborhood: Vec<T> = Vec::with_capacity(9);
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(d) = self.at(x + dx, y + dy) {
                    if d.is_finite() {
                        neighborhood.push(d);
                    }
                }
            }
        }
        if neighborhood.is_empty() {
            return Some(T::nan());
        }
        neighborhood.sort_by(|a, b| a.partial_cmp(b).expect("finite depths"));
        Some(neighborhood[neighborhood.len() / 2])
    }
}
