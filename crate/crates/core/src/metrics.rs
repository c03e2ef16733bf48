//! Trajectory quality metrics: average displacement error, average
//! Mahalanobis distance, and a per-segment report split at collision
//! events.
//!
//! Both metrics align trajectories frame by frame and refuse mismatched
//! frame index sets rather than silently intersecting them. AMD measures
//! each estimated point against a Gaussian fit of the reference point
//! cloud, so it is invariant under a shared invertible affine transform.

use serde::{Deserialize, Serialize};

use crate::collision::TimedCollision;
use crate::error::{Error, Result};
use crate::math::{Real, Vec3};
use crate::types::{PointSource, TrackedPoint, Trajectory};

/// Minimum matched frames for a rank-3 covariance fit plus one degree of
/// freedom.
pub const AMD_MIN_POINTS: usize = 4;

/// Ridge factor applied to a singular reference covariance:
/// `lambda = RIDGE_FACTOR * trace / 3`.
pub const RIDGE_FACTOR: f64 = 1e-9;

/// Per-source point counts for one trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCounts {
    pub measured: u64,
    pub predicted: u64,
    pub corrected: u64,
}

impl SourceCounts {
    pub fn total(&self) -> u64 {
        self.measured + self.predicted + self.corrected
    }

    fn record(&mut self, source: PointSource) {
        match source {
            PointSource::Measured => self.measured += 1,
            PointSource::Predicted => self.predicted += 1,
            PointSource::Corrected => self.corrected += 1,
        }
    }
}

/// Displacement error over one labeled stretch of frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct SegmentAde<T: Real> {
    pub label: String,
    #[serde(rename = "ade_m")]
    pub ade: T,
    pub n_points: u64,
}

/// Full evaluation of an estimated trajectory against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct MetricsReport<T: Real> {
    #[serde(rename = "ade_m")]
    pub ade: T,
    pub amd: T,
    pub n_points: u64,
    /// Segment breakdown: a single `full` segment when no collisions are
    /// supplied, otherwise split at each collision frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_segment: Option<Vec<SegmentAde<T>>>,
    pub flags: SourceCounts,
    /// True when the reference covariance was singular and AMD needed the
    /// ridge fallback.
    pub amd_regularized: bool,
}

/// Pairs up two trajectories frame by frame, requiring identical frame
/// index sequences.
fn matched<'a, T: Real>(
    estimated: &'a Trajectory<T>,
    reference: &'a Trajectory<T>,
) -> Result<Vec<(&'a TrackedPoint<T>, &'a TrackedPoint<T>)>> {
    if estimated.len() != reference.len() {
        return Err(Error::Alignment(format!(
            "trajectory lengths differ: {} vs {}",
            estimated.len(),
            reference.len()
        )));
    }
    for (a, b) in estimated.points.iter().zip(&reference.points) {
        if a.frame_index != b.frame_index {
            return Err(Error::Alignment(format!(
                "frame index mismatch: {} vs {}",
                a.frame_index, b.frame_index
            )));
        }
    }
    Ok(estimated.points.iter().zip(reference.points.iter()).collect())
}

fn mean_distance<T: Real>(pairs: &[(&TrackedPoint<T>, &TrackedPoint<T>)]) -> Result<T> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData(
            "no matched frames to average over".into(),
        ));
    }
    let total: T = pairs
        .iter()
        .map(|(a, b)| a.position.distance(b.position))
        .sum();
    Ok(total / T::from_usize(pairs.len()).expect("pair count fits scalar"))
}

/// Average displacement error: mean 3D Euclidean distance over matched
/// frames. Symmetric in its arguments.
pub fn ade<T: Real>(estimated: &Trajectory<T>, reference: &Trajectory<T>) -> Result<T> {
    mean_distance(&matched(estimated, reference)?)
}

/// Lower-triangular Cholesky factor of a symmetric 3x3 matrix given as
/// `[m00, m11, m22, m10, m20, m21]`. None when the matrix is not
/// positive-definite.
fn cholesky3<T: Real>(m: &[T; 6]) -> Option<[T; 6]> {
    let [m00, m11, m22, m10, m20, m21] = *m;
    let d0 = m00;
    if !d0.is_finite() || d0 <= T::zero() {
        return None;
    }
    let l00 = d0.sqrt();
    let l10 = m10 / l00;
    let l20 = m20 / l00;
    let d1 = m11 - l10 * l10;
    if !d1.is_finite() || d1 <= T::zero() {
        return None;
    }
    let l11 = d1.sqrt();
    let l21 = (m21 - l20 * l10) / l11;
    let d2 = m22 - l20 * l20 - l21 * l21;
    if !d2.is_finite() || d2 <= T::zero() {
        return None;
    }
    Some([l00, l11, d2.sqrt(), l10, l20, l21])
}

/// Squared Mahalanobis length of `d` under the covariance whose Cholesky
/// factor is `l`: solve L y = d forward, then |y|^2.
fn mahalanobis_sq<T: Real>(l: &[T; 6], d: Vec3<T>) -> T {
    let [l00, l11, l22, l10, l20, l21] = *l;
    let y0 = d.x / l00;
    let y1 = (d.y - l10 * y0) / l11;
    let y2 = (d.z - l20 * y0 - l21 * y1) / l22;
    y0 * y0 + y1 * y1 + y2 * y2
}

/// Gaussian fit of the reference cloud plus its (possibly regularized)
/// Cholesky factor.
fn fit_reference<T: Real>(
    pairs: &[(&TrackedPoint<T>, &TrackedPoint<T>)],
) -> Result<(Vec3<T>, [T; 6], bool)> {
    let n = pairs.len();
    if n < AMD_MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "need at least {AMD_MIN_POINTS} matched frames for a covariance fit, got {n}"
        )));
    }
    let n_t = T::from_usize(n).expect("count fits scalar");
    let mut mean = Vec3::zero();
    for (_, r) in pairs {
        mean += r.position;
    }
    mean = mean / n_t;

    // Sample covariance with the n-1 normalization.
    let denom = n_t - T::one();
    let mut cov = [T::zero(); 6];
    for (_, r) in pairs {
        let d = r.position - mean;
        cov[0] += d.x * d.x;
        cov[1] += d.y * d.y;
        cov[2] += d.z * d.z;
        cov[3] += d.y * d.x;
        cov[4] += d.z * d.x;
        cov[5] += d.z * d.y;
    }
    for c in &mut cov {
        *c /= denom;
    }

    if let Some(l) = cholesky3(&cov) {
        return Ok((mean, l, false));
    }
    // Singular reference cloud (e.g. collinear): add a trace-scaled ridge
    // and retry once.
    let lambda = T::of(RIDGE_FACTOR) * (cov[0] + cov[1] + cov[2]) / T::of(3.0);
    let ridged = [
        cov[0] + lambda,
        cov[1] + lambda,
        cov[2] + lambda,
        cov[3],
        cov[4],
        cov[5],
    ];
    match cholesky3(&ridged) {
        Some(l) => Ok((mean, l, true)),
        None => Err(Error::NumericalState(
            "reference covariance singular even after ridge regularization".into(),
        )),
    }
}

fn amd_with_flag<T: Real>(
    estimated: &Trajectory<T>,
    reference: &Trajectory<T>,
) -> Result<(T, bool)> {
    let pairs = matched(estimated, reference)?;
    let (mean, l, regularized) = fit_reference(&pairs)?;
    let total: T = pairs
        .iter()
        .map(|(e, _)| mahalanobis_sq(&l, e.position - mean).sqrt())
        .sum();
    Ok((
        total / T::from_usize(pairs.len()).expect("pair count fits scalar"),
        regularized,
    ))
}

/// Average Mahalanobis distance of the estimated points against a
/// Gaussian (mean, covariance) fit of the reference point cloud.
pub fn amd<T: Real>(estimated: &Trajectory<T>, reference: &Trajectory<T>) -> Result<T> {
    amd_with_flag(estimated, reference).map(|(value, _)| value)
}

/// Builds the full report. Collision events split the displacement
/// breakdown at their frame index; an event recorded for frame `f`
/// happened between frames `f-1` and `f`, so `f` starts a new segment.
pub fn report<T: Real>(
    estimated: &Trajectory<T>,
    reference: &Trajectory<T>,
    events: &[TimedCollision<T>],
) -> Result<MetricsReport<T>> {
    let pairs = matched(estimated, reference)?;
    let ade = mean_distance(&pairs)?;
    let (amd, amd_regularized) = amd_with_flag(estimated, reference)?;

    let mut flags = SourceCounts::default();
    for (e, _) in &pairs {
        flags.record(e.source);
    }

    let mut boundaries: Vec<u64> = events.iter().map(|e| e.frame_index).collect();
    boundaries.sort_unstable();
    boundaries.dedup();
    boundaries.retain(|&f| {
        f > pairs[0].0.frame_index && f <= pairs[pairs.len() - 1].0.frame_index
    });

    let per_segment = if boundaries.is_empty() {
        vec![SegmentAde {
            label: "full".into(),
            ade,
            n_points: pairs.len() as u64,
        }]
    } else {
        let mut segments = Vec::with_capacity(boundaries.len() + 1);
        let mut start = 0usize;
        let n_bounces = boundaries.len();
        for (k, &frame) in boundaries.iter().enumerate() {
            let end = pairs.partition_point(|(e, _)| e.frame_index < frame);
            segments.push((segment_label(k, n_bounces), &pairs[start..end]));
            start = end;
        }
        segments.push((segment_label(n_bounces, n_bounces), &pairs[start..]));
        segments
            .into_iter()
            .filter(|(_, slice)| !slice.is_empty())
            .map(|(label, slice)| {
                Ok(SegmentAde {
                    label,
                    ade: mean_distance(slice)?,
                    n_points: slice.len() as u64,
                })
            })
            .collect::<Result<Vec<_>>>()?
    };

    Ok(MetricsReport {
        ade,
        amd,
        n_points: pairs.len() as u64,
        per_segment: Some(per_segment),
        flags,
        amd_regularized,
    })
}

fn segment_label(index: usize, n_bounces: usize) -> String {
    if index == 0 {
        "pre-bounce".into()
    } else if n_bounces == 1 {
        "post-bounce".into()
    } else {
        format!("post-bounce-{index}")
    }
}
