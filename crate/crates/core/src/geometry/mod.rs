//! Point containers, rigid transforms and closed-form pose fitting.
//!
//! Everything downstream (matching, consistency scoring, the regeneration
//! pipeline) works in terms of these types. All of them are immutable after
//! construction and cheap to share across worker threads.

mod fit;
mod kdtree;

pub use fit::{fit_rigid_transform, fit_rigid_transform_weighted};
pub use kdtree::SpatialIndex;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Errors raised by the geometric substrate.
#[derive(Debug, Error)]
pub enum GeometryError {
    /// Input does not pin down a unique rigid transform (too few pairs,
    /// collinear or coincident points).
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    /// A query was issued against an empty cloud.
    #[error("empty point cloud")]
    EmptyCloud,
    /// A point with a NaN or infinite coordinate was rejected.
    #[error("point {index} has a non-finite coordinate")]
    NonFinitePoint { index: usize },
    /// A matrix failed the proper-rotation check.
    #[error("matrix is not a proper rotation (orthonormal, det = +1)")]
    NotARotation,
    /// A correspondence referenced a point outside its cloud.
    #[error(
        "correspondence ({source_index}, {target_index}) out of range for \
         clouds of size {source_len} x {target_len}"
    )]
    IndexOutOfRange {
        source_index: usize,
        target_index: usize,
        source_len: usize,
        target_len: usize,
    },
    /// Paired slices differ in length.
    #[error("paired inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// An ordered set of 3-D points, in meters, sharing one metric scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
}

impl PointCloud {
    /// Builds a cloud, rejecting any non-finite coordinate.
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self, GeometryError> {
        for (index, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(GeometryError::NonFinitePoint { index });
            }
        }
        Ok(Self { points })
    }

    /// Builds a cloud from raw `[x, y, z]` triples.
    pub fn from_coords(coords: &[[f64; 3]]) -> Result<Self, GeometryError> {
        Self::new(coords.iter().map(|c| Vector3::new(c[0], c[1], c[2])).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> Vector3<f64> {
        self.points[index]
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vector3<f64>> {
        self.points.iter()
    }

    /// Mean of all points; `None` for an empty cloud.
    pub fn centroid(&self) -> Option<Vector3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum: Vector3<f64> = self.points.iter().sum();
        Some(sum / self.points.len() as f64)
    }
}

/// A proper rigid motion: rotation in SO(3) plus a translation in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

/// Maximum deviation from orthonormality accepted by [`RigidTransform::new`].
pub const ROTATION_TOLERANCE: f64 = 1e-9;

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Validates that `rotation` is orthonormal with determinant +1
    /// (within [`ROTATION_TOLERANCE`]) before accepting it.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let gram = rotation.transpose() * rotation - Matrix3::identity();
        let max_dev = gram.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if max_dev > ROTATION_TOLERANCE || (rotation.determinant() - 1.0).abs() > ROTATION_TOLERANCE
        {
            return Err(GeometryError::NotARotation);
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NotARotation);
        }
        Ok(Self { rotation, translation })
    }

    /// Internal constructor for matrices that are proper by construction
    /// (e.g. products of SVD factors).
    pub(crate) fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// `R p + t`.
    pub fn apply(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * point + self.translation
    }

    /// Pointwise `R p + t` over a whole cloud; length preserved.
    pub fn apply_cloud(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud {
            points: cloud.points.iter().map(|p| self.apply(p)).collect(),
        }
    }

    /// `(Rᵀ, -Rᵀ t)`.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Composition `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

/// Geodesic angle (radians) between two rotation matrices.
pub fn rotation_angle_between(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let arg = ((a.transpose() * b).trace() - 1.0) / 2.0;
    arg.clamp(-1.0, 1.0).acos()
}

/// An index pair hypothesizing that source point `source_index` and target
/// point `target_index` are the same physical location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Correspondence {
    pub source_index: usize,
    pub target_index: usize,
}

impl Correspondence {
    pub fn new(source_index: usize, target_index: usize) -> Self {
        Self { source_index, target_index }
    }
}

/// A deduplicated set of correspondences, tagged with the pipeline stage
/// that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrespondenceSet {
    pairs: Vec<Correspondence>,
    stage: u32,
}

impl CorrespondenceSet {
    /// Sorts by `(source_index, target_index)` and collapses exact
    /// duplicates; stage starts at 0.
    pub fn from_pairs(mut pairs: Vec<Correspondence>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        Self { pairs, stage: 0 }
    }

    pub fn with_stage(mut self, stage: u32) -> Self {
        self.stage = stage;
        self
    }

    pub fn pairs(&self) -> &[Correspondence] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn stage(&self) -> u32 {
        self.stage
    }

    pub fn contains(&self, pair: &Correspondence) -> bool {
        self.pairs.binary_search(pair).is_ok()
    }

    /// Checks every index against the given clouds.
    pub fn validate_for(
        &self,
        source: &PointCloud,
        target: &PointCloud,
    ) -> Result<(), GeometryError> {
        for c in &self.pairs {
            if c.source_index >= source.len() || c.target_index >= target.len() {
                return Err(GeometryError::IndexOutOfRange {
                    source_index: c.source_index,
                    target_index: c.target_index,
                    source_len: source.len(),
                    target_len: target.len(),
                });
            }
        }
        Ok(())
    }
}

/// A correspondence with its endpoint coordinates attached, so consistency
/// scores and corrections can run without chasing cloud lookups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionedCorrespondence {
    pub source_index: usize,
    pub target_index: usize,
    pub source: Vector3<f64>,
    pub target: Vector3<f64>,
}

impl PositionedCorrespondence {
    pub fn correspondence(&self) -> Correspondence {
        Correspondence::new(self.source_index, self.target_index)
    }
}

/// Attaches coordinates to every pair in `set`, validating indices.
pub fn position_set(
    set: &CorrespondenceSet,
    source: &PointCloud,
    target: &PointCloud,
) -> Result<Vec<PositionedCorrespondence>, GeometryError> {
    set.validate_for(source, target)?;
    Ok(set
        .pairs()
        .iter()
        .map(|c| PositionedCorrespondence {
            source_index: c.source_index,
            target_index: c.target_index,
            source: source.point(c.source_index),
            target: target.point(c.target_index),
        })
        .collect())
}

/// Drops coordinates, keeping the sorted, deduplicated index pairs.
pub fn unposition_set(pairs: &[PositionedCorrespondence], stage: u32) -> CorrespondenceSet {
    CorrespondenceSet::from_pairs(pairs.iter().map(|p| p.correspondence()).collect())
        .with_stage(stage)
}
