//! Per-point feature vectors and a deliberately weak handcrafted descriptor.
//!
//! The descriptor is a simplified angular-histogram signature: estimate a
//! normal per point from the covariance of its radius neighborhood, then bin
//! the three Darboux-frame angles against every neighbor into a 33-bin
//! (3 × 11) histogram, L1-normalized. It is rigid-invariant but weakly
//! discriminative, which is exactly what the registration pipeline needs to
//! be robust against. Externally computed descriptors can be ingested through
//! [`crate::io::read_feature_file`] instead.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{PointCloud, SpatialIndex};

/// Dimension of [`compute_weak_descriptor`] output.
pub const WEAK_DESCRIPTOR_DIM: usize = 33;

const BINS_PER_ANGLE: usize = 11;

/// Neighbors (excluding the point itself) required before a point gets a
/// normal and a non-zero histogram.
const MIN_NEIGHBORS: usize = 5;

const MIN_CLOUD_SIZE: usize = 10;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("descriptor needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("feature dimensions differ ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("feature vector {index} is non-finite")]
    NonFinite { index: usize },
    #[error("feature set has no vectors")]
    Empty,
    #[error("support radius must be positive")]
    InvalidSupportRadius,
    #[error("feature count {features} does not match point count {points}")]
    LengthMismatch { features: usize, points: usize },
}

/// One D-dimensional real vector per point of a paired cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

impl FeatureSet {
    /// Builds a set from at least one vector; all rows must share a
    /// dimension ≥ 1 and be finite.
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self, FeatureError> {
        let dim = vectors.first().ok_or(FeatureError::Empty)?.len();
        if dim == 0 {
            return Err(FeatureError::Empty);
        }
        for (index, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(FeatureError::DimensionMismatch { left: dim, right: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(FeatureError::NonFinite { index });
            }
        }
        Ok(Self { vectors, dim })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        &self.vectors[index]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Copies the selected rows into a new set (possibly empty), keeping the
    /// dimension. Used to restrict features to a local region.
    pub fn gather(&self, indices: &[usize]) -> FeatureSet {
        FeatureSet {
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
            dim: self.dim,
        }
    }

    /// Errors unless this set has exactly one vector per cloud point.
    pub fn validate_for(&self, cloud: &PointCloud) -> Result<(), FeatureError> {
        if self.len() != cloud.len() {
            return Err(FeatureError::LengthMismatch {
                features: self.len(),
                points: cloud.len(),
            });
        }
        Ok(())
    }
}

/// Euclidean distance between two feature vectors of equal dimension.
pub fn feature_distance(a: &[f64], b: &[f64]) -> Result<f64, FeatureError> {
    if a.len() != b.len() {
        return Err(FeatureError::DimensionMismatch { left: a.len(), right: b.len() });
    }
    Ok(distance_sq(a, b).sqrt())
}

pub(crate) fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Computes the 33-bin angular-histogram descriptor for every point.
///
/// Points with fewer than 5 in-radius neighbors get the zero vector; they
/// never win a mutual match downstream.
pub fn compute_weak_descriptor(
    cloud: &PointCloud,
    support_radius: f64,
) -> Result<FeatureSet, FeatureError> {
    if cloud.len() < MIN_CLOUD_SIZE {
        return Err(FeatureError::TooFewPoints { needed: MIN_CLOUD_SIZE, got: cloud.len() });
    }
    if !support_radius.is_finite() || support_radius <= 0.0 {
        return Err(FeatureError::InvalidSupportRadius);
    }

    let index = SpatialIndex::build(cloud);
    let centroid = cloud.centroid().expect("non-empty cloud");

    let neighborhoods: Vec<Vec<usize>> = cloud
        .points()
        .par_iter()
        .map(|p| index.radius_neighbors(p, support_radius))
        .collect();

    let normals: Vec<Option<Vector3<f64>>> = cloud
        .points()
        .par_iter()
        .zip(&neighborhoods)
        .map(|(p, neighbors)| estimate_normal(cloud, neighbors, p, &centroid))
        .collect();

    let vectors: Vec<Vec<f64>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| histogram_for(cloud, i, &neighborhoods[i], &normals))
        .collect();

    FeatureSet::new(vectors)
}

/// PCA normal of the neighborhood, sign-flipped so it points toward the
/// cloud centroid. `None` when the point has fewer than 5 neighbors.
fn estimate_normal(
    cloud: &PointCloud,
    neighbors: &[usize],
    point: &Vector3<f64>,
    centroid: &Vector3<f64>,
) -> Option<Vector3<f64>> {
    if neighbors.len() < MIN_NEIGHBORS + 1 {
        return None;
    }
    let mut mean = Vector3::zeros();
    for &j in neighbors {
        mean += cloud.point(j);
    }
    mean /= neighbors.len() as f64;
    let mut cov = Matrix3::zeros();
    for &j in neighbors {
        let d = cloud.point(j) - mean;
        cov += d * d.transpose();
    }
    cov /= neighbors.len() as f64;

    let eigen = nalgebra::SymmetricEigen::new(cov);
    let mut smallest = 0;
    for axis in 1..3 {
        if eigen.eigenvalues[axis] < eigen.eigenvalues[smallest] {
            smallest = axis;
        }
    }
    let mut normal: Vector3<f64> = eigen.eigenvectors.column(smallest).into();
    let norm = normal.norm();
    if norm == 0.0 {
        return None;
    }
    normal /= norm;

    // Deterministic base orientation, then flip toward the centroid.
    let lead = normal.iter().cloned().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
    if lead < 0.0 {
        normal = -normal;
    }
    if normal.dot(&(centroid - point)) < 0.0 {
        normal = -normal;
    }
    Some(normal)
}

fn histogram_for(
    cloud: &PointCloud,
    i: usize,
    neighbors: &[usize],
    normals: &[Option<Vector3<f64>>],
) -> Vec<f64> {
    let mut hist = vec![0.0f64; WEAK_DESCRIPTOR_DIM];
    let Some(n_i) = normals[i] else {
        return hist;
    };
    let p_i = cloud.point(i);
    let mut total = 0.0f64;
    for &j in neighbors {
        if j == i {
            continue;
        }
        let Some(n_j) = normals[j] else {
            continue;
        };
        let d = cloud.point(j) - p_i;
        let dist = d.norm();
        if dist == 0.0 {
            continue;
        }
        let dir = d / dist;
        let v_raw = dir.cross(&n_i);
        let v_norm = v_raw.norm();
        if v_norm < 1e-12 {
            continue;
        }
        let v = v_raw / v_norm;
        let w = n_i.cross(&v);

        let alpha = v.dot(&n_j); // in [-1, 1]
        let phi = n_i.dot(&dir); // in [-1, 1]
        let theta = w.dot(&n_j).atan2(n_i.dot(&n_j)); // in [-pi, pi]

        hist[bin_unit(alpha)] += 1.0;
        hist[BINS_PER_ANGLE + bin_unit(phi)] += 1.0;
        hist[2 * BINS_PER_ANGLE + bin_angle(theta)] += 1.0;
        total += 3.0;
    }
    if total > 0.0 {
        for h in &mut hist {
            *h /= total;
        }
    }
    hist
}

fn bin_unit(value: f64) -> usize {
    let t = (value + 1.0) / 2.0;
    ((t * BINS_PER_ANGLE as f64) as usize).min(BINS_PER_ANGLE - 1)
}

fn bin_angle(value: f64) -> usize {
    let t = (value + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
    ((t * BINS_PER_ANGLE as f64) as usize).min(BINS_PER_ANGLE - 1)
}
