//! Closed-form least-squares rigid alignment of paired point sets.

use nalgebra::{Matrix3, Vector3};

use super::{GeometryError, RigidTransform};

/// Relative threshold under which the second singular value of the centered
/// cross-covariance counts as zero (collinear or coincident input).
const RANK_EPS: f64 = 1e-12;

/// Finds the proper rigid transform minimizing `Σ ‖R pⱼ + t − qⱼ‖²`.
///
/// Closed form: SVD of the centered cross-covariance, with the usual
/// determinant-sign correction on the smallest singular vector so the result
/// stays in SO(3) even for mirrored inputs.
pub fn fit_rigid_transform(
    src: &[Vector3<f64>],
    dst: &[Vector3<f64>],
) -> Result<RigidTransform, GeometryError> {
    let weights = vec![1.0; src.len()];
    fit_rigid_transform_weighted(src, dst, &weights)
}

/// Weighted variant of [`fit_rigid_transform`]; weights must be nonnegative
/// with a positive sum.
pub fn fit_rigid_transform_weighted(
    src: &[Vector3<f64>],
    dst: &[Vector3<f64>],
    weights: &[f64],
) -> Result<RigidTransform, GeometryError> {
    if src.len() != dst.len() {
        return Err(GeometryError::LengthMismatch(src.len(), dst.len()));
    }
    if src.len() != weights.len() {
        return Err(GeometryError::LengthMismatch(src.len(), weights.len()));
    }
    if src.len() < 3 {
        return Err(GeometryError::DegenerateInput("fewer than 3 point pairs"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(GeometryError::DegenerateInput("negative or non-finite weight"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(GeometryError::DegenerateInput("weights sum to zero"));
    }

    let mut src_centroid = Vector3::zeros();
    let mut dst_centroid = Vector3::zeros();
    for ((p, q), w) in src.iter().zip(dst).zip(weights) {
        src_centroid += *w * p;
        dst_centroid += *w * q;
    }
    src_centroid /= total;
    dst_centroid /= total;

    let mut cross = Matrix3::zeros();
    for ((p, q), w) in src.iter().zip(dst).zip(weights) {
        cross += *w * (p - src_centroid) * (q - dst_centroid).transpose();
    }

    let svd = cross.svd(true, true);
    let sv = svd.singular_values;
    if sv[0] <= 0.0 || sv[1] <= RANK_EPS * sv[0] {
        return Err(GeometryError::DegenerateInput(
            "cross-covariance rank below 2 (collinear or coincident points)",
        ));
    }
    let u = svd.u.expect("SVD requested with U");
    let v = svd.v_t.expect("SVD requested with V").transpose();

    let sign = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign));
    let rotation = v * correction * u.transpose();
    let translation = dst_centroid - rotation * src_centroid;

    Ok(RigidTransform::from_parts(rotation, translation))
}
