//! Registration quality metrics and the synthetic scene generator.
//!
//! Per-pair metrics: rotation error RE (degrees), translation error TE
//! (meters), success under (σ_θ, σ_d) thresholds, inlier precision IP,
//! inlier count IN and the inlier number ratio INR (final inliers over
//! initial inliers, falling back to the raw final count when the initial
//! set had none). Dataset level: registration recall RR, RE/TE means over
//! successful pairs, IP/IN/INR means over all pairs, and feature matching
//! recall FMR at the conventional 5% inlier-precision cutoff.

mod synth;

pub use synth::{generate_scene, GeneratedScene, SceneSpec, TransformMagnitude};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{PositionedCorrespondence, RigidTransform};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset metrics need at least one pair")]
    EmptyDataset,
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
}

/// Reference transform and the residual tolerance that defines an inlier.
#[derive(Debug, Clone, Copy)]
pub struct GroundTruth {
    pub transform: RigidTransform,
    pub inlier_tolerance: f64,
}

/// Success thresholds for registration recall: RE < `rotation_deg` and
/// TE < `translation`, both strict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricThresholds {
    pub rotation_deg: f64,
    pub translation: f64,
}

/// Indoor-scale convention: 15° and 30 cm.
pub const INDOOR_THRESHOLDS: MetricThresholds =
    MetricThresholds { rotation_deg: 15.0, translation: 0.30 };

/// Outdoor-scale convention: 5° and 60 cm.
pub const OUTDOOR_THRESHOLDS: MetricThresholds =
    MetricThresholds { rotation_deg: 5.0, translation: 0.60 };

/// A pair counts toward FMR when its inlier precision exceeds this.
pub const FMR_PRECISION_CUTOFF: f64 = 0.05;

/// Geodesic rotation error in degrees: `arccos((trace(R̂ᵀR) − 1) / 2)`,
/// with the argument clamped against round-off.
pub fn rotation_error_deg(r_hat: &Matrix3<f64>, r_gt: &Matrix3<f64>) -> f64 {
    let arg = ((r_hat.transpose() * r_gt).trace() - 1.0) / 2.0;
    arg.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Euclidean translation error.
pub fn translation_error(t_hat: &Vector3<f64>, t_gt: &Vector3<f64>) -> f64 {
    (t_hat - t_gt).norm()
}

/// Residual test under the ground-truth transform (closed tolerance).
pub fn is_inlier(c: &PositionedCorrespondence, gt: &GroundTruth) -> bool {
    (gt.transform.apply(&c.source) - c.target).norm() <= gt.inlier_tolerance
}

fn count_inliers(pairs: &[PositionedCorrespondence], gt: &GroundTruth) -> usize {
    pairs.iter().filter(|c| is_inlier(c, gt)).count()
}

/// Quality record of one registered cloud pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub re_deg: f64,
    pub te: f64,
    /// Fraction of final correspondences that are inliers (0 when empty).
    pub ip: f64,
    /// Inlier count of the final correspondence set.
    pub in_count: usize,
    /// Final inliers over initial inliers; the raw final count when the
    /// initial set had zero inliers.
    pub inr: f64,
    pub success: bool,
}

/// Computes the per-pair metric record from the initial and final
/// correspondence sets and the estimated transform.
pub fn pair_metrics(
    initial: &[PositionedCorrespondence],
    fin: &[PositionedCorrespondence],
    t_hat: &RigidTransform,
    gt: &GroundTruth,
    thresholds: &MetricThresholds,
) -> PairMetrics {
    let re_deg = rotation_error_deg(t_hat.rotation(), gt.transform.rotation());
    let te = translation_error(t_hat.translation(), gt.transform.translation());
    let in_count = count_inliers(fin, gt);
    let initial_inliers = count_inliers(initial, gt);
    let ip = if fin.is_empty() { 0.0 } else { in_count as f64 / fin.len() as f64 };
    let inr = if initial_inliers != 0 {
        in_count as f64 / initial_inliers as f64
    } else {
        in_count as f64
    };
    PairMetrics {
        re_deg,
        te,
        ip,
        in_count,
        inr,
        success: te < thresholds.translation && re_deg < thresholds.rotation_deg,
    }
}

/// Dataset-level reduction of per-pair records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub pair_count: usize,
    /// Registration recall: fraction of successful pairs.
    pub rr: f64,
    /// Mean RE/TE over successful pairs only; absent when nothing succeeded.
    pub mean_re_deg: Option<f64>,
    pub mean_te: Option<f64>,
    pub mean_ip: f64,
    pub mean_in: f64,
    pub mean_inr: f64,
    /// Fraction of pairs whose inlier precision exceeds 5%.
    pub fmr: f64,
}

pub fn dataset_metrics(per_pair: &[PairMetrics]) -> Result<DatasetSummary, EvalError> {
    if per_pair.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let n = per_pair.len() as f64;
    let successes: Vec<&PairMetrics> = per_pair.iter().filter(|m| m.success).collect();
    let mean_over_successes = |f: fn(&PairMetrics) -> f64| -> Option<f64> {
        if successes.is_empty() {
            None
        } else {
            Some(successes.iter().map(|m| f(m)).sum::<f64>() / successes.len() as f64)
        }
    };
    Ok(DatasetSummary {
        pair_count: per_pair.len(),
        rr: successes.len() as f64 / n,
        mean_re_deg: mean_over_successes(|m| m.re_deg),
        mean_te: mean_over_successes(|m| m.te),
        mean_ip: per_pair.iter().map(|m| m.ip).sum::<f64>() / n,
        mean_in: per_pair.iter().map(|m| m.in_count as f64).sum::<f64>() / n,
        mean_inr: per_pair.iter().map(|m| m.inr).sum::<f64>() / n,
        fmr: per_pair.iter().filter(|m| m.ip > FMR_PRECISION_CUTOFF).count() as f64 / n,
    })
}
