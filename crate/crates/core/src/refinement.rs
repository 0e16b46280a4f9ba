//! Point-level pose refinement.
//!
//! The refinement criterion is the point-level truncated chamfer count: how
//! many source points land strictly within σ_d of the target cloud under a
//! pose. It needs no correspondences at all, which matters when the pipeline
//! produced dense pairs far beyond the initial set. The optimizer is a
//! truncated-ICP ascent on that criterion — gather all (point, nearest
//! neighbor) pairs inside the truncation radius, refit, repeat — returning
//! the best-counting pose it visited, so the criterion can never decrease.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    fit_rigid_transform, rotation_angle_between, GeometryError, PointCloud, RigidTransform,
    SpatialIndex,
};

/// Knobs of [`refine_pose`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefinementParams {
    /// Truncation radius σ_d (meters).
    pub sigma_d: f64,
    pub max_rounds: usize,
    /// Stop when rotation angle plus translation shift fall below this.
    pub convergence_eps: f64,
}

impl Default for RefinementParams {
    fn default() -> Self {
        Self { sigma_d: 0.1, max_rounds: 10, convergence_eps: 1e-4 }
    }
}

impl RefinementParams {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.sigma_d.is_finite()
            || self.sigma_d <= 0.0
            || self.max_rounds == 0
            || self.convergence_eps <= 0.0
        {
            return Err(GeometryError::DegenerateInput("invalid refinement parameters"));
        }
        Ok(())
    }
}

/// Number of source points whose nearest target under `pose` lies strictly
/// within `sigma_d`.
pub fn po_tcd_count(
    pose: &RigidTransform,
    source: &PointCloud,
    target_index: &SpatialIndex,
    sigma_d: f64,
) -> usize {
    source
        .points()
        .par_iter()
        .filter(|p| {
            let moved = pose.apply(p);
            match target_index.nearest_neighbor(&moved) {
                Ok((_, d)) => d < sigma_d,
                Err(_) => false,
            }
        })
        .count()
}

/// Truncated-ICP ascent from `initial`: each round refits on all pairs
/// within σ_d under the current pose, stopping on convergence or after
/// `max_rounds`. Returns the visited pose with the highest truncated count
/// (ties resolve to the latest visited), so the count never drops below the
/// starting pose's.
pub fn refine_pose(
    initial: &RigidTransform,
    source: &PointCloud,
    target: &PointCloud,
    params: &RefinementParams,
) -> Result<RigidTransform, GeometryError> {
    params.validate()?;
    if target.is_empty() {
        return Err(GeometryError::EmptyCloud);
    }
    let target_index = SpatialIndex::build(target);

    let gather = |pose: &RigidTransform| -> (Vec<nalgebra::Vector3<f64>>, Vec<nalgebra::Vector3<f64>>) {
        let pairs: Vec<(nalgebra::Vector3<f64>, nalgebra::Vector3<f64>)> = source
            .points()
            .par_iter()
            .filter_map(|p| {
                let moved = pose.apply(p);
                let (idx, d) = target_index.nearest_neighbor(&moved).ok()?;
                (d < params.sigma_d).then(|| (*p, target.point(idx)))
            })
            .collect();
        pairs.into_iter().unzip()
    };

    let initial_count = po_tcd_count(initial, source, &target_index, params.sigma_d);
    if initial_count < 3 {
        return Err(GeometryError::DegenerateInput(
            "fewer than 3 source points within the truncation radius",
        ));
    }

    let mut best = (*initial, initial_count);
    let mut pose = *initial;
    for _ in 0..params.max_rounds {
        let (src, dst) = gather(&pose);
        let Ok(next) = fit_rigid_transform(&src, &dst) else {
            break;
        };
        let count = po_tcd_count(&next, source, &target_index, params.sigma_d);
        if count >= best.1 {
            best = (next, count);
        }
        let delta = rotation_angle_between(pose.rotation(), next.rotation())
            + (pose.translation() - next.translation()).norm();
        pose = next;
        if delta < params.convergence_eps {
            break;
        }
    }
    Ok(best.0)
}
