//! Deterministic constructions shared by the unit, property and acceptance
//! suites. Not part of the registration API surface.

use nalgebra::{Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{PositionedCorrespondence, RigidTransform};

/// Uniformly random proper rotation (axis uniform on the sphere, angle up to
/// `max_angle_rad`) plus a translation of norm up to `max_translation`.
pub fn random_rigid_transform(
    rng: &mut impl Rng,
    max_angle_rad: f64,
    max_translation: f64,
) -> RigidTransform {
    let axis = Unit::new_normalize(random_direction(rng));
    let angle = rng.gen::<f64>() * max_angle_rad;
    let rotation = nalgebra::Rotation3::from_axis_angle(&axis, angle).into_inner();
    let translation = random_direction(rng) * (rng.gen::<f64>() * max_translation);
    RigidTransform::new(rotation, translation).expect("constructed proper rotation")
}

/// Unit vector uniform on the sphere (rejection-sampled from the cube).
pub fn random_direction(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        );
        let n = v.norm();
        if n > 1e-6 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Point uniform in the ball of the given radius.
pub fn random_in_ball(rng: &mut impl Rng, radius: f64) -> Vector3<f64> {
    random_direction(rng) * (radius * rng.gen::<f64>().powf(1.0 / 3.0))
}

/// A synthetic local region on which the consistency-dominance event holds
/// by construction.
pub struct PhiRegion {
    pub pairs: Vec<PositionedCorrespondence>,
    pub center: PositionedCorrespondence,
    /// True where the pair is a correct correspondence.
    pub inlier_flags: Vec<bool>,
    pub transform: RigidTransform,
}

/// Builds a local region of `n` correspondences around a true seed, with the
/// requested inlier fraction.
///
/// Inliers carry noise of norm ≤ σ/10. Outliers are displaced along random
/// directions with magnitudes spaced 42σ apart starting at 42σ: since source
/// points live in a ball of radius 10σ (intra-distances ≤ 20σ), any pair
/// involving an outlier changes its intra-cloud distance by more than σ, so
/// inlier consistencies strictly dominate and no outlier is consistent with
/// anything — the dominance event cannot fail.
pub fn phi_region(seed: u64, n: usize, inlier_fraction: f64, sigma: f64) -> PhiRegion {
    assert!(n >= 1 && (0.0..=1.0).contains(&inlier_fraction));
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(1));
    let transform = random_rigid_transform(&mut rng, std::f64::consts::PI, 10.0 * sigma);
    let region_radius = 10.0 * sigma;

    let n_inliers = ((n as f64) * inlier_fraction).round() as usize;
    let mut pairs = Vec::with_capacity(n);
    let mut inlier_flags = Vec::with_capacity(n);
    let mut outlier_rank = 0usize;
    for i in 0..n {
        let source = random_in_ball(&mut rng, region_radius);
        let clean = transform.apply(&source);
        let (target, is_inlier) = if i < n_inliers {
            (clean + random_in_ball(&mut rng, sigma / 10.0), true)
        } else {
            outlier_rank += 1;
            let magnitude = 42.0 * sigma * outlier_rank as f64;
            (clean + random_direction(&mut rng) * magnitude, false)
        };
        pairs.push(PositionedCorrespondence {
            source_index: i,
            target_index: i,
            source,
            target,
        });
        inlier_flags.push(is_inlier);
    }

    let center_source = random_in_ball(&mut rng, region_radius);
    let center = PositionedCorrespondence {
        source_index: usize::MAX,
        target_index: usize::MAX,
        source: center_source,
        target: transform.apply(&center_source) + random_in_ball(&mut rng, sigma / 10.0),
    };

    PhiRegion { pairs, center, inlier_flags, transform }
}
