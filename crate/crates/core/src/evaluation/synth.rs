//! Deterministic synthetic registration scenes.
//!
//! Source geometry is structured — a union of random planar patches and
//! Gaussian blobs, not isotropic noise — so surface normals, descriptors and
//! local rigidity all behave the way they do on real scans. The target cloud
//! is a spatially coherent overlap slice of the source, moved by a hidden
//! rigid transform and perturbed per point, plus clutter the source never
//! saw. The initial correspondence set mixes a controlled number of true
//! pairs with uniformly random wrong ones.

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use super::{EvalError, GroundTruth};
use crate::geometry::{Correspondence, CorrespondenceSet, PointCloud};
use crate::testkit::{random_direction, random_rigid_transform};

/// Bounds on the hidden transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformMagnitude {
    pub max_rotation_deg: f64,
    pub max_translation: f64,
}

/// Full parameterization of one synthetic scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub point_count: usize,
    ///t fraction of source points visible in the target, in (0, 1].
    pub overlap_fraction: f64,
    /// Per-axis Gaussian noise applied to target points, ≥ 0.
    pub noise_sigma: f64,
    /// Fraction of initial pairs that are wrong, in [0, 1).
    pub outlier_ratio: f64,
    pub initial_pair_count: usize,
    pub transform_magnitude: TransformMagnitude,
    pub rng_seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        let fail = |msg: &str| Err(EvalError::InvalidSpec(msg.to_string()));
        if self.point_count < 20 {
            return fail("point_count must be at least 20");
        }
        if !(self.overlap_fraction > 0.0 && self.overlap_fraction <= 1.0) {
            return fail("overlap_fraction must lie in (0, 1]");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail("noise_sigma must be finite and nonnegative");
        }
        if !(self.outlier_ratio >= 0.0 && self.outlier_ratio < 1.0) {
            return fail("outlier_ratio must lie in [0, 1)");
        }
        if self.initial_pair_count == 0 {
            return fail("initial_pair_count must be positive");
        }
        if self.transform_magnitude.max_rotation_deg < 0.0
            || self.transform_magnitude.max_translation < 0.0
        {
            return fail("transform magnitudes must be nonnegative");
        }
        Ok(())
    }
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            point_count: 2000,
            overlap_fraction: 0.7,
            noise_sigma: 0.005,
            outlier_ratio: 0.9,
            initial_pair_count: 500,
            transform_magnitude: TransformMagnitude {
                max_rotation_deg: 45.0,
                max_translation: 0.5,
            },
            rng_seed: 0,
        }
    }
}

/// A generated scene: clouds, hidden transform, initial correspondences.
#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub source: PointCloud,
    pub target: PointCloud,
    pub ground_truth: GroundTruth,
    pub initial: CorrespondenceSet,
}

enum Part {
    Plane { center: Vector3<f64>, u: Vector3<f64>, v: Vector3<f64>, half_u: f64, half_v: f64 },
    Blob { center: Vector3<f64>, sigma: f64 },
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box–Muller; keeps the crate free of a distributions dependency.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn gaussian_vec(rng: &mut impl Rng, sigma: f64) -> Vector3<f64> {
    if sigma == 0.0 {
        return Vector3::zeros();
    }
    Vector3::new(gaussian(rng), gaussian(rng), gaussian(rng)) * sigma
}

const PLANE_PARTS: usize = 6;
const BLOB_PARTS: usize = 3;

fn sample_parts(rng: &mut impl Rng) -> Vec<Part> {
    let mut parts = Vec::with_capacity(PLANE_PARTS + BLOB_PARTS);
    for _ in 0..PLANE_PARTS {
        let t = random_rigid_transform(rng, std::f64::consts::PI, 0.0);
        let u = t.rotation().column(0).into_owned();
        let v = t.rotation().column(1).into_owned();
        parts.push(Part::Plane {
            center: Vector3::new(
                rng.gen_range(-0.45..0.45),
                rng.gen_range(-0.45..0.45),
                rng.gen_range(-0.45..0.45),
            ),
            u,
            v,
            half_u: rng.gen_range(0.25..0.45),
            half_v: rng.gen_range(0.25..0.45),
        });
    }
    for _ in 0..BLOB_PARTS {
        parts.push(Part::Blob {
            center: Vector3::new(
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
            ),
            sigma: rng.gen_range(0.04..0.1),
        });
    }
    parts
}

fn sample_structured_points(rng: &mut impl Rng, parts: &[Part], count: usize) -> Vec<Vector3<f64>> {
    (0..count)
        .map(|i| match &parts[i % parts.len()] {
            Part::Plane { center, u, v, half_u, half_v } => {
                center
                    + u * rng.gen_range(-half_u..*half_u)
                    + v * rng.gen_range(-half_v..*half_v)
            }
            Part::Blob { center, sigma } => center + gaussian_vec(rng, *sigma),
        })
        .collect()
}

/// Builds a scene deterministically from its spec.
pub fn generate_scene(spec: &SceneSpec) -> Result<GeneratedScene, EvalError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);

    let parts = sample_parts(&mut rng);
    let source_points = sample_structured_points(&mut rng, &parts, spec.point_count);

    let transform = random_rigid_transform(
        &mut rng,
        spec.transform_magnitude.max_rotation_deg.to_radians(),
        spec.transform_magnitude.max_translation,
    );

    // Spatially coherent overlap: the points with the largest projections
    // onto a random direction.
    let overlap_count =
        ((spec.point_count as f64 * spec.overlap_fraction).round() as usize).clamp(1, spec.point_count);
    let axis = random_direction(&mut rng);
    let mut by_projection: Vec<usize> = (0..spec.point_count).collect();
    by_projection.sort_by(|&a, &b| {
        let pa = source_points[a].dot(&axis);
        let pb = source_points[b].dot(&axis);
        pb.partial_cmp(&pa).expect("finite projections").then(a.cmp(&b))
    });
    let overlap: Vec<usize> = by_projection[..overlap_count].to_vec();

    let inlier_tolerance = (3.0 * spec.noise_sigma).max(1e-9);
    // Epsilon guard: (1 - 0.99) * 1000 lands a few ulps above 10 and must
    // still ceil to 10.
    let true_pair_count = ((1.0 - spec.outlier_ratio) * spec.initial_pair_count as f64 - 1e-9)
        .ceil()
        .max(0.0) as usize;
    if true_pair_count > overlap_count {
        return Err(EvalError::InvalidSpec(format!(
            "{true_pair_count} true pairs requested but only {overlap_count} overlap points exist"
        )));
    }

    // Overlap points selected as true pairs get noise bounded by noise_sigma
    // (the advertised residual of a true pair); the rest get plain Gaussian
    // noise of the same scale.
    let chosen_true: HashSet<usize> =
        rand::seq::index::sample(&mut rng, overlap_count, true_pair_count)
            .iter()
            .collect();

    // Target = transformed overlap + per-point noise, then clutter geometry
    // the source never observed, then a deterministic shuffle.
    let mut target_points: Vec<Vector3<f64>> = Vec::with_capacity(spec.point_count);
    for (k, &i) in overlap.iter().enumerate() {
        let noise = if chosen_true.contains(&k) {
            crate::testkit::random_in_ball(&mut rng, spec.noise_sigma)
        } else {
            gaussian_vec(&mut rng, spec.noise_sigma)
        };
        target_points.push(transform.apply(&source_points[i]) + noise);
    }
    let clutter_parts = sample_parts(&mut rng);
    let clutter = sample_structured_points(&mut rng, &clutter_parts, spec.point_count - overlap_count);
    for p in clutter {
        target_points.push(transform.apply(&p) + gaussian_vec(&mut rng, spec.noise_sigma));
    }

    let mut permutation: Vec<usize> = (0..target_points.len()).collect();
    permutation.shuffle(&mut rng);
    // slot_of[old] = new position after the shuffle.
    let mut slot_of = vec![0usize; permutation.len()];
    let mut shuffled = vec![Vector3::zeros(); target_points.len()];
    for (new_idx, &old_idx) in permutation.iter().enumerate() {
        slot_of[old_idx] = new_idx;
        shuffled[new_idx] = target_points[old_idx];
    }

    let mut pairs: Vec<Correspondence> = Vec::with_capacity(spec.initial_pair_count);
    let mut used: HashSet<(usize, usize)> = HashSet::new();
    let mut chosen_sorted: Vec<usize> = chosen_true.iter().copied().collect();
    chosen_sorted.sort_unstable();
    for k in chosen_sorted {
        let pair = (overlap[k], slot_of[k]);
        used.insert(pair);
        pairs.push(Correspondence::new(pair.0, pair.1));
    }

    let wrong_count = spec.initial_pair_count - true_pair_count;
    let mut attempts = 0usize;
    while pairs.len() < spec.initial_pair_count {
        attempts += 1;
        if attempts > 1000 * spec.initial_pair_count {
            return Err(EvalError::InvalidSpec(
                "could not synthesize enough wrong pairs".to_string(),
            ));
        }
        let i = rng.gen_range(0..spec.point_count);
        let j = rng.gen_range(0..shuffled.len());
        if used.contains(&(i, j)) {
            continue;
        }
        let residual = (transform.apply(&source_points[i]) - shuffled[j]).norm();
        if residual <= inlier_tolerance {
            continue; // accidentally true: not a wrong pair
        }
        used.insert((i, j));
        pairs.push(Correspondence::new(i, j));
    }
    debug_assert_eq!(pairs.len(), true_pair_count + wrong_count);

    let source = PointCloud::new(source_points).expect("finite source points");
    let target = PointCloud::new(shuffled).expect("finite target points");
    Ok(GeneratedScene {
        source,
        target,
        ground_truth: GroundTruth { transform, inlier_tolerance },
        initial: CorrespondenceSet::from_pairs(pairs),
    })
}
