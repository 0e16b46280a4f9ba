//! Fixture builders shared by the criterion benchmarks.

use regor_core::evaluation::{generate_scene, GeneratedScene, SceneSpec, TransformMagnitude};

/// Standard benchmark scene: structured geometry, 90% outliers.
pub fn bench_scene(point_count: usize, seed: u64) -> GeneratedScene {
    let spec = SceneSpec {
        point_count,
        overlap_fraction: 0.7,
        noise_sigma: 0.005,
        outlier_ratio: 0.9,
        initial_pair_count: 500,
        transform_magnitude: TransformMagnitude { max_rotation_deg: 45.0, max_translation: 0.5 },
        rng_seed: seed,
    };
    generate_scene(&spec).expect("valid benchmark spec")
}
