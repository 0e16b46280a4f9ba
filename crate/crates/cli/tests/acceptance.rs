//! Acceptance suite: nine go/no-go checks covering the matching guarantees,
//! the local-score certification, pose-fitting exactness, desk-scale
//! regeneration behavior at 90% and 99% outlier ratios, the ablation
//! directions, point-level refinement, oracle equivalence of every
//! accelerated structure, and benchmark determinism.
//!
//! Run with `cargo test -p regor-cli --test acceptance -- --nocapture` to
//! see the per-criterion PASS/FAIL lines.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use regor_core::consistency::{ctc_matrix, local_score, second_order_matrix, ConsistencyParams};
use regor_core::evaluation::{
    generate_scene, pair_metrics, rotation_error_deg, translation_error,
    GeneratedScene, MetricThresholds, SceneSpec, TransformMagnitude,
};
use regor_core::features::{compute_weak_descriptor, feature_distance, FeatureSet};
use regor_core::geometry::{
    fit_rigid_transform, position_set, PointCloud, PositionedCorrespondence, RigidTransform,
    SpatialIndex,
};
use regor_core::matching::{generalized_mutual_match, mnn_match, mutual_match, nn_match};
use regor_core::refinement::{po_tcd_count, refine_pose, RefinementParams};
use regor_core::regeneration::{
    merge_correspondences, regenerate, IterationSchedule, MatchingMode,
    PipelineOptions, StageMode,
};
use regor_core::testkit::{phi_region, random_direction, random_rigid_transform};

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn report(results: &mut Vec<Outcome>, name: &'static str, passed: bool, detail: String) {
    println!(
        "criterion {:>2} [{name}]: {} — {detail}",
        results.len() + 1,
        if passed { "PASS" } else { "FAIL" }
    );
    results.push(Outcome { name, passed, detail });
}

fn random_feats(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> FeatureSet {
    FeatureSet::new((0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect())
        .expect("non-empty random features")
}

// ── Criterion 1: generalized mutual matching supersets strict mutual ───────

fn criterion_1(results: &mut Vec<Outcome>) {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut violations = 0usize;
    let mut gmm_total = 0usize;
    let mut mm_total = 0usize;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=50);
        let m = rng.gen_range(1..=50);
        let dim = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=5);
        let p = random_feats(&mut rng, n, dim);
        let q = random_feats(&mut rng, m, dim);
        let mm = mutual_match(&p, &q).unwrap();
        let gmm = generalized_mutual_match(&p, &q, k).unwrap();
        if gmm.len() < mm.len() || !mm.pairs().iter().all(|pair| gmm.contains(pair)) {
            violations += 1;
        }
        gmm_total += gmm.len();
        mm_total += mm.len();
    }
    let elapsed = started.elapsed().as_secs_f64();
    let passed = violations == 0 && elapsed < 10.0;
    report(
        results,
        "relaxed-matching-superset",
        passed,
        format!(
            "0 required violations, got {violations}; |GMM| total {gmm_total} vs |MM| {mm_total}; {elapsed:.2}s (< 10s)"
        ),
    );
}

// ── Criterion 2: local score certifies the inlier fraction ────────────────

fn criterion_2(results: &mut Vec<Outcome>) {
    let started = Instant::now();
    let sigma = 0.05;
    let a = 0.5;
    let params = ConsistencyParams { sigma, sigma_d: sigma, a };
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut violations = 0usize;
    let mut certified = 0usize;
    for trial in 0..500u64 {
        let n = rng.gen_range(8..=64);
        let fraction = rng.gen_range(0.05..0.95);
        let region = phi_region(trial, n, fraction, sigma);
        let matrix = ctc_matrix(&region.pairs, &region.center, &params);
        let score = local_score(&matrix, a);
        if score >= 1.0 {
            certified += 1;
            let true_fraction =
                region.inlier_flags.iter().filter(|&&f| f).count() as f64 / n as f64;
            if true_fraction < a {
                violations += 1;
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let passed = violations == 0 && certified > 50 && elapsed < 30.0;
    report(
        results,
        "score-certifies-inlier-fraction",
        passed,
        format!(
            "{certified}/500 regions certified, {violations} violated the fraction bound; {elapsed:.2}s (< 30s)"
        ),
    );
}

// ── Criterion 3: closed-form pose fitting is exact without noise ──────────

fn criterion_3(results: &mut Vec<Outcome>) {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut worst_rotation = 0.0f64;
    let mut worst_translation = 0.0f64;
    let mut violations = 0usize;
    for _ in 0..1000 {
        let n = rng.gen_range(4..=50);
        let src: Vec<nalgebra::Vector3<f64>> = (0..n)
            .map(|_| nalgebra::Vector3::new(rng.gen(), rng.gen(), rng.gen()))
            .collect();
        let pose = random_rigid_transform(&mut rng, std::f64::consts::PI, 2.0);
        let dst: Vec<_> = src.iter().map(|p| pose.apply(p)).collect();
        match fit_rigid_transform(&src, &dst) {
            Ok(fitted) => {
                let rot_err = (fitted.rotation() - pose.rotation()).abs().max();
                let tr_err = (fitted.translation() - pose.translation()).norm();
                worst_rotation = worst_rotation.max(rot_err);
                worst_translation = worst_translation.max(tr_err);
                if rot_err > 1e-6 || tr_err > 1e-6 {
                    violations += 1;
                }
            }
            Err(_) => violations += 1,
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let passed = violations == 0 && elapsed < 5.0;
    report(
        results,
        "pose-fit-exactness",
        passed,
        format!(
            "{violations} violations; worst rotation {worst_rotation:.2e}, translation {worst_translation:.2e}; {elapsed:.2}s (< 5s)"
        ),
    );
}

// ── Desk-scale scene machinery shared by criteria 4–6 ─────────────────────

const DESK_THRESHOLDS: MetricThresholds = MetricThresholds { rotation_deg: 15.0, translation: 0.3 };

struct PreparedScene {
    scene: GeneratedScene,
    source_feats: FeatureSet,
    target_feats: FeatureSet,
    initial: Vec<PositionedCorrespondence>,
    seed: u64,
}

fn prepare_scenes(base_seed: u64, count: usize, spec_for: impl Fn(u64) -> SceneSpec + Sync) -> Vec<PreparedScene> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed + i;
            let scene = generate_scene(&spec_for(seed)).expect("valid scene spec");
            let source_feats = compute_weak_descriptor(&scene.source, 0.15).unwrap();
            let target_feats = compute_weak_descriptor(&scene.target, 0.15).unwrap();
            let initial = position_set(&scene.initial, &scene.source, &scene.target).unwrap();
            PreparedScene { scene, source_feats, target_feats, initial, seed }
        })
        .collect()
}

fn desk_spec(seed: u64, outlier_ratio: f64, initial_pair_count: usize) -> SceneSpec {
    SceneSpec {
        point_count: 2000,
        overlap_fraction: 0.7,
        noise_sigma: 0.005,
        outlier_ratio,
        initial_pair_count,
        transform_magnitude: TransformMagnitude { max_rotation_deg: 45.0, max_translation: 0.5 },
        rng_seed: seed,
    }
}

#[derive(Clone, Copy)]
struct SceneRun {
    success: bool,
    in_count: usize,
    inr: f64,
}

fn run_variant(prepared: &[PreparedScene], options: &PipelineOptions) -> Vec<SceneRun> {
    prepared
        .par_iter()
        .map(|p| {
            let result = regenerate(
                &p.scene.source,
                &p.scene.target,
                &p.source_feats,
                &p.target_feats,
                &p.scene.initial,
                &IterationSchedule::default(),
                options,
                p.seed,
            )
            .expect("pipeline runs");
            let fin =
                position_set(&result.correspondences, &p.scene.source, &p.scene.target).unwrap();
            let metrics = pair_metrics(
                &p.initial,
                &fin,
                &result.transform,
                &p.scene.ground_truth,
                &DESK_THRESHOLDS,
            );
            SceneRun { success: metrics.success, in_count: metrics.in_count, inr: metrics.inr }
        })
        .collect()
}

fn rr(runs: &[SceneRun]) -> f64 {
    runs.iter().filter(|r| r.success).count() as f64 / runs.len() as f64
}

fn mean_in(runs: &[SceneRun]) -> f64 {
    runs.iter().map(|r| r.in_count as f64).sum::<f64>() / runs.len() as f64
}

// ── Criterion 4: regeneration at 90% outliers ──────────────────────────────

fn criterion_4(results: &mut Vec<Outcome>, prepared: &[PreparedScene]) -> Vec<SceneRun> {
    let started = Instant::now();
    let runs = run_variant(prepared, &PipelineOptions::default());
    let recall = rr(&runs);
    let mut inrs: Vec<f64> = runs.iter().map(|r| r.inr).collect();
    inrs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let median_inr = inrs[inrs.len() / 2];
    let elapsed = started.elapsed().as_secs_f64();
    let passed = recall >= 0.90 && median_inr > 3.0 && elapsed < 300.0;
    report(
        results,
        "regeneration-at-90pct-outliers",
        passed,
        format!(
            "RR {recall:.3} (need ≥ 0.90), median INR {median_inr:.1}x (need > 3x), {elapsed:.0}s (< 300s)"
        ),
    );
    runs
}

// ── Criterion 5: extreme outliers beat the prune-and-fit baseline ─────────

fn criterion_5(results: &mut Vec<Outcome>) {
    let prepared = prepare_scenes(5000, 50, |seed| desk_spec(seed, 0.99, 1000));
    let runs = run_variant(&prepared, &PipelineOptions::default());

    // Baseline: strict mutual matching over the full clouds followed by one
    // global SVD fit, the classic prune-then-fit recipe.
    let baseline: Vec<bool> = prepared
        .par_iter()
        .map(|p| {
            let Ok(mm) = mutual_match(&p.source_feats, &p.target_feats) else {
                return false;
            };
            let Ok(pairs) = position_set(&mm, &p.scene.source, &p.scene.target) else {
                return false;
            };
            let src: Vec<_> = pairs.iter().map(|c| c.source).collect();
            let dst: Vec<_> = pairs.iter().map(|c| c.target).collect();
            let Ok(pose) = fit_rigid_transform(&src, &dst) else {
                return false;
            };
            let m = pair_metrics(&pairs, &pairs, &pose, &p.scene.ground_truth, &DESK_THRESHOLDS);
            m.success
        })
        .collect();

    let pipeline_rr = rr(&runs);
    let baseline_rr = baseline.iter().filter(|&&b| b).count() as f64 / baseline.len() as f64;
    let mut final_inliers: Vec<usize> = runs.iter().map(|r| r.in_count).collect();
    final_inliers.sort_unstable();
    let median_final = final_inliers[final_inliers.len() / 2];
    let initial_inliers = 10usize;
    let passed = pipeline_rr > baseline_rr && median_final > 10 * initial_inliers;
    report(
        results,
        "extreme-outlier-regime",
        passed,
        format!(
            "pipeline RR {pipeline_rr:.3} vs baseline {baseline_rr:.3} (strictly greater required); median final inliers {median_final} (> {})",
            10 * initial_inliers
        ),
    );
}

// ── Criterion 6: ablation directions ──────────────────────────────────────

fn criterion_6(results: &mut Vec<Outcome>, prepared: &[PreparedScene], full: &[SceneRun]) {
    let one_stage = run_variant(prepared, &PipelineOptions { progressive: false, ..Default::default() });
    let mm = run_variant(prepared, &PipelineOptions { matching: MatchingMode::Mm, ..Default::default() });
    let nn = run_variant(prepared, &PipelineOptions { matching: MatchingMode::Nn, ..Default::default() });
    let local_only =
        run_variant(prepared, &PipelineOptions { stages: StageMode::LocalOnly, ..Default::default() });
    let global_only =
        run_variant(prepared, &PipelineOptions { stages: StageMode::GlobalOnly, ..Default::default() });

    let agreement = |a: &[SceneRun], b: &[SceneRun], key: fn(&SceneRun) -> f64| -> f64 {
        a.iter().zip(b).filter(|(x, y)| key(x) >= key(y)).count() as f64 / a.len() as f64
    };

    // (a) progressive ≥ one-stage in mean final inliers, with per-scene
    // directional agreement.
    let a_means = (mean_in(full), mean_in(&one_stage));
    let a_agree = agreement(full, &one_stage, |r| r.in_count as f64);
    let a_ok = a_means.0 >= a_means.1 && a_agree >= 0.8;

    // (b) generalized ≥ strict mutual ≥-ordering on mean final inliers (the
    // per-scene direction is a coin flip at this effect size; the mean
    // ordering is the tested claim). Plain NN is reported alongside.
    let b_means = (mean_in(full), mean_in(&mm), mean_in(&nn));
    let b_agree = agreement(full, &mm, |r| r.in_count as f64);
    let b_ok = b_means.0 >= b_means.1 && b_means.0 >= b_means.2;

    // (c) disabling either correction stage reduces RR, with per-scene
    // success agreeing in direction.
    let rr_full = rr(full);
    let rr_local = rr(&local_only);
    let rr_global = rr(&global_only);
    let c_agree_local = agreement(full, &local_only, |r| r.success as u8 as f64);
    let c_agree_global = agreement(full, &global_only, |r| r.success as u8 as f64);
    let c_ok =
        rr_full > rr_local && rr_full > rr_global && c_agree_local >= 0.8 && c_agree_global >= 0.8;

    let mut detail = String::new();
    let _ = write!(
        detail,
        "(a) mean IN {:.0} vs one-stage {:.0}, agree {:.0}%; ",
        a_means.0,
        a_means.1,
        a_agree * 100.0
    );
    let _ = write!(
        detail,
        "(b) GMM {:.0} ≥ MM {:.0} ≥ NN {:.0} (per-scene GMM≥MM {:.0}%); ",
        b_means.0,
        b_means.1,
        b_means.2,
        b_agree * 100.0
    );
    let _ = write!(
        detail,
        "(c) RR full {rr_full:.2} vs local-only {rr_local:.2} / global-only {rr_global:.2}, agree {:.0}%/{:.0}%",
        c_agree_local * 100.0,
        c_agree_global * 100.0
    );
    report(results, "ablation-directions", a_ok && b_ok && c_ok, detail);
}

// ── Criterion 7: point-level refinement ───────────────────────────────────

fn criterion_7(results: &mut Vec<Outcome>) {
    let params = RefinementParams::default();
    let outcomes: Vec<(bool, bool)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let spec = SceneSpec {
                point_count: 1200,
                overlap_fraction: 1.0,
                noise_sigma: 0.002,
                outlier_ratio: 0.5,
                initial_pair_count: 10,
                transform_magnitude: TransformMagnitude {
                    max_rotation_deg: 40.0,
                    max_translation: 0.4,
                },
                rng_seed: 7000 + i,
            };
            let scene = generate_scene(&spec).unwrap();
            let gt = scene.ground_truth.transform;
            let mut rng = ChaCha8Rng::seed_from_u64(9000 + i);
            let axis = nalgebra::Unit::new_normalize(random_direction(&mut rng));
            let spin = nalgebra::Rotation3::from_axis_angle(&axis, 2.0f64.to_radians());
            let start = RigidTransform::new(
                spin.into_inner() * gt.rotation(),
                gt.translation() + random_direction(&mut rng) * 0.05,
            )
            .unwrap();

            let index = SpatialIndex::build(&scene.target);
            let count_before = po_tcd_count(&start, &scene.source, &index, params.sigma_d);
            let refined = refine_pose(&start, &scene.source, &scene.target, &params).unwrap();
            let count_after = po_tcd_count(&refined, &scene.source, &index, params.sigma_d);

            let re_before = rotation_error_deg(start.rotation(), gt.rotation());
            let te_before = translation_error(start.translation(), gt.translation());
            let re_after = rotation_error_deg(refined.rotation(), gt.rotation());
            let te_after = translation_error(refined.translation(), gt.translation());
            (count_after >= count_before, re_after < re_before && te_after < te_before)
        })
        .collect();

    let monotone = outcomes.iter().filter(|(m, _)| *m).count();
    let improved = outcomes.iter().filter(|(_, i)| *i).count();
    let passed = monotone == 100 && improved >= 95;
    report(
        results,
        "point-level-refinement",
        passed,
        format!("criterion count non-decreasing in {monotone}/100 (need 100), RE and TE both reduced in {improved}/100 (need ≥ 95)"),
    );
}

// ── Criterion 8: oracle equivalence of the accelerated paths ──────────────

fn criterion_8(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let mut failures = Vec::new();

    // Spatial index: radius + nearest vs linear scans.
    for trial in 0..200 {
        let n = rng.gen_range(1..300);
        let points: Vec<nalgebra::Vector3<f64>> = (0..n)
            .map(|_| nalgebra::Vector3::new(rng.gen(), rng.gen(), rng.gen()))
            .collect();
        let cloud = PointCloud::new(points.clone()).unwrap();
        let index = SpatialIndex::build(&cloud);
        let center = nalgebra::Vector3::new(rng.gen(), rng.gen(), rng.gen());
        let radius = rng.gen::<f64>() * 0.8;
        let brute_radius: Vec<usize> = points
            .iter()
            .enumerate()
            .filter(|(_, p)| (*p - center).norm() <= radius)
            .map(|(i, _)| i)
            .collect();
        if index.radius_neighbors(&center, radius) != brute_radius {
            failures.push(format!("radius trial {trial}"));
        }
        let query = nalgebra::Vector3::new(rng.gen(), rng.gen(), rng.gen());
        let brute_nn = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p - query).norm_squared()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .unwrap();
        let (i, d) = index.nearest_neighbor(&query).unwrap();
        if i != brute_nn.0 || d != brute_nn.1.sqrt() {
            failures.push(format!("nn trial {trial}"));
        }
    }

    // Matching rows vs brute-force scans.
    for trial in 0..200 {
        let n = rng.gen_range(1..40);
        let m = rng.gen_range(1..40);
        let dim = rng.gen_range(1..6);
        let k = rng.gen_range(1..=5usize);
        let p = random_feats(&mut rng, n, dim);
        let q = random_feats(&mut rng, m, dim);
        let nn = nn_match(&p, &q).unwrap();
        let mnn = mnn_match(&p, &q, k).unwrap();
        for row in 0..n {
            let mut scored: Vec<(f64, usize)> = (0..m)
                .map(|col| (feature_distance(p.vector(row), q.vector(col)).unwrap(), col))
                .collect();
            scored.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if nn.row(row) != [scored[0].1] {
                failures.push(format!("nn-match trial {trial}"));
                break;
            }
            let mut expected: Vec<usize> =
                scored[..k.min(m)].iter().map(|&(_, col)| col).collect();
            expected.sort_unstable();
            if mnn.row(row) != expected.as_slice() {
                failures.push(format!("mnn-match trial {trial}"));
                break;
            }
        }
    }

    // Second-order consistency vs triple enumeration.
    for trial in 0..200 {
        let n = rng.gen_range(1..25);
        let pairs: Vec<PositionedCorrespondence> = (0..n)
            .map(|i| PositionedCorrespondence {
                source_index: i,
                target_index: i,
                source: nalgebra::Vector3::new(rng.gen(), rng.gen(), rng.gen()),
                target: nalgebra::Vector3::new(
                    rng.gen::<f64>() * 0.4,
                    rng.gen::<f64>() * 0.4,
                    rng.gen::<f64>() * 0.4,
                ),
            })
            .collect();
        let sigma = 0.2;
        let matrix = second_order_matrix(&pairs, sigma);
        let s = |j: usize, k: usize| -> u32 {
            let dp = (pairs[j].source - pairs[k].source).norm();
            let dq = (pairs[j].target - pairs[k].target).norm();
            ((dp - dq).abs() <= sigma) as u32
        };
        'outer: for j in 0..n {
            for k in 0..n {
                let expect = if j == k {
                    1
                } else if s(j, k) == 0 {
                    0
                } else {
                    (0..n).map(|t| s(j, t) * s(t, k)).sum()
                };
                if matrix.entry(j, k) != expect {
                    failures.push(format!("second-order trial {trial}"));
                    break 'outer;
                }
            }
        }
    }

    // Merge vs set union.
    for trial in 0..200 {
        let sets: Vec<Vec<PositionedCorrespondence>> = (0..rng.gen_range(1..5))
            .map(|_| {
                (0..rng.gen_range(0..40))
                    .map(|_| PositionedCorrespondence {
                        source_index: rng.gen_range(0..20),
                        target_index: rng.gen_range(0..20),
                        source: nalgebra::Vector3::zeros(),
                        target: nalgebra::Vector3::zeros(),
                    })
                    .collect()
            })
            .collect();
        let merged: Vec<(usize, usize)> = merge_correspondences(&sets)
            .iter()
            .map(|c| (c.source_index, c.target_index))
            .collect();
        let oracle: Vec<(usize, usize)> = sets
            .iter()
            .flatten()
            .map(|c| (c.source_index, c.target_index))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        if merged != oracle {
            failures.push(format!("merge trial {trial}"));
        }
    }

    let passed = failures.is_empty();
    report(
        results,
        "oracle-equivalence",
        passed,
        if passed {
            "spatial index, nn/mnn matching, second-order matrix and merge all bitwise-match brute force on 200 trials each".to_string()
        } else {
            format!("mismatches: {failures:?}")
        },
    );
}

// ── Criterion 9: benchmark determinism through the CLI ─────────────────────

fn criterion_9(results: &mut Vec<Outcome>) {
    let dir = tempfile::tempdir().unwrap();
    let spec = serde_json::json!({
        "point_count": 1200,
        "overlap_fraction": 0.7,
        "noise_sigma": 0.005,
        "transform_magnitude": { "max_rotation_deg": 45.0, "max_translation": 0.5 },
        "outlier_ratios": [0.85, 0.95],
        "inlier_bands": [[20, 40], [50, 70]],
        "scenes_per_cell": 3,
        "rng_seed": 99,
        "config": {}
    });
    let spec_path = dir.path().join("bench.json");
    std::fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();

    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_regor"))
            .args(["benchmark", "--spec"])
            .arg(&spec_path)
            .arg("--out")
            .arg(&out)
            .env("REGOR_THREADS", if run == 0 { "4" } else { "2" })
            .status()
            .unwrap();
        assert!(status.success(), "benchmark run failed");
        outputs.push((
            std::fs::read(out.join("summary.csv")).unwrap(),
            std::fs::read(out.join("pairs.jsonl")).unwrap(),
        ));
    }
    let passed = outputs[0] == outputs[1];
    report(
        results,
        "benchmark-determinism",
        passed,
        if passed {
            "summary.csv and pairs.jsonl byte-identical across reruns with different worker counts".to_string()
        } else {
            "byte mismatch between reruns".to_string()
        },
    );
}

#[test]
fn acceptance() {
    let mut results = Vec::new();

    criterion_1(&mut results);
    criterion_2(&mut results);
    criterion_3(&mut results);

    let desk_scenes = prepare_scenes(4000, 50, |seed| desk_spec(seed, 0.90, 500));
    let full_runs = criterion_4(&mut results, &desk_scenes);
    criterion_5(&mut results);
    criterion_6(&mut results, &desk_scenes, &full_runs);
    drop(desk_scenes);

    criterion_7(&mut results);
    criterion_8(&mut results);
    criterion_9(&mut results);

    let failures: Vec<&Outcome> = results.iter().filter(|o| !o.passed).collect();
    assert!(
        failures.is_empty(),
        "acceptance failures: {}",
        failures
            .iter()
            .map(|o| format!("[{}] {}", o.name, o.detail))
            .collect::<Vec<_>>()
            .join("; ")
    );
}
