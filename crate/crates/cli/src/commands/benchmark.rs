//! `regor benchmark`: sweep a grid of outlier ratios × initial-inlier bands,
//! run the pipeline on freshly generated scenes for every cell, and write
//! per-pair JSONL records plus a per-cell summary CSV. Outputs are
//! deterministic for a fixed spec regardless of worker count.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use regor_core::evaluation::{
    dataset_metrics, generate_scene, pair_metrics, PairMetrics, SceneSpec, TransformMagnitude,
};
use regor_core::features::compute_weak_descriptor;
use regor_core::geometry::position_set;
use regor_core::io::RunConfig;
use regor_core::refinement::refine_pose;
use regor_core::regeneration::regenerate;

use super::require_file;
use crate::CliError;

pub struct BenchmarkArgs {
    pub spec: PathBuf,
    pub out: PathBuf,
}

/// Grid description: every `(outlier_ratio, inlier_band)` cell gets
/// `scenes_per_cell` scenes whose true-pair counts are drawn from the band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSpec {
    pub point_count: usize,
    pub overlap_fraction: f64,
    pub noise_sigma: f64,
    pub transform_magnitude: TransformMagnitude,
    pub outlier_ratios: Vec<f64>,
    /// Inclusive `[lo, hi]` bands of initial true-pair counts.
    pub inlier_bands: Vec<[usize; 2]>,
    pub scenes_per_cell: usize,
    pub rng_seed: u64,
    pub config: RunConfig,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            point_count: 2000,
            overlap_fraction: 0.7,
            noise_sigma: 0.005,
            transform_magnitude: TransformMagnitude {
                max_rotation_deg: 45.0,
                max_translation: 0.5,
            },
            outlier_ratios: vec![0.9, 0.99],
            inlier_bands: vec![[20, 40], [60, 80]],
            scenes_per_cell: 3,
            rng_seed: 0,
            config: RunConfig::default(),
        }
    }
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.outlier_ratios.is_empty() || self.inlier_bands.is_empty() {
            return Err(CliError::invalid("benchmark grid must have at least one cell"));
        }
        for &ratio in &self.outlier_ratios {
            if !(0.0..1.0).contains(&ratio) {
                return Err(CliError::invalid(format!(
                    "invalid spec: outlier_ratio {ratio} must lie in [0, 1)"
                )));
            }
        }
        for band in &self.inlier_bands {
            if band[0] == 0 || band[0] > band[1] {
                return Err(CliError::invalid(format!(
                    "invalid spec: inlier band [{}, {}]",
                    band[0], band[1]
                )));
            }
        }
        if self.scenes_per_cell == 0 {
            return Err(CliError::invalid("scenes_per_cell must be positive"));
        }
        self.config.validate().map_err(|e| CliError::invalid(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneRecord {
    pub outlier_ratio: f64,
    pub band: [usize; 2],
    pub scene: usize,
    pub rng_seed: u64,
    pub initial_pairs: usize,
    pub final_pairs: usize,
    pub collapsed: bool,
    /// Ground-truth inlier count of the pool after each pipeline stage.
    pub stage_inliers: Vec<usize>,
    /// Pool size after each pipeline stage.
    pub stage_pairs: Vec<usize>,
    pub metrics: PairMetrics,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// One grid job, fully determined by the spec.
fn run_scene(
    spec: &BenchmarkSpec,
    outlier_ratio: f64,
    band: [usize; 2],
    scene_index: usize,
    scene_seed: u64,
) -> Result<SceneRecord, CliError> {
    let span = band[1] - band[0] + 1;
    let target_inliers = band[0] + (splitmix64(scene_seed ^ 0x5EED) as usize) % span;
    let initial_pair_count =
        ((target_inliers as f64) / (1.0 - outlier_ratio)).round().max(1.0) as usize;

    let scene_spec = SceneSpec {
        point_count: spec.point_count,
        overlap_fraction: spec.overlap_fraction,
        noise_sigma: spec.noise_sigma,
        outlier_ratio,
        initial_pair_count,
        transform_magnitude: spec.transform_magnitude,
        rng_seed: scene_seed,
    };
    let scene = generate_scene(&scene_spec)?;
    let support = spec.config.descriptor.support_radius;
    let source_feats = compute_weak_descriptor(&scene.source, support)?;
    let target_feats = compute_weak_descriptor(&scene.target, support)?;

    let result = regenerate(
        &scene.source,
        &scene.target,
        &source_feats,
        &target_feats,
        &scene.initial,
        &spec.config.schedule,
        &spec.config.ablation,
        scene_seed,
    )?;
    let mut transform = result.transform;
    if spec.config.refine && !result.collapsed {
        if let Ok(refined) = refine_pose(&transform, &scene.source, &scene.target, &spec.config.refinement)
        {
            transform = refined;
        }
    }

    let initial = position_set(&scene.initial, &scene.source, &scene.target)?;
    let fin = position_set(&result.correspondences, &scene.source, &scene.target)?;
    let metrics = pair_metrics(
        &initial,
        &fin,
        &transform,
        &scene.ground_truth,
        &spec.config.metrics.thresholds,
    );

    let mut stage_inliers = Vec::with_capacity(result.stage_sets.len());
    let mut stage_pairs = Vec::with_capacity(result.stage_sets.len());
    for set in &result.stage_sets {
        let positioned = position_set(set, &scene.source, &scene.target)?;
        stage_inliers.push(
            positioned
                .iter()
                .filter(|c| regor_core::evaluation::is_inlier(c, &scene.ground_truth))
                .count(),
        );
        stage_pairs.push(set.len());
    }

    Ok(SceneRecord {
        outlier_ratio,
        band,
        scene: scene_index,
        rng_seed: scene_seed,
        initial_pairs: initial.len(),
        final_pairs: fin.len(),
        collapsed: result.collapsed,
        stage_inliers,
        stage_pairs,
        metrics,
    })
}

fn format_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Runs the whole grid and writes `pairs.jsonl` and `summary.csv` under
/// `out`. Returns the records for in-process callers.
pub fn run_spec(spec: &BenchmarkSpec, out: &std::path::Path) -> Result<Vec<SceneRecord>, CliError> {
    spec.validate()?;

    let mut jobs = Vec::new();
    for (ri, &ratio) in spec.outlier_ratios.iter().enumerate() {
        for (bi, &band) in spec.inlier_bands.iter().enumerate() {
            for scene_index in 0..spec.scenes_per_cell {
                let cell = ((ri as u64) << 40) | ((bi as u64) << 20) | scene_index as u64;
                let seed = splitmix64(spec.rng_seed ^ splitmix64(cell));
                jobs.push((ratio, band, scene_index, seed));
            }
        }
    }

    let records: Result<Vec<SceneRecord>, CliError> = jobs
        .par_iter()
        .map(|&(ratio, band, scene_index, seed)| run_scene(spec, ratio, band, scene_index, seed))
        .collect();
    let records = records?;

    fs::create_dir_all(out)?;
    let mut jsonl = std::io::BufWriter::new(fs::File::create(out.join("pairs.jsonl"))?);
    for record in &records {
        let line = serde_json::to_string(record).map_err(|e| CliError::invalid(e.to_string()))?;
        writeln!(jsonl, "{line}")?;
    }
    drop(jsonl);

    let mut csv = std::io::BufWriter::new(fs::File::create(out.join("summary.csv"))?);
    writeln!(
        csv,
        "outlier_ratio,band_lo,band_hi,scenes,rr,mean_re_deg,mean_te,mean_ip,mean_in,mean_inr,fmr"
    )?;
    let mut cell_summaries = Vec::new();
    for &ratio in &spec.outlier_ratios {
        for &band in &spec.inlier_bands {
            let cell: Vec<PairMetrics> = records
                .iter()
                .filter(|r| r.outlier_ratio == ratio && r.band == band)
                .map(|r| r.metrics)
                .collect();
            let summary = dataset_metrics(&cell).map_err(CliError::from)?;
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{}",
                ratio,
                band[0],
                band[1],
                summary.pair_count,
                summary.rr,
                format_opt(summary.mean_re_deg),
                format_opt(summary.mean_te),
                summary.mean_ip,
                summary.mean_in,
                summary.mean_inr,
                summary.fmr
            )?;
            cell_summaries.push(serde_json::json!({
                "outlier_ratio": ratio,
                "band": band,
                "summary": summary,
            }));
        }
    }
    drop(csv);

    let summary_json = serde_json::to_string_pretty(&cell_summaries)
        .map_err(|e| CliError::invalid(e.to_string()))?;
    fs::write(out.join("summary.json"), summary_json + "\n")?;

    // Plot-ready CSVs: pool inlier count by pipeline stage, and recall as a
    // function of the outlier ratio.
    let mut stages_csv = std::io::BufWriter::new(fs::File::create(out.join("stage_inliers.csv"))?);
    writeln!(stages_csv, "outlier_ratio,band_lo,band_hi,stage,mean_inliers,mean_pairs")?;
    for &ratio in &spec.outlier_ratios {
        for &band in &spec.inlier_bands {
            let cell: Vec<&SceneRecord> = records
                .iter()
                .filter(|r| r.outlier_ratio == ratio && r.band == band)
                .collect();
            let max_stages = cell.iter().map(|r| r.stage_inliers.len()).max().unwrap_or(0);
            for stage in 0..max_stages {
                let with_stage: Vec<&&SceneRecord> =
                    cell.iter().filter(|r| stage < r.stage_inliers.len()).collect();
                let mean_in = with_stage.iter().map(|r| r.stage_inliers[stage] as f64).sum::<f64>()
                    / with_stage.len() as f64;
                let mean_pairs = with_stage.iter().map(|r| r.stage_pairs[stage] as f64).sum::<f64>()
                    / with_stage.len() as f64;
                writeln!(
                    stages_csv,
                    "{},{},{},{},{},{}",
                    ratio,
                    band[0],
                    band[1],
                    stage + 1,
                    mean_in,
                    mean_pairs
                )?;
            }
        }
    }
    drop(stages_csv);

    let mut rr_csv = std::io::BufWriter::new(fs::File::create(out.join("rr_by_ratio.csv"))?);
    writeln!(rr_csv, "outlier_ratio,scenes,rr")?;
    for &ratio in &spec.outlier_ratios {
        let cell: Vec<PairMetrics> = records
            .iter()
            .filter(|r| r.outlier_ratio == ratio)
            .map(|r| r.metrics)
            .collect();
        let summary = dataset_metrics(&cell).map_err(CliError::from)?;
        writeln!(rr_csv, "{},{},{}", ratio, summary.pair_count, summary.rr)?;
    }
    Ok(records)
}

pub fn run(args: &BenchmarkArgs) -> Result<(), CliError> {
    require_file(&args.spec)?;
    let text = fs::read_to_string(&args.spec)?;
    let spec: BenchmarkSpec =
        serde_json::from_str(&text).map_err(|e| CliError::invalid(e.to_string()))?;
    let records = run_spec(&spec, &args.out)?;
    let successes = records.iter().filter(|r| r.metrics.success).count();
    println!(
        "benchmark complete: {} scenes, {} successes; outputs in {}",
        records.len(),
        successes,
        args.out.display()
    );
    Ok(())
}
