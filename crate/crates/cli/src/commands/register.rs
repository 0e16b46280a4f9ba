//! `regor register`: run the full pipeline on a pair of clouds and write the
//! estimated transform, the final correspondences and the stage trace.

use std::fs;
use std::path::{Path, PathBuf};

use regor_core::features::{compute_weak_descriptor, FeatureSet};
use regor_core::geometry::{CorrespondenceSet, PointCloud, RigidTransform};
use regor_core::io::{self, RunConfig};
use regor_core::refinement::refine_pose;
use regor_core::regeneration::{
    bootstrap_correspondences, regenerate, LocalConsistencyMode, MatchingMode, StageMode,
};

use super::{load_cloud_checked, require_file};
use crate::CliError;

pub struct RegisterArgs {
    pub source: PathBuf,
    pub target: PathBuf,
    pub features_src: Option<PathBuf>,
    pub features_dst: Option<PathBuf>,
    pub init_corr: Option<PathBuf>,
    pub config: PathBuf,
    pub out: PathBuf,
    /// `key=value` ablation overrides applied on top of the config file.
    pub ablation: Vec<String>,
}

/// Applies `--ablation key=value` overrides to a loaded config.
pub fn apply_ablation_overrides(config: &mut RunConfig, overrides: &[String]) -> Result<(), CliError> {
    for entry in overrides {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| CliError::invalid(format!("ablation '{entry}' is not key=value")))?;
        match (key, value) {
            ("matching", "nn") => config.ablation.matching = MatchingMode::Nn,
            ("matching", "mm") => config.ablation.matching = MatchingMode::Mm,
            ("matching", "gmm") => config.ablation.matching = MatchingMode::Gmm,
            ("consistency", "sc") => config.ablation.consistency = LocalConsistencyMode::Sc,
            ("consistency", "ctc") => config.ablation.consistency = LocalConsistencyMode::Ctc,
            ("stages", "local_only") => config.ablation.stages = StageMode::LocalOnly,
            ("stages", "global_only") => config.ablation.stages = StageMode::GlobalOnly,
            ("stages", "both") => config.ablation.stages = StageMode::Both,
            ("progressive", "on") => config.ablation.progressive = true,
            ("progressive", "off") => config.ablation.progressive = false,
            _ => {
                return Err(CliError::invalid(format!(
                    "unknown ablation setting '{key}={value}'"
                )))
            }
        }
    }
    Ok(())
}

fn features_for(
    cloud: &PointCloud,
    file: Option<&Path>,
    support_radius: f64,
) -> Result<FeatureSet, CliError> {
    match file {
        Some(path) => {
            require_file(path)?;
            let feats = io::read_feature_file(path).map_err(|e| CliError::from_io(e, path))?;
            feats
                .validate_for(cloud)
                .map_err(|e| CliError::invalid(e.to_string()))?;
            Ok(feats)
        }
        None => Ok(compute_weak_descriptor(cloud, support_radius)?),
    }
}

pub fn run(args: &RegisterArgs) -> Result<(), CliError> {
    require_file(&args.config)?;
    let mut config = RunConfig::load(&args.config).map_err(|e| CliError::from_io(e, &args.config))?;
    apply_ablation_overrides(&mut config, &args.ablation)?;

    let source = load_cloud_checked(&args.source)?;
    let target = load_cloud_checked(&args.target)?;
    let source_feats =
        features_for(&source, args.features_src.as_deref(), config.descriptor.support_radius)?;
    let target_feats =
        features_for(&target, args.features_dst.as_deref(), config.descriptor.support_radius)?;

    let initial: CorrespondenceSet = match &args.init_corr {
        Some(path) => {
            require_file(path)?;
            let set = io::load_correspondences(path).map_err(|e| CliError::from_io(e, path))?;
            set.validate_for(&source, &target)
                .map_err(|e| CliError::invalid(e.to_string()))?;
            set
        }
        None if config.bootstrap => bootstrap_correspondences(
            &source,
            &target,
            &source_feats,
            &target_feats,
            &config.schedule.params,
            config.schedule.global_cap,
            config.rng_seed,
        )?,
        None => {
            return Err(CliError::invalid(
                "no --init-corr given and bootstrap is disabled in the config",
            ))
        }
    };

    let result = regenerate(
        &source,
        &target,
        &source_feats,
        &target_feats,
        &initial,
        &config.schedule,
        &config.ablation,
        config.rng_seed,
    )?;

    let mut transform: RigidTransform = result.transform;
    if config.refine && !result.collapsed {
        match refine_pose(&transform, &source, &target, &config.refinement) {
            Ok(refined) => transform = refined,
            Err(err) => {
                eprintln!("warning: pose refinement skipped: {err}");
            }
        }
    }

    fs::create_dir_all(&args.out)?;
    io::save_transform(&args.out.join("transform.json"), &transform)?;
    io::save_correspondences(&args.out.join("correspondences.csv"), &result.correspondences)?;
    let trace_json = serde_json::to_string_pretty(&result.trace)
        .map_err(|e| CliError::invalid(e.to_string()))?;
    fs::write(args.out.join("trace.json"), trace_json + "\n")?;

    println!(
        "registered: {} correspondences across {} stages{}",
        result.correspondences.len(),
        result.trace.stages.len(),
        if result.collapsed { " (collapsed: best earlier state kept)" } else { "" }
    );
    Ok(())
}
