//! `regor eval`: compute pair metrics from files produced earlier (clouds,
//! initial and final correspondences, estimated and ground-truth transforms).

use std::fs;
use std::path::PathBuf;

use regor_core::evaluation::{pair_metrics, GroundTruth};
use regor_core::geometry::position_set;
use regor_core::io::{self, RunConfig};

use super::{load_cloud_checked, require_file};
use crate::CliError;

pub struct EvalArgs {
    pub source: PathBuf,
    pub target: PathBuf,
    pub transform: PathBuf,
    pub gt_transform: PathBuf,
    pub init_corr: PathBuf,
    pub final_corr: PathBuf,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    let config = match &args.config {
        Some(path) => {
            require_file(path)?;
            RunConfig::load(path).map_err(|e| CliError::from_io(e, path))?
        }
        None => RunConfig::default(),
    };

    let source = load_cloud_checked(&args.source)?;
    let target = load_cloud_checked(&args.target)?;
    require_file(&args.transform)?;
    require_file(&args.gt_transform)?;
    require_file(&args.init_corr)?;
    require_file(&args.final_corr)?;

    let estimated = io::load_transform(&args.transform)
        .map_err(|e| CliError::from_io(e, &args.transform))?;
    let gt_pose = io::load_transform(&args.gt_transform)
        .map_err(|e| CliError::from_io(e, &args.gt_transform))?;
    let initial = io::load_correspondences(&args.init_corr)
        .map_err(|e| CliError::from_io(e, &args.init_corr))?;
    let fin = io::load_correspondences(&args.final_corr)
        .map_err(|e| CliError::from_io(e, &args.final_corr))?;

    let initial = position_set(&initial, &source, &target)
        .map_err(|e| CliError::invalid(e.to_string()))?;
    let fin = position_set(&fin, &source, &target)
        .map_err(|e| CliError::invalid(e.to_string()))?;

    let gt = GroundTruth { transform: gt_pose, inlier_tolerance: config.metrics.inlier_tolerance };
    let metrics = pair_metrics(&initial, &fin, &estimated, &gt, &config.metrics.thresholds);
    let json = serde_json::to_string_pretty(&metrics).map_err(|e| CliError::invalid(e.to_string()))?;
    if let Some(out) = &args.out {
        if let Some(parent) = out.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(out, json.clone() + "\n")?;
    }
    println!("{json}");
    Ok(())
}
