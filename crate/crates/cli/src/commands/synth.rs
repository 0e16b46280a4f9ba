//! `regor synth`: generate one synthetic scene and write it as loadable
//! files (clouds, initial correspondences, ground-truth transform).

use std::fs;
use std::path::PathBuf;

use regor_core::evaluation::{generate_scene, SceneSpec};
use regor_core::io;

use super::require_file;
use crate::CliError;

pub struct SynthArgs {
    pub spec: PathBuf,
    pub out: PathBuf,
}

pub fn run(args: &SynthArgs) -> Result<(), CliError> {
    require_file(&args.spec)?;
    let text = fs::read_to_string(&args.spec)
        .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", args.spec.display())))?;
    let spec: SceneSpec =
        serde_json::from_str(&text).map_err(|e| CliError::invalid(e.to_string()))?;
    let scene = generate_scene(&spec)?;

    fs::create_dir_all(&args.out)?;
    io::save_point_cloud_ply(&args.out.join("source.ply"), &scene.source)?;
    io::save_point_cloud_ply(&args.out.join("target.ply"), &scene.target)?;
    io::save_correspondences(&args.out.join("init_corr.csv"), &scene.initial)?;
    io::save_transform(&args.out.join("gt_transform.json"), &scene.ground_truth.transform)?;
    let meta = serde_json::json!({
        "spec": spec,
        "inlier_tolerance": scene.ground_truth.inlier_tolerance,
    });
    fs::write(
        args.out.join("scene.json"),
        serde_json::to_string_pretty(&meta).map_err(|e| CliError::invalid(e.to_string()))? + "\n",
    )?;

    println!(
        "scene written: {} source points, {} target points, {} initial pairs",
        scene.source.len(),
        scene.target.len(),
        scene.initial.len()
    );
    Ok(())
}
