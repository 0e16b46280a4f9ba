pub mod benchmark;
pub mod eval;
pub mod register;
pub mod synth;

use std::path::Path;

use regor_core::geometry::PointCloud;
use regor_core::io;

use crate::CliError;

/// Loads a cloud, turning a missing file into the not-found exit class.
pub(crate) fn load_cloud_checked(path: &Path) -> Result<PointCloud, CliError> {
    if !path.exists() {
        return Err(CliError::not_found(path));
    }
    io::load_point_cloud(path).map_err(|e| CliError::from_io(e, path))
}

pub(crate) fn require_file(path: &Path) -> Result<(), CliError> {
    if !path.exists() {
        return Err(CliError::not_found(path));
    }
    Ok(())
}
