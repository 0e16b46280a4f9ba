//! File formats spoken by the toolkit: ASCII PLY and XYZ clouds,
//! correspondence CSV, the binary feature container, 4×4 transform JSON and
//! the run configuration. Every format written here can be read back by the
//! corresponding loader.

mod cloud;
mod config;
mod corr;
mod feats;
mod transform;

pub use cloud::{load_point_cloud, save_point_cloud_ply, save_point_cloud_xyz};
pub use config::{DescriptorConfig, MetricsConfig, RunConfig};
pub use corr::{load_correspondences, save_correspondences};
pub use feats::{read_feature_file, write_feature_file};
pub use transform::{load_transform, save_transform};

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: unsupported format: {message}")]
    UnsupportedFormat { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl IoError {
    pub(crate) fn parse(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        IoError::Parse { path: path.to_path_buf(), line, message: message.into() }
    }
}
