//! Rigid transforms as 4×4 homogeneous row-major JSON.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::geometry::RigidTransform;

#[derive(Serialize, Deserialize)]
struct TransformRecord {
    /// Row-major homogeneous matrix; the last row must be (0, 0, 0, 1).
    transform: [[f64; 4]; 4],
}

pub fn transform_to_matrix(t: &RigidTransform) -> [[f64; 4]; 4] {
    let r = t.rotation();
    let tr = t.translation();
    [
        [r[(0, 0)], r[(0, 1)], r[(0, 2)], tr.x],
        [r[(1, 0)], r[(1, 1)], r[(1, 2)], tr.y],
        [r[(2, 0)], r[(2, 1)], r[(2, 2)], tr.z],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

pub fn save_transform(path: &Path, t: &RigidTransform) -> Result<(), IoError> {
    let record = TransformRecord { transform: transform_to_matrix(t) };
    let json = serde_json::to_string_pretty(&record)?;
    fs::write(path, json + "\n")?;
    Ok(())
}

pub fn load_transform(path: &Path) -> Result<RigidTransform, IoError> {
    let text = fs::read_to_string(path)?;
    let record: TransformRecord = serde_json::from_str(&text)?;
    let m = record.transform;
    if m[3] != [0.0, 0.0, 0.0, 1.0] {
        return Err(IoError::InvalidConfig(
            "transform matrix must end with the homogeneous row (0, 0, 0, 1)".into(),
        ));
    }
    let rotation = nalgebra::Matrix3::new(
        m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
    );
    let translation = nalgebra::Vector3::new(m[0][3], m[1][3], m[2][3]);
    RigidTransform::new(rotation, translation)
        .map_err(|e| IoError::InvalidConfig(e.to_string()))
}
