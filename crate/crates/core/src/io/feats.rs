//! Binary feature container for externally computed descriptors:
//! little-endian `u32 N, u32 D` header followed by N×D float32 values in
//! row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::IoError;
use crate::features::FeatureSet;

pub fn read_feature_file(path: &Path) -> Result<FeatureSet, IoError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 8 {
        return Err(IoError::parse(path, 0, "file shorter than the 8-byte header"));
    }
    let n = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let expected = 8 + n * d * 4;
    if bytes.len() != expected {
        return Err(IoError::parse(
            path,
            0,
            format!("expected {expected} bytes for {n}x{d} float32, found {}", bytes.len()),
        ));
    }
    if n == 0 || d == 0 {
        return Err(IoError::parse(path, 0, "feature file declares a zero dimension"));
    }
    let mut vectors = Vec::with_capacity(n);
    let mut offset = 8;
    for _ in 0..n {
        let mut row = Vec::with_capacity(d);
        for _ in 0..d {
            let v = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
            row.push(v as f64);
            offset += 4;
        }
        vectors.push(row);
    }
    FeatureSet::new(vectors).map_err(|e| IoError::parse(path, 0, e.to_string()))
}

pub fn write_feature_file(path: &Path, features: &FeatureSet) -> Result<(), IoError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    out.write_all(&(features.len() as u32).to_le_bytes())?;
    out.write_all(&(features.dim() as u32).to_le_bytes())?;
    for row in features.vectors() {
        for &v in row {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}
