//! Correspondence CSV: `src_index,dst_index` rows with an optional header.
//! Duplicate rows collapse on load.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::IoError;
use crate::geometry::{Correspondence, CorrespondenceSet};

pub fn load_correspondences(path: &Path) -> Result<CorrespondenceSet, IoError> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let first = fields.next().unwrap_or("");
        if i == 0 && first.parse::<usize>().is_err() {
            // Header row.
            continue;
        }
        let second = fields
            .next()
            .ok_or_else(|| IoError::parse(path, i + 1, "expected two comma-separated indices"))?;
        let parse = |t: &str| -> Result<usize, IoError> {
            t.parse()
                .map_err(|_| IoError::parse(path, i + 1, format!("cannot parse '{t}' as an index")))
        };
        pairs.push(Correspondence::new(parse(first)?, parse(second)?));
    }
    Ok(CorrespondenceSet::from_pairs(pairs))
}

pub fn save_correspondences(path: &Path, set: &CorrespondenceSet) -> Result<(), IoError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "src_index,dst_index")?;
    for pair in set.pairs() {
        writeln!(out, "{},{}", pair.source_index, pair.target_index)?;
    }
    Ok(())
}
