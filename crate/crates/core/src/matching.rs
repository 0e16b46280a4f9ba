//! Feature-space matching between two point sets.
//!
//! Four flavors build on one another: plain nearest-neighbor rows, top-k
//! rows, strict mutual matching (each the other's nearest), and generalized
//! mutual matching, which relaxes reciprocity — a pair survives when the
//! strict nearest in one direction is among the top-k in the other, in either
//! orientation. The relaxation never loses a strict mutual pair, so it always
//! yields at least as many correspondences.
//!
//! All matrices are stored source-rows × target-columns; the reverse-direction
//! matrices are transposed before elementwise combination.

use rayon::prelude::*;
use thiserror::Error;

use crate::features::{distance_sq, FeatureSet};
use crate::geometry::{Correspondence, CorrespondenceSet};

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("cannot match against an empty feature set")]
    EmptySet,
    #[error("feature dimensions differ ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
}

/// Row-per-source boolean relation over (source, target) index pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchMatrix {
    rows: Vec<Vec<usize>>,
    num_targets: usize,
}

impl MatchMatrix {
    pub fn num_sources(&self) -> usize {
        self.rows.len()
    }

    pub fn num_targets(&self) -> usize {
        self.num_targets
    }

    /// True entries of one source row, sorted by target index.
    pub fn row(&self, source: usize) -> &[usize] {
        &self.rows[source]
    }

    pub fn contains(&self, source: usize, target: usize) -> bool {
        self.rows[source].binary_search(&target).is_ok()
    }

    /// All true entries in row-major order.
    pub fn true_entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(m, row)| row.iter().map(move |&n| (m, n)))
    }
}

fn check_inputs(src: &FeatureSet, dst: &FeatureSet) -> Result<(), MatchError> {
    if src.is_empty() || dst.is_empty() {
        return Err(MatchError::EmptySet);
    }
    if src.dim() != dst.dim() {
        return Err(MatchError::DimensionMismatch { left: src.dim(), right: dst.dim() });
    }
    Ok(())
}

/// Feature-space nearest target of one source vector; distance ties break
/// toward the smallest target index.
fn nearest_of(row: &[f64], dst: &FeatureSet) -> usize {
    let mut best = (f64::INFINITY, 0usize);
    for (n, candidate) in dst.vectors().iter().enumerate() {
        let d2 = distance_sq(row, candidate);
        if d2 < best.0 {
            best = (d2, n);
        }
    }
    best.1
}

/// Indices of the k feature-nearest targets, ties by smaller index.
fn top_k_of(row: &[f64], dst: &FeatureSet, k: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = dst
        .vectors()
        .iter()
        .enumerate()
        .map(|(n, candidate)| (distance_sq(row, candidate), n))
        .collect();
    let k = k.min(scored.len());
    scored.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let mut out: Vec<usize> = scored[..k].iter().map(|&(_, n)| n).collect();
    out.sort_unstable();
    out
}

const PARALLEL_THRESHOLD: usize = 256;

fn per_row<F>(src: &FeatureSet, f: F) -> Vec<Vec<usize>>
where
    F: Fn(&[f64]) -> Vec<usize> + Sync,
{
    if src.len() >= PARALLEL_THRESHOLD {
        src.vectors().par_iter().map(|row| f(row)).collect()
    } else {
        src.vectors().iter().map(|row| f(row)).collect()
    }
}

/// One true entry per source row: its feature-space nearest target.
pub fn nn_match(src: &FeatureSet, dst: &FeatureSet) -> Result<MatchMatrix, MatchError> {
    check_inputs(src, dst)?;
    Ok(MatchMatrix {
        rows: per_row(src, |row| vec![nearest_of(row, dst)]),
        num_targets: dst.len(),
    })
}

/// The k nearest targets per source row (k clipped to the target count).
pub fn mnn_match(src: &FeatureSet, dst: &FeatureSet, k: usize) -> Result<MatchMatrix, MatchError> {
    assert!(k >= 1, "mnn_match requires k >= 1");
    check_inputs(src, dst)?;
    Ok(MatchMatrix {
        rows: per_row(src, |row| top_k_of(row, dst, k)),
        num_targets: dst.len(),
    })
}

/// Strict reciprocity: pairs where each side is the other's nearest.
pub fn mutual_match(
    p_feats: &FeatureSet,
    q_feats: &FeatureSet,
) -> Result<CorrespondenceSet, MatchError> {
    let forward = nn_match(p_feats, q_feats)?;
    let backward = nn_match(q_feats, p_feats)?;
    let mut pairs = Vec::new();
    for (m, row) in (0..forward.num_sources()).map(|m| (m, forward.row(m))) {
        let n = row[0];
        if backward.row(n)[0] == m {
            pairs.push(Correspondence::new(m, n));
        }
    }
    Ok(CorrespondenceSet::from_pairs(pairs))
}

/// Relaxed reciprocity: `(M₁ᴾ→Q ⊙ M₂Q→ᴾᵀ) ⊗ (M₁Q→ᴾᵀ ⊙ M₂ᴾ→Q)` with ⊙ the
/// elementwise AND and ⊗ the elementwise OR. Always a superset of
/// [`mutual_match`], and identical to it for `k = 1`.
pub fn generalized_mutual_match(
    p_feats: &FeatureSet,
    q_feats: &FeatureSet,
    k: usize,
) -> Result<CorrespondenceSet, MatchError> {
    let nn_pq = nn_match(p_feats, q_feats)?;
    let nn_qp = nn_match(q_feats, p_feats)?;
    let mnn_pq = mnn_match(p_feats, q_feats, k)?;
    let mnn_qp = mnn_match(q_feats, p_feats, k)?;

    let mut pairs = Vec::new();
    // First branch: strict NN forward, top-k backward.
    for m in 0..nn_pq.num_sources() {
        let n = nn_pq.row(m)[0];
        if mnn_qp.contains(n, m) {
            pairs.push(Correspondence::new(m, n));
        }
    }
    // Second branch: strict NN backward, top-k forward.
    for n in 0..nn_qp.num_sources() {
        let m = nn_qp.row(n)[0];
        if mnn_pq.contains(m, n) {
            pairs.push(Correspondence::new(m, n));
        }
    }
    Ok(CorrespondenceSet::from_pairs(pairs))
}

/// Every source row paired with its nearest target, no reciprocity at all.
/// This is the weakest matcher; it exists as an ablation reference.
pub fn nn_correspondences(
    p_feats: &FeatureSet,
    q_feats: &FeatureSet,
) -> Result<CorrespondenceSet, MatchError> {
    let forward = nn_match(p_feats, q_feats)?;
    Ok(CorrespondenceSet::from_pairs(
        forward.true_entries().map(|(m, n)| Correspondence::new(m, n)).collect(),
    ))
}
