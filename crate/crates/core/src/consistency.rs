//! Geometric compatibility measures over correspondence sets.
//!
//! The pairwise test compares intra-cloud distances of two correspondences —
//! a translation- and rotation-invariant rigidity check. On top of it sit the
//! center-aware three-point consistency used inside local regions (either
//! σ-consistent with the seed on both sides, or directly σ/2-consistent), the
//! local region score that certifies an inlier fraction, and the second-order
//! measure used at the global stage (count of commonly consistent third
//! correspondences, gated by first-order consistency).

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::PositionedCorrespondence;

#[derive(Debug, Error)]
pub enum ConsistencyError {
    #[error("only {found} correspondences have mutual support, need at least 3")]
    TooFewConsistent { found: usize },
    #[error("invalid consistency parameters: {0}")]
    InvalidParams(&'static str),
}

/// Tolerances steering every consistency decision, in scene meters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConsistencyParams {
    /// Distance-difference tolerance σ of the pairwise test.
    pub sigma: f64,
    /// Correction radius σ_d: residual ceiling when re-snapping pairs.
    pub sigma_d: f64,
    /// Inlier-fraction threshold a ∈ (0, 1) of the local score.
    pub a: f64,
}

impl ConsistencyParams {
    pub fn new(sigma: f64, sigma_d: f64, a: f64) -> Result<Self, ConsistencyError> {
        let params = Self { sigma, sigma_d, a };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ConsistencyError> {
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(ConsistencyError::InvalidParams("sigma must be positive"));
        }
        if !self.sigma_d.is_finite() || self.sigma_d <= 0.0 {
            return Err(ConsistencyError::InvalidParams("sigma_d must be positive"));
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(ConsistencyError::InvalidParams("a must lie in (0, 1)"));
        }
        Ok(())
    }
}

impl Default for ConsistencyParams {
    /// Indoor-scale defaults: σ = σ_d = 0.1 m, a = 0.5. Scale σ and σ_d with
    /// the scene when it is not metric-meter indoor data.
    fn default() -> Self {
        Self { sigma: 0.1, sigma_d: 0.1, a: 0.5 }
    }
}

/// Symmetric N×N score matrix with unit diagonal. Entries are 0/1 for the
/// pairwise and center-aware tests and small counts for the second-order
/// measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyMatrix {
    n: usize,
    values: Vec<u32>,
}

impl ConsistencyMatrix {
    fn from_rows(n: usize, mut values: Vec<u32>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        // A correspondence is always consistent with itself.
        for j in 0..n {
            values[j * n + j] = 1;
        }
        Self { n, values }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, row: usize, col: usize) -> u32 {
        self.values[row * self.n + col]
    }

    pub fn row_sum(&self, row: usize) -> u64 {
        self.values[row * self.n..(row + 1) * self.n]
            .iter()
            .map(|&v| v as u64)
            .sum()
    }

    /// Matrix 1-norm: the maximum absolute column sum. Columns equal rows
    /// here because every constructor yields a symmetric matrix.
    pub fn max_column_sum(&self) -> u64 {
        (0..self.n).map(|j| self.row_sum(j)).max().unwrap_or(0)
    }
}

/// Rigidity test of Boolean outcome: do two correspondences preserve their
/// intra-cloud distance within `sigma`?
pub fn pairwise_consistency(
    g_i: &PositionedCorrespondence,
    g_j: &PositionedCorrespondence,
    sigma: f64,
) -> bool {
    let dp = (g_i.source - g_j.source).norm();
    let dq = (g_i.target - g_j.target).norm();
    (dp - dq).abs() <= sigma
}

/// Center-aware three-point consistency: both sides σ-consistent with the
/// seed, or the two correspondences directly consistent at the strict σ/2
/// tolerance (which rescues pairs when the seed itself is wrong).
pub fn ctc_score(
    g_j: &PositionedCorrespondence,
    g_k: &PositionedCorrespondence,
    center: &PositionedCorrespondence,
    params: &ConsistencyParams,
) -> bool {
    (pairwise_consistency(g_j, center, params.sigma)
        && pairwise_consistency(center, g_k, params.sigma))
        || pairwise_consistency(g_j, g_k, params.sigma / 2.0)
}

const PARALLEL_ROWS: usize = 256;

fn build_matrix<F>(n: usize, entry: F) -> ConsistencyMatrix
where
    F: Fn(usize, usize) -> u32 + Sync + Send,
{
    let values: Vec<u32> = if n >= PARALLEL_ROWS {
        let entry = &entry;
        (0..n)
            .into_par_iter()
            .flat_map_iter(|j| (0..n).map(move |k| entry(j, k)))
            .collect()
    } else {
        let mut values = vec![0u32; n * n];
        for j in 0..n {
            for k in 0..n {
                values[j * n + k] = entry(j, k);
            }
        }
        values
    };
    ConsistencyMatrix::from_rows(n, values)
}

/// Full CTC score matrix of a local correspondence set around its seed.
pub fn ctc_matrix(
    local_set: &[PositionedCorrespondence],
    center: &PositionedCorrespondence,
    params: &ConsistencyParams,
) -> ConsistencyMatrix {
    let center_ok: Vec<bool> = local_set
        .iter()
        .map(|g| pairwise_consistency(g, center, params.sigma))
        .collect();
    let half_sigma = params.sigma / 2.0;
    build_matrix(local_set.len(), |j, k| {
        let hit = (center_ok[j] && center_ok[k])
            || pairwise_consistency(&local_set[j], &local_set[k], half_sigma);
        hit as u32
    })
}

/// First-order σ-consistency matrix (no seed involved).
pub fn first_order_matrix(
    local_set: &[PositionedCorrespondence],
    sigma: f64,
) -> ConsistencyMatrix {
    build_matrix(local_set.len(), |j, k| {
        pairwise_consistency(&local_set[j], &local_set[k], sigma) as u32
    })
}

/// Second-order consistency: `SC²(j,k) = s(j,k) · Σₘ s(j,m)·s(m,k)` — the
/// number of third correspondences consistent with both ends, zeroed where
/// the pair itself fails first-order consistency.
pub fn second_order_matrix(
    local_set: &[PositionedCorrespondence],
    sigma: f64,
) -> ConsistencyMatrix {
    let n = local_set.len();
    let words = n.div_ceil(64);
    let mut bits = vec![0u64; n * words];
    for j in 0..n {
        bits[j * words + j / 64] |= 1 << (j % 64);
        for k in j + 1..n {
            if pairwise_consistency(&local_set[j], &local_set[k], sigma) {
                bits[j * words + k / 64] |= 1 << (k % 64);
                bits[k * words + j / 64] |= 1 << (j % 64);
            }
        }
    }
    let count_common = |j: usize, k: usize| -> u32 {
        bits[j * words..(j + 1) * words]
            .iter()
            .zip(&bits[k * words..(k + 1) * words])
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    };
    build_matrix(n, |j, k| {
        let set = bits[j * words + k / 64] >> (k % 64) & 1 == 1;
        if set {
            count_common(j, k)
        } else {
            0
        }
    })
}

/// Score of a whole local region: `‖S‖₁ / (a·N)`. Values ≥ 1 certify (under
/// the dominance assumption) that the region's inlier fraction is ≥ a.
pub fn local_score(matrix: &ConsistencyMatrix, a: f64) -> f64 {
    debug_assert!(a > 0.0 && a < 1.0);
    matrix.max_column_sum() as f64 / (a * matrix.size() as f64)
}

/// Indices of the `count` correspondences with the highest row sums; ties
/// break toward the smaller index. Rows without any mutual support (sum ≤ 1,
/// i.e. only the diagonal) are never selected, and fewer than 3 supported
/// rows is an error.
pub fn select_top_consistent(
    matrix: &ConsistencyMatrix,
    count: usize,
) -> Result<Vec<usize>, ConsistencyError> {
    assert!(count >= 3, "selection count must be >= 3");
    let mut supported: Vec<(u64, usize)> = (0..matrix.size())
        .filter_map(|j| {
            let sum = matrix.row_sum(j);
            (sum > 1).then_some((sum, j))
        })
        .collect();
    if supported.len() < 3 {
        return Err(ConsistencyError::TooFewConsistent { found: supported.len() });
    }
    supported.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    supported.truncate(count);
    Ok(supported.into_iter().map(|(_, j)| j).collect())
}

/// Seed-selection size used by the correction stages: a fifth of the region,
/// but never fewer than the 3 pairs a pose fit needs.
pub fn selection_count(n: usize) -> usize {
    ((n as f64 * 0.2).ceil() as usize).max(3)
}
