//! The progressive correspondence regeneration pipeline.
//!
//! One stage: sample seed correspondences from the previous set, group a pair
//! of radius-limited local regions around each seed, rematch features inside
//! every region, correct each region against a locally fitted pose (or reject
//! it when its consistency score cannot certify the inlier fraction), merge
//! the survivors through an exact-pair hash, and run a global second-order
//! correction. Stages iterate over a geometric hyperparameter schedule —
//! shrinking radii, growing per-region point budgets — so each pass regrows
//! a denser, more accurate correspondence set instead of pruning the old one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consistency::{
    ctc_matrix, first_order_matrix, local_score, second_order_matrix, select_top_consistent,
    selection_count, ConsistencyParams,
};
use crate::features::{FeatureError, FeatureSet};
use crate::geometry::{
    fit_rigid_transform, fit_rigid_transform_weighted, position_set, unposition_set,
    CorrespondenceSet,
    GeometryError, PointCloud, PositionedCorrespondence, RigidTransform, SpatialIndex,
};
use crate::matching::{generalized_mutual_match, mutual_match, nn_correspondences};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Error)]
pub enum RegenError {
    #[error("initial correspondence set is empty")]
    EmptyInput,
    #[error("invalid schedule: {0}")]
    InvalidSchedule(&'static str),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// All hyperparameters of the progressive schedule. Stage `t` (the first
/// executed stage is `t = 1`) uses `kᵗ = round(k0·ω_kᵗ)` points per region
/// side, radius `rᵗ = r0·ω_rᵗ` and `sᵗ = max(round(s0·ω_sᵗ), s_min)` seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterationSchedule {
    pub k0: usize,
    pub r0: f64,
    pub s0: usize,
    pub omega_k: f64,
    pub omega_r: f64,
    pub omega_s: f64,
    /// Number of stages m.
    pub iterations: usize,
    /// Top-k width of generalized mutual matching.
    pub k_gmm: usize,
    /// Floor under the geometric seed-count decay.
    pub s_min: usize,
    /// Pair cap for the O(N²) global consistency matrix.
    pub global_cap: usize,
    pub params: ConsistencyParams,
}

impl Default for IterationSchedule {
    /// Indoor-scale defaults; outdoor-scale data wants `r0 = 10`.
    fn default() -> Self {
        Self {
            k0: 20,
            r0: 1.0,
            s0: 500,
            omega_k: 5.0,
            omega_r: 0.5,
            omega_s: 0.2,
            iterations: 4,
            k_gmm: 3,
            s_min: 20,
            global_cap: 2000,
            params: ConsistencyParams::default(),
        }
    }
}

impl IterationSchedule {
    pub fn validate(&self) -> Result<(), RegenError> {
        if self.k0 == 0 || self.s0 == 0 {
            return Err(RegenError::InvalidSchedule("k0 and s0 must be positive"));
        }
        if !self.r0.is_finite() || self.r0 <= 0.0 {
            return Err(RegenError::InvalidSchedule("r0 must be positive"));
        }
        if self.omega_k <= 0.0 || self.omega_s <= 0.0 {
            return Err(RegenError::InvalidSchedule("omega_k and omega_s must be positive"));
        }
        if !(self.omega_r > 0.0 && self.omega_r <= 1.0) {
            return Err(RegenError::InvalidSchedule("omega_r must lie in (0, 1]"));
        }
        if self.iterations == 0 {
            return Err(RegenError::InvalidSchedule("iterations must be at least 1"));
        }
        if self.k_gmm == 0 {
            return Err(RegenError::InvalidSchedule("k_gmm must be at least 1"));
        }
        if self.s_min == 0 || self.global_cap < 3 {
            return Err(RegenError::InvalidSchedule("s_min and global_cap too small"));
        }
        self.params
            .validate()
            .map_err(|_| RegenError::InvalidSchedule("consistency params out of range"))?;
        Ok(())
    }

    pub fn points_cap_at(&self, stage: usize) -> usize {
        ((self.k0 as f64) * self.omega_k.powi(stage as i32)).round().max(1.0) as usize
    }

    pub fn radius_at(&self, stage: usize) -> f64 {
        self.r0 * self.omega_r.powi(stage as i32)
    }

    pub fn seed_count_at(&self, stage: usize) -> usize {
        let raw = ((self.s0 as f64) * self.omega_s.powi(stage as i32)).round() as usize;
        raw.max(self.s_min)
    }
}

/// Which matcher runs inside local regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchingMode {
    /// Plain nearest-neighbor rows (ablation reference).
    Nn,
    /// Strict mutual matching.
    Mm,
    /// Generalized mutual matching.
    Gmm,
}

/// Which consistency measure gates and seeds the local correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalConsistencyMode {
    /// Center-aware three-point consistency around the seed.
    Ctc,
    /// Seedless second-order consistency (ablation reference).
    Sc,
}

/// Which correction stages run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageMode {
    Both,
    LocalOnly,
    GlobalOnly,
}

/// Ablation switches of the pipeline; defaults are the full method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineOptions {
    pub matching: MatchingMode,
    pub consistency: LocalConsistencyMode,
    pub stages: StageMode,
    /// `false` collapses the schedule to a single stage.
    pub progressive: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            matching: MatchingMode::Gmm,
            consistency: LocalConsistencyMode::Ctc,
            stages: StageMode::Both,
            progressive: true,
        }
    }
}

/// A pair of radius-limited neighborhoods around one seed correspondence.
#[derive(Debug, Clone)]
pub struct LocalRegion {
    pub seed: PositionedCorrespondence,
    /// Indices into the source cloud, sorted; the seed's endpoint included.
    pub source_indices: Vec<usize>,
    /// Indices into the target cloud, sorted; the seed's endpoint included.
    pub target_indices: Vec<usize>,
}

/// Smallest usable region side: below this a pose cannot be validated.
const MIN_REGION_SIDE: usize = 5;

/// Uniform sample without replacement of `min(count, |set|)` pairs.
pub fn sample_seeds(
    set: &CorrespondenceSet,
    count: usize,
    rng_seed: u64,
) -> Result<CorrespondenceSet, RegenError> {
    if set.is_empty() {
        return Err(RegenError::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let picks = sample_indices(set.len(), count, &mut rng);
    Ok(CorrespondenceSet::from_pairs(
        picks.into_iter().map(|i| set.pairs()[i]).collect(),
    )
    .with_stage(set.stage()))
}

fn sample_indices(len: usize, count: usize, rng: &mut impl Rng) -> Vec<usize> {
    if count >= len {
        return (0..len).collect();
    }
    rand::seq::index::sample(rng, len, count).into_vec()
}

/// Groups a pair of local point clouds around every seed: radius neighbors
/// on each side, independently downsampled to at most `k_cap` points with
/// the seed's own endpoint always retained. Regions with either side below
/// 5 points are dropped.
pub fn group_local_regions(
    seeds: &CorrespondenceSet,
    source: &PointCloud,
    target: &PointCloud,
    radius: f64,
    k_cap: usize,
    rng_seed: u64,
) -> Result<Vec<LocalRegion>, RegenError> {
    seeds.validate_for(source, target)?;
    let positioned = position_set(seeds, source, target)?;
    let source_index = SpatialIndex::build(source);
    let target_index = SpatialIndex::build(target);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok(group_regions_indexed(&positioned, &source_index, &target_index, radius, k_cap, &mut rng))
}

fn group_regions_indexed(
    seeds: &[PositionedCorrespondence],
    source_index: &SpatialIndex,
    target_index: &SpatialIndex,
    radius: f64,
    k_cap: usize,
    rng: &mut impl Rng,
) -> Vec<LocalRegion> {
    let mut regions = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let source_indices = cap_side(
            source_index.radius_neighbors(&seed.source, radius),
            seed.source_index,
            k_cap,
            rng,
        );
        let target_indices = cap_side(
            target_index.radius_neighbors(&seed.target, radius),
            seed.target_index,
            k_cap,
            rng,
        );
        if source_indices.len() < MIN_REGION_SIDE || target_indices.len() < MIN_REGION_SIDE {
            continue;
        }
        regions.push(LocalRegion { seed: *seed, source_indices, target_indices });
    }
    regions
}

fn cap_side(mut neighbors: Vec<usize>, seed_point: usize, k_cap: usize, rng: &mut impl Rng) -> Vec<usize> {
    if neighbors.len() <= k_cap {
        return neighbors;
    }
    neighbors.retain(|&i| i != seed_point);
    let picks = sample_indices(neighbors.len(), k_cap.saturating_sub(1), rng);
    let mut capped: Vec<usize> = picks.into_iter().map(|i| neighbors[i]).collect();
    capped.push(seed_point);
    capped.sort_unstable();
    capped
}

/// Rematches features inside one region; returned pairs carry global cloud
/// indices. Empty output is legal (degenerate feature content).
pub fn local_rematch(
    region: &LocalRegion,
    source: &PointCloud,
    target: &PointCloud,
    source_feats: &FeatureSet,
    target_feats: &FeatureSet,
    k_gmm: usize,
    mode: MatchingMode,
) -> Vec<PositionedCorrespondence> {
    let sub_source = source_feats.gather(&region.source_indices);
    let sub_target = target_feats.gather(&region.target_indices);
    let matched = match mode {
        MatchingMode::Gmm => generalized_mutual_match(&sub_source, &sub_target, k_gmm),
        MatchingMode::Mm => mutual_match(&sub_source, &sub_target),
        MatchingMode::Nn => nn_correspondences(&sub_source, &sub_target),
    };
    let Ok(matched) = matched else {
        return Vec::new();
    };
    matched
        .pairs()
        .iter()
        .map(|c| {
            let source_index = region.source_indices[c.source_index];
            let target_index = region.target_indices[c.target_index];
            PositionedCorrespondence {
                source_index,
                target_index,
                source: source.point(source_index),
                target: target.point(target_index),
            }
        })
        .collect()
}

/// Outcome of correcting one local region.
#[derive(Debug, Clone)]
pub enum LocalOutcome {
    /// Score passed; pairs re-snapped under the locally fitted pose.
    Corrected { pairs: Vec<PositionedCorrespondence>, score: f64 },
    /// Score below 1, or too little mutual support to fit a pose.
    Rejected { score: f64 },
}

/// Scores a region, fits a pose on its most-consistent pairs and re-snaps
/// every source point to its nearest region-side target under that pose.
/// Pairs whose snapped residual exceeds σ_d are dropped.
pub fn local_correct(
    pairs: &[PositionedCorrespondence],
    region: &LocalRegion,
    target: &PointCloud,
    params: &ConsistencyParams,
    mode: LocalConsistencyMode,
) -> LocalOutcome {
    if pairs.is_empty() {
        return LocalOutcome::Rejected { score: 0.0 };
    }
    // The CTC branch gates and selects on the same center-aware matrix. The
    // second-order ablation gates on the binary first-order score (the score
    // semantics need 0/1 entries) and ranks pairs by second-order support.
    let (score, selection) = match mode {
        LocalConsistencyMode::Ctc => {
            let matrix = ctc_matrix(pairs, &region.seed, params);
            let score = local_score(&matrix, params.a);
            (score, select_top_consistent(&matrix, selection_count(pairs.len())))
        }
        LocalConsistencyMode::Sc => {
            let gate = first_order_matrix(pairs, params.sigma);
            let score = local_score(&gate, params.a);
            let rank = second_order_matrix(pairs, params.sigma);
            (score, select_top_consistent(&rank, selection_count(pairs.len())))
        }
    };
    if score < 1.0 {
        return LocalOutcome::Rejected { score };
    }
    let Ok(selected) = selection else {
        return LocalOutcome::Rejected { score };
    };
    let src: Vec<_> = selected.iter().map(|&i| pairs[i].source).collect();
    let dst: Vec<_> = selected.iter().map(|&i| pairs[i].target).collect();
    let Ok(pose) = fit_rigid_transform(&src, &dst) else {
        return LocalOutcome::Rejected { score };
    };

    let corrected = snap_to_targets(pairs, &pose, &region.target_indices, target, params.sigma_d);
    LocalOutcome::Corrected { pairs: corrected, score }
}

/// One-way correction: every distinct source point gets re-paired with the
/// nearest candidate target under `pose`; residuals beyond `sigma_d` drop.
fn snap_to_targets(
    pairs: &[PositionedCorrespondence],
    pose: &RigidTransform,
    candidate_targets: &[usize],
    target: &PointCloud,
    sigma_d: f64,
) -> Vec<PositionedCorrespondence> {
    let mut sources: Vec<(usize, nalgebra::Vector3<f64>)> =
        pairs.iter().map(|c| (c.source_index, c.source)).collect();
    sources.sort_unstable_by_key(|(i, _)| *i);
    sources.dedup_by_key(|(i, _)| *i);

    let mut out = Vec::with_capacity(sources.len());
    for (source_index, source) in sources {
        let moved = pose.apply(&source);
        let mut best: Option<(f64, usize)> = None;
        for &t in candidate_targets {
            let d = (target.point(t) - moved).norm_squared();
            match best {
                Some((bd, bt)) if d > bd || (d == bd && t >= bt) => {}
                _ => best = Some((d, t)),
            }
        }
        if let Some((d2, t)) = best {
            if d2.sqrt() <= sigma_d {
                out.push(PositionedCorrespondence {
                    source_index,
                    target_index: t,
                    source,
                    target: target.point(t),
                });
            }
        }
    }
    out
}

/// Exact-pair union of per-region outputs: duplicates of the same
/// `(source, target)` key collapse; the result is sorted by key.
pub fn merge_correspondences(
    locals: &[Vec<PositionedCorrespondence>],
) -> Vec<PositionedCorrespondence> {
    let mut merged: Vec<PositionedCorrespondence> =
        locals.iter().flat_map(|set| set.iter().copied()).collect();
    merged.sort_unstable_by_key(|c| (c.source_index, c.target_index));
    merged.dedup_by_key(|c| (c.source_index, c.target_index));
    merged
}

/// Result of the global correction pass.
pub struct GlobalOutcome {
    pub pairs: Vec<PositionedCorrespondence>,
    /// Set when the pass could not find a usable consensus and returned its
    /// input unchanged.
    pub warning: bool,
}

/// Global second-order correction: subsample to `cap` pairs for the O(N²)
/// matrix, pick the most-supported pairs, fit one global pose and re-snap
/// every source point against the whole target cloud.
pub fn global_correct(
    pairs: &[PositionedCorrespondence],
    target: &PointCloud,
    target_index: &SpatialIndex,
    params: &ConsistencyParams,
    cap: usize,
    rng_seed: u64,
) -> GlobalOutcome {
    if pairs.len() < 3 {
        return GlobalOutcome { pairs: pairs.to_vec(), warning: true };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let sampled: Vec<PositionedCorrespondence> = if pairs.len() > cap {
        let mut picks = sample_indices(pairs.len(), cap, &mut rng);
        picks.sort_unstable();
        picks.into_iter().map(|i| pairs[i]).collect()
    } else {
        pairs.to_vec()
    };

    let matrix = second_order_matrix(&sampled, params.sigma);
    let Ok(selected) = select_top_consistent(&matrix, selection_count(sampled.len())) else {
        return GlobalOutcome { pairs: pairs.to_vec(), warning: true };
    };
    let src: Vec<_> = selected.iter().map(|&i| sampled[i].source).collect();
    let dst: Vec<_> = selected.iter().map(|&i| sampled[i].target).collect();
    // Second-order support as confidence: the consensus core dominates the
    // pose, stragglers that merely cleared the selection bar barely pull.
    let weights: Vec<f64> = selected.iter().map(|&i| matrix.row_sum(i) as f64).collect();
    let Ok(pose) = fit_rigid_transform_weighted(&src, &dst, &weights) else {
        return GlobalOutcome { pairs: pairs.to_vec(), warning: true };
    };

    let mut sources: Vec<(usize, nalgebra::Vector3<f64>)> =
        pairs.iter().map(|c| (c.source_index, c.source)).collect();
    sources.sort_unstable_by_key(|(i, _)| *i);
    sources.dedup_by_key(|(i, _)| *i);

    let corrected: Vec<PositionedCorrespondence> = sources
        .into_par_iter()
        .filter_map(|(source_index, source)| {
            let moved = pose.apply(&source);
            let (t, d) = target_index.nearest_neighbor(&moved).ok()?;
            (d <= params.sigma_d).then(|| PositionedCorrespondence {
                source_index,
                target_index: t,
                source,
                target: target.point(t),
            })
        })
        .collect();
    GlobalOutcome { pairs: corrected, warning: false }
}

/// Per-stage observability record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: u32,
    pub seed_count: usize,
    pub region_count: usize,
    pub accepted_regions: usize,
    pub merged_count: usize,
    /// Mean local score over regions that produced matches this stage.
    pub mean_local_score: Option<f64>,
    pub global_warning: bool,
    pub wall_seconds: f64,
}

/// Trace of a full pipeline run: one record per completed stage plus the
/// switches the run was configured with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegenerationTrace {
    pub options: PipelineOptions,
    pub stages: Vec<StageRecord>,
    pub collapsed: bool,
}

/// Output of [`regenerate`].
pub struct RegenerationResult {
    pub correspondences: CorrespondenceSet,
    pub transform: RigidTransform,
    pub trace: RegenerationTrace,
    /// Snapshot of the correspondence pool after each completed stage; the
    /// last entry equals `correspondences`.
    pub stage_sets: Vec<CorrespondenceSet>,
    /// True when some stage produced nothing and the best earlier state was
    /// returned instead.
    pub collapsed: bool,
}

/// Runs the progressive pipeline: m stages of seed sampling, local grouping,
/// rematching, local correction, merging and global correction, then a final
/// pose fit over the surviving correspondences. Deterministic for a fixed
/// `rng_seed` regardless of worker count.
#[allow(clippy::too_many_arguments)]
pub fn regenerate(
    source: &PointCloud,
    target: &PointCloud,
    source_feats: &FeatureSet,
    target_feats: &FeatureSet,
    initial: &CorrespondenceSet,
    schedule: &IterationSchedule,
    options: &PipelineOptions,
    rng_seed: u64,
) -> Result<RegenerationResult, RegenError> {
    schedule.validate()?;
    source_feats.validate_for(source)?;
    target_feats.validate_for(target)?;
    if initial.is_empty() {
        return Err(RegenError::EmptyInput);
    }
    initial.validate_for(source, target)?;

    let source_index = SpatialIndex::build(source);
    let target_index = SpatialIndex::build(target);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut current = position_set(initial, source, target)?;
    let mut stages = Vec::new();
    let mut stage_sets = Vec::new();
    let mut collapsed = false;

    let total_stages = if options.progressive { schedule.iterations } else { 1 };
    for stage in 1..=total_stages {
        let started = std::time::Instant::now();
        let seed_budget = schedule.seed_count_at(stage);
        let radius = schedule.radius_at(stage);
        let k_cap = schedule.points_cap_at(stage);

        let seed_picks = sample_indices(current.len(), seed_budget, &mut rng);
        let seeds: Vec<PositionedCorrespondence> =
            seed_picks.into_iter().map(|i| current[i]).collect();
        let mut group_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
        let regions =
            group_regions_indexed(&seeds, &source_index, &target_index, radius, k_cap, &mut group_rng);
        let global_seed = rng.next_u64();

        let outcomes: Vec<(Option<Vec<PositionedCorrespondence>>, Option<f64>)> = regions
            .par_iter()
            .map(|region| {
                let matched = local_rematch(
                    region,
                    source,
                    target,
                    source_feats,
                    target_feats,
                    schedule.k_gmm,
                    options.matching,
                );
                if matched.is_empty() {
                    return (None, None);
                }
                if options.stages == StageMode::GlobalOnly {
                    // Local correction disabled: regions pass through.
                    return (Some(matched), None);
                }
                match local_correct(&matched, region, target, &schedule.params, options.consistency)
                {
                    LocalOutcome::Corrected { pairs, score } => (Some(pairs), Some(score)),
                    LocalOutcome::Rejected { score } => (None, Some(score)),
                }
            })
            .collect();

        let scores: Vec<f64> = outcomes.iter().filter_map(|(_, s)| *s).collect();
        let mean_local_score = if scores.is_empty() {
            None
        } else {
            Some(scores.iter().sum::<f64>() / scores.len() as f64)
        };
        let mut accepted: Vec<Vec<PositionedCorrespondence>> =
            outcomes.into_iter().filter_map(|(pairs, _)| pairs).collect();
        let accepted_regions = accepted.len();
        if accepted_regions == 0 {
            // Zero regions survived local correction: keep the best earlier
            // state and flag the collapse.
            stages.push(StageRecord {
                stage: stage as u32,
                seed_count: seeds.len(),
                region_count: regions.len(),
                accepted_regions,
                merged_count: current.len(),
                mean_local_score,
                global_warning: false,
                wall_seconds: started.elapsed().as_secs_f64(),
            });
            collapsed = true;
            stage_sets.push(unposition_set(&current, stage as u32));
            break;
        }

        // The pool persists across stages: regions densify and re-correct
        // parts of it, the global pass re-snaps everything under the newest
        // consensus pose. Without the carry-over, the shrinking late-stage
        // radii would throw away everything outside this stage's regions.
        accepted.push(std::mem::take(&mut current));
        let mut merged = merge_correspondences(&accepted);
        let mut global_warning = false;
        if options.stages != StageMode::LocalOnly {
            let outcome = global_correct(
                &merged,
                target,
                &target_index,
                &schedule.params,
                schedule.global_cap,
                global_seed,
            );
            global_warning = outcome.warning;
            if outcome.pairs.is_empty() {
                collapsed = true;
                merged = accepted.pop().expect("carried pool");
            } else {
                merged = outcome.pairs;
            }
        }

        let record = StageRecord {
            stage: stage as u32,
            seed_count: seeds.len(),
            region_count: regions.len(),
            accepted_regions,
            merged_count: merged.len(),
            mean_local_score,
            global_warning,
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        stages.push(record);
        current = merged;
        stage_sets.push(unposition_set(&current, stage as u32));
        if collapsed {
            break;
        }
    }

    let final_stage = stages.last().map(|r| r.stage).unwrap_or(0);
    let correspondences = unposition_set(&current, final_stage);

    let src: Vec<_> = current.iter().map(|c| c.source).collect();
    let dst: Vec<_> = current.iter().map(|c| c.target).collect();
    let transform = match fit_rigid_transform(&src, &dst) {
        Ok(t) => t,
        Err(_) => {
            collapsed = true;
            RigidTransform::identity()
        }
    };

    let trace = RegenerationTrace { options: *options, stages, collapsed };
    Ok(RegenerationResult { correspondences, transform, trace, stage_sets, collapsed })
}

/// Produces an initial correspondence set when none is supplied: full-cloud
/// nearest-neighbor matching followed by one global correction pass.
pub fn bootstrap_correspondences(
    source: &PointCloud,
    target: &PointCloud,
    source_feats: &FeatureSet,
    target_feats: &FeatureSet,
    params: &ConsistencyParams,
    cap: usize,
    rng_seed: u64,
) -> Result<CorrespondenceSet, RegenError> {
    source_feats.validate_for(source)?;
    target_feats.validate_for(target)?;
    let matched = nn_correspondences(source_feats, target_feats)
        .map_err(|_| RegenError::EmptyInput)?;
    let positioned = position_set(&matched, source, target)?;
    let target_index = SpatialIndex::build(target);
    let outcome = global_correct(&positioned, target, &target_index, params, cap, rng_seed);
    let pairs = if outcome.pairs.is_empty() { positioned } else { outcome.pairs };
    Ok(unposition_set(&pairs, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Correspondence;
    use crate::evaluation::{generate_scene, is_inlier, SceneSpec, TransformMagnitude};
    use crate::features::compute_weak_descriptor;
    use crate::testkit::phi_region;
    use nalgebra::Vector3;

    fn small_spec(seed: u64) -> SceneSpec {
        SceneSpec {
            point_count: 1200,
            overlap_fraction: 0.7,
            noise_sigma: 0.005,
            outlier_ratio: 0.9,
            initial_pair_count: 300,
            transform_magnitude: TransformMagnitude {
                max_rotation_deg: 45.0,
                max_translation: 0.5,
            },
            rng_seed: seed,
        }
    }

    #[test]
    fn sample_seeds_clamps_and_is_deterministic() {
        let pairs: Vec<Correspondence> =
            (0..10).map(|i| Correspondence::new(i, i)).collect();
        let set = CorrespondenceSet::from_pairs(pairs);
        let all = sample_seeds(&set, 20, 1).unwrap();
        assert_eq!(all.len(), 10, "count clamps to the set size");

        let a = sample_seeds(&set, 5, 42).unwrap();
        let b = sample_seeds(&set, 5, 42).unwrap();
        assert_eq!(a.pairs(), b.pairs());
        assert_eq!(a.len(), 5);
        for pair in a.pairs() {
            assert!(set.contains(pair), "samples are members");
        }
    }

    #[test]
    fn sample_seeds_rejects_empty() {
        let empty = CorrespondenceSet::from_pairs(vec![]);
        assert!(matches!(sample_seeds(&empty, 3, 0), Err(RegenError::EmptyInput)));
    }

    fn grid_cloud(n_per_axis: usize, spacing: f64) -> PointCloud {
        let mut coords = Vec::new();
        for i in 0..n_per_axis {
            for j in 0..n_per_axis {
                for k in 0..2 {
                    coords.push([
                        i as f64 * spacing,
                        j as f64 * spacing,
                        k as f64 * spacing,
                    ]);
                }
            }
        }
        PointCloud::from_coords(&coords).unwrap()
    }

    #[test]
    fn grouping_drop_cap_and_saturation() {
        let cloud = grid_cloud(10, 0.1);
        let n = cloud.len();
        // A seed at an isolated corner of a sparse second cloud: fewer than
        // 5 neighbors on the target side drops the region.
        let sparse = PointCloud::from_coords(&[
            [0.0, 0.0, 0.0],
            [0.05, 0.0, 0.0],
            [0.0, 0.05, 0.0],
            [10.0, 10.0, 10.0],
        ])
        .unwrap();
        let seeds = CorrespondenceSet::from_pairs(vec![Correspondence::new(0, 0)]);
        let dropped = group_local_regions(&seeds, &cloud, &sparse, 0.2, 50, 1).unwrap();
        assert!(dropped.is_empty(), "minimum-size rule");

        // Dense cloud with a tight cap: both sides land exactly on the cap
        // with the seed endpoints retained.
        let seeds = CorrespondenceSet::from_pairs(vec![Correspondence::new(55, 55)]);
        let capped = group_local_regions(&seeds, &cloud, &cloud, 0.35, 20, 2).unwrap();
        assert_eq!(capped.len(), 1);
        assert_eq!(capped[0].source_indices.len(), 20);
        assert_eq!(capped[0].target_indices.len(), 20);
        assert!(capped[0].source_indices.contains(&55));
        assert!(capped[0].target_indices.contains(&55));

        // Radius covering everything with a huge cap: every point included.
        let all = group_local_regions(&seeds, &cloud, &cloud, 100.0, n + 10, 3).unwrap();
        assert_eq!(all[0].source_indices.len(), n);
        assert_eq!(all[0].target_indices.len(), n);
    }

    #[test]
    fn rematch_identity_region() {
        // Two identical clouds with distinct per-point features: the region
        // rematch reproduces the identity pairing on the shared indices.
        let cloud = grid_cloud(4, 0.1);
        let feats = FeatureSet::new(
            (0..cloud.len()).map(|i| vec![i as f64, (i * i) as f64]).collect(),
        )
        .unwrap();
        let region = LocalRegion {
            seed: PositionedCorrespondence {
                source_index: 0,
                target_index: 0,
                source: cloud.point(0),
                target: cloud.point(0),
            },
            source_indices: (0..cloud.len()).collect(),
            target_indices: (0..cloud.len()).collect(),
        };
        let pairs = local_rematch(&region, &cloud, &cloud, &feats, &feats, 3, MatchingMode::Gmm);
        assert!(pairs.len() >= cloud.len());
        for i in 0..cloud.len() {
            assert!(pairs
                .iter()
                .any(|c| c.source_index == i && c.target_index == i));
        }
    }

    /// Helper: positioned pairs and a region from a phi construction.
    fn phi_fixture(
        seed: u64,
        n: usize,
        fraction: f64,
        sigma: f64,
    ) -> (Vec<PositionedCorrespondence>, LocalRegion, PointCloud) {
        let phi = phi_region(seed, n, fraction, sigma);
        // Region target side = every target point of the construction.
        let target =
            PointCloud::new(phi.pairs.iter().map(|c| c.target).collect()).unwrap();
        let pairs: Vec<PositionedCorrespondence> = phi
            .pairs
            .iter()
            .enumerate()
            .map(|(i, c)| PositionedCorrespondence {
                source_index: i,
                target_index: i,
                source: c.source,
                target: c.target,
            })
            .collect();
        let region = LocalRegion {
            seed: phi.center,
            source_indices: (0..n).collect(),
            target_indices: (0..n).collect(),
        };
        (pairs, region, target)
    }

    #[test]
    fn local_correct_is_fixed_point_on_clean_regions() {
        let params = ConsistencyParams { sigma: 0.05, sigma_d: 0.05, a: 0.5 };
        let (pairs, region, target) = phi_fixture(3, 30, 1.0, params.sigma);
        match local_correct(&pairs, &region, &target, &params, LocalConsistencyMode::Ctc) {
            LocalOutcome::Corrected { pairs: out, score } => {
                assert!(score >= 1.0);
                assert_eq!(out.len(), pairs.len());
                for (a, b) in out.iter().zip(&pairs) {
                    assert_eq!(a.source_index, b.source_index);
                    assert_eq!(a.target_index, b.target_index, "partners unchanged");
                }
            }
            LocalOutcome::Rejected { score } => panic!("clean region rejected at {score}"),
        }
    }

    #[test]
    fn local_correct_improves_filthy_region_and_rejects_hopeless_one() {
        let params = ConsistencyParams { sigma: 0.05, sigma_d: 0.05, a: 0.5 };
        // 60% inliers: accepted, and the output inlier fraction rises.
        let (pairs, region, target) = phi_fixture(11, 40, 0.6, params.sigma);
        let phi = phi_region(11, 40, 0.6, params.sigma);
        let gt = crate::evaluation::GroundTruth {
            transform: phi.transform,
            inlier_tolerance: params.sigma,
        };
        match local_correct(&pairs, &region, &target, &params, LocalConsistencyMode::Ctc) {
            LocalOutcome::Corrected { pairs: out, .. } => {
                let before =
                    pairs.iter().filter(|c| is_inlier(c, &gt)).count() as f64 / pairs.len() as f64;
                let after =
                    out.iter().filter(|c| is_inlier(c, &gt)).count() as f64 / out.len() as f64;
                assert!(
                    after > before,
                    "correction should raise the inlier fraction ({before} → {after})"
                );
            }
            LocalOutcome::Rejected { score } => panic!("60% region rejected at {score}"),
        }

        // 10% inliers cannot reach score 1 under the dominance construction.
        let (pairs, region, target) = phi_fixture(12, 40, 0.1, params.sigma);
        assert!(matches!(
            local_correct(&pairs, &region, &target, &params, LocalConsistencyMode::Ctc),
            LocalOutcome::Rejected { .. }
        ));
    }

    #[test]
    fn disjoint_region_is_rejected_by_the_score_gate() {
        // Source side on one patch of geometry, target side on completely
        // unrelated geometry at a different scale: rematching produces pairs
        // but no rigid transform can relate the two sides, so the score
        // cannot reach 1.
        let params = ConsistencyParams { sigma: 0.05, sigma_d: 0.05, a: 0.5 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        use rand::Rng;
        let n = 30;
        let pairs: Vec<PositionedCorrespondence> = (0..n)
            .map(|i| PositionedCorrespondence {
                source_index: i,
                target_index: i,
                source: Vector3::new(rng.gen(), rng.gen(), rng.gen()) * 0.4,
                target: Vector3::new(rng.gen(), rng.gen(), rng.gen()) * 8.0,
            })
            .collect();
        let target = PointCloud::new(pairs.iter().map(|c| c.target).collect()).unwrap();
        let region = LocalRegion {
            seed: pairs[0],
            source_indices: (0..n).collect(),
            target_indices: (0..n).collect(),
        };
        match local_correct(&pairs, &region, &target, &params, LocalConsistencyMode::Ctc) {
            LocalOutcome::Rejected { score } => assert!(score < 1.0),
            LocalOutcome::Corrected { .. } => panic!("scale-mismatched region accepted"),
        }
    }

    #[test]
    fn dominant_inlier_regions_never_rejected() {
        // Φ-regions with inlier fraction ≥ a always score ≥ 1.
        let params = ConsistencyParams { sigma: 0.05, sigma_d: 0.05, a: 0.5 };
        for trial in 0..50 {
            let fraction = 0.5 + 0.5 * (trial as f64 / 50.0);
            let (pairs, region, target) = phi_fixture(100 + trial, 24, fraction, params.sigma);
            assert!(
                matches!(
                    local_correct(&pairs, &region, &target, &params, LocalConsistencyMode::Ctc),
                    LocalOutcome::Corrected { .. }
                ),
                "fraction {fraction} rejected"
            );
        }
    }

    #[test]
    fn merge_dedupes_and_unions() {
        let p = |s: usize, t: usize| PositionedCorrespondence {
            source_index: s,
            target_index: t,
            source: Vector3::zeros(),
            target: Vector3::zeros(),
        };
        let merged = merge_correspondences(&[vec![p(1, 1)], vec![p(1, 1)]]);
        assert_eq!(merged.len(), 1);

        let a: Vec<_> = (0..3).map(|i| p(i, i)).collect();
        let b: Vec<_> = (10..14).map(|i| p(i, i)).collect();
        let merged = merge_correspondences(&[a.clone(), b.clone()]);
        assert_eq!(merged.len(), 7);

        // Merge is idempotent.
        let again = merge_correspondences(std::slice::from_ref(&merged));
        assert_eq!(again.len(), merged.len());

        // Brute-force set union oracle on random overlapping sets.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let sets: Vec<Vec<PositionedCorrespondence>> = (0..4)
                .map(|_| {
                    (0..rng.gen_range(0..30))
                        .map(|_| p(rng.gen_range(0..15), rng.gen_range(0..15)))
                        .collect()
                })
                .collect();
            let merged = merge_correspondences(&sets);
            let mut oracle: std::collections::BTreeSet<(usize, usize)> =
                std::collections::BTreeSet::new();
            for set in &sets {
                for c in set {
                    oracle.insert((c.source_index, c.target_index));
                }
            }
            assert_eq!(merged.len(), oracle.len());
            let keys: Vec<(usize, usize)> =
                merged.iter().map(|c| (c.source_index, c.target_index)).collect();
            assert_eq!(keys, oracle.into_iter().collect::<Vec<_>>());
        }
    }

    #[test]
    fn global_correct_fixed_point_and_small_input() {
        let params = ConsistencyParams { sigma: 0.05, sigma_d: 0.05, a: 0.5 };
        let (pairs, _region, target) = phi_fixture(21, 40, 1.0, params.sigma);
        let index = SpatialIndex::build(&target);
        let out = global_correct(&pairs, &target, &index, &params, 2000, 7);
        assert!(!out.warning);
        assert_eq!(out.pairs.len(), pairs.len());
        for (a, b) in out.pairs.iter().zip(&pairs) {
            assert_eq!(a.target_index, b.target_index, "clean pairs unchanged");
        }

        // Fewer than 3 pairs: unchanged with the warning flag.
        let short = &pairs[..2];
        let out = global_correct(short, &target, &index, &params, 2000, 7);
        assert!(out.warning);
        assert_eq!(out.pairs.len(), 2);
    }

    #[test]
    fn global_correct_repairs_a_corrupted_region() {
        let params = ConsistencyParams { sigma: 0.05, sigma_d: 0.05, a: 0.5 };
        let (mut pairs, _region, target) = phi_fixture(22, 60, 1.0, params.sigma);
        // Corrupt a contiguous chunk as if one region was corrected with a
        // wrong local pose: shift those targets to bogus positions.
        let bogus = [55usize, 56, 57, 58, 59];
        for &i in &bogus {
            pairs[i].target += Vector3::new(7.0, -3.0, 2.0);
            pairs[i].target_index = i; // index no longer matches geometry
        }
        let index = SpatialIndex::build(&target);
        let out = global_correct(&pairs, &target, &index, &params, 2000, 9);
        assert!(!out.warning);
        let gt = crate::evaluation::GroundTruth {
            transform: phi_region(22, 60, 1.0, params.sigma).transform,
            inlier_tolerance: params.sigma,
        };
        // Every surviving pair is an inlier again: corrupted ones were
        // re-snapped to their true partners or dropped.
        assert!(out.pairs.iter().all(|c| is_inlier(c, &gt)));
        assert!(out.pairs.len() >= 55);
    }

    fn run_pipeline(
        spec: &SceneSpec,
        schedule: &IterationSchedule,
        options: &PipelineOptions,
        seed: u64,
    ) -> (RegenerationResult, crate::evaluation::GroundTruth, usize) {
        let scene = generate_scene(spec).unwrap();
        let source_feats = compute_weak_descriptor(&scene.source, 0.15).unwrap();
        let target_feats = compute_weak_descriptor(&scene.target, 0.15).unwrap();
        let initial = position_set(&scene.initial, &scene.source, &scene.target).unwrap();
        let initial_inliers =
            initial.iter().filter(|c| is_inlier(c, &scene.ground_truth)).count();
        let result = regenerate(
            &scene.source,
            &scene.target,
            &source_feats,
            &target_feats,
            &scene.initial,
            schedule,
            options,
            seed,
        )
        .unwrap();
        (result, scene.ground_truth, initial_inliers)
    }

    #[test]
    fn pipeline_regrows_inliers_on_a_synthetic_scene() {
        let spec = small_spec(41);
        let schedule = IterationSchedule::default();
        let options = PipelineOptions::default();
        let (result, gt, initial_inliers) = run_pipeline(&spec, &schedule, &options, 77);
        assert!(!result.collapsed, "pipeline collapsed: {:?}", result.trace.stages);

        let scene = generate_scene(&spec).unwrap();
        let fin = position_set(&result.correspondences, &scene.source, &scene.target).unwrap();
        let final_inliers = fin.iter().filter(|c| is_inlier(c, &gt)).count();
        assert!(
            final_inliers > initial_inliers,
            "regeneration must add inliers: {initial_inliers} → {final_inliers}"
        );

        let re = crate::evaluation::rotation_error_deg(
            result.transform.rotation(),
            gt.transform.rotation(),
        );
        let te = crate::evaluation::translation_error(
            result.transform.translation(),
            gt.transform.translation(),
        );
        assert!(re < 15.0 && te < 0.3, "pose off: re {re}° te {te}");
    }

    #[test]
    fn pipeline_is_deterministic() {
        let spec = small_spec(43);
        let schedule = IterationSchedule::default();
        let options = PipelineOptions::default();
        let (a, _, _) = run_pipeline(&spec, &schedule, &options, 5);
        let (b, _, _) = run_pipeline(&spec, &schedule, &options, 5);
        assert_eq!(a.correspondences.pairs(), b.correspondences.pairs());
        assert_eq!(a.transform.rotation(), b.transform.rotation());
        assert_eq!(a.transform.translation(), b.transform.translation());
        let (c, _, _) = run_pipeline(&spec, &schedule, &options, 6);
        let _ = c; // different seed may differ; only a determinism smoke check
    }

    #[test]
    fn empty_initial_set_is_rejected() {
        let scene = generate_scene(&small_spec(44)).unwrap();
        let feats = compute_weak_descriptor(&scene.source, 0.15).unwrap();
        let tfeats = compute_weak_descriptor(&scene.target, 0.15).unwrap();
        let empty = CorrespondenceSet::from_pairs(vec![]);
        assert!(matches!(
            regenerate(
                &scene.source,
                &scene.target,
                &feats,
                &tfeats,
                &empty,
                &IterationSchedule::default(),
                &PipelineOptions::default(),
                1,
            ),
            Err(RegenError::EmptyInput)
        ));
    }

    #[test]
    fn schedule_validation() {
        let mut s = IterationSchedule::default();
        assert!(s.validate().is_ok());
        s.omega_r = 1.5;
        assert!(s.validate().is_err());
        s = IterationSchedule { iterations: 0, ..Default::default() };
        assert!(s.validate().is_err());
        s = IterationSchedule { r0: -1.0, ..Default::default() };
        assert!(s.validate().is_err());

        let s = IterationSchedule::default();
        assert_eq!(s.points_cap_at(1), 100);
        assert_eq!(s.points_cap_at(2), 500);
        assert_eq!(s.radius_at(1), 0.5);
        assert_eq!(s.seed_count_at(1), 100);
        assert_eq!(s.seed_count_at(2), 20, "floor engages");
        assert_eq!(s.seed_count_at(3), 20, "4 rounds up to the floor");
    }
}
