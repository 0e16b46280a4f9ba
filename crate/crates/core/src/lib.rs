//! Rigid point-cloud registration built around progressive correspondence
//! regeneration: instead of pruning an initial match set down to its inliers,
//! the pipeline repeatedly regrows it — sampling seed pairs, rematching
//! features inside shrinking local regions, correcting each region against a
//! locally fitted pose, and merging the survivors — so the final set holds
//! more correct pairs than it started with.
//!
//! The crate also ships the evaluation-metric suite (RR/RE/TE/IP/IN/INR/FMR),
//! a synthetic scene generator for desk-scale benchmarks, a weak handcrafted
//! descriptor for stress-testing feature robustness, and the file formats the
//! `regor` CLI speaks.

pub mod consistency;
pub mod evaluation;
pub mod features;
pub mod geometry;
pub mod io;
pub mod matching;
pub mod refinement;
pub mod regeneration;
pub mod testkit;

pub use geometry::{
    fit_rigid_transform, fit_rigid_transform_weighted, position_set, unposition_set,
    Correspondence, CorrespondenceSet, GeometryError, PointCloud, PositionedCorrespondence,
    RigidTransform, SpatialIndex,
};
