//! Probabilistic semantic occupancy grids for LiDAR placement evaluation
//! and optimization.
//!
//! The pipeline: labeled point-cloud frames are aggregated and voxelized by
//! majority vote into per-frame semantic grids ([`ingest`]), accumulated into
//! a per-voxel class distribution field ([`grid`]), and scored against
//! LiDAR placements whose rays are traversed through the grid ([`raycast`],
//! [`metric`]). A constrained evolution strategy searches placement space and
//! emits an optimality certificate ([`optimizer`]). Point-cloud corruption
//! transforms ([`corrupt`]) support robustness-aware workflows.

pub mod corrupt;
pub mod error;
pub mod grid;
pub mod ingest;
pub mod metric;
pub mod optimizer;
pub mod raycast;
pub mod rng;
pub mod util;

pub use error::{Error, Result};
pub use grid::{ClassTable, PSog, ProbField, RoiGrid, SogFrame, VoxelId};
pub use ingest::{EgoPose, LabeledCloud, LabeledPoint};
pub use metric::{MetricMode, MetricScore};
pub use optimizer::{Certificate, ConstraintSpec, SearchSpace};
pub use raycast::{CoverageSet, LidarExtrinsic, LidarSpec, OcclusionMode, Placement};
