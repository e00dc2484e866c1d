//! Cluster proposals for rotating multi-beam LiDAR scans and preparation of
//! the proposals as fixed-size training samples.
//!
//! Stage 1 ([`pipeline::run_stage1`]) assigns every point to a laser ring,
//! removes the ground with a segmented plane fit, clusters the rest ring by
//! ring, and keeps clusters whose point count and oriented box are plausible
//! for a car, pedestrian or cyclist. Stage-2 preparation ([`prep`]) turns
//! each proposal into a canonical, optionally augmented, resampled feature
//! matrix and [`archive`] writes those to disk.

pub mod archive;
pub mod bbox;
pub mod cli;
pub mod cloud;
pub mod cluster;
pub mod config;
pub mod error;
pub mod eval;
pub mod ground;
pub mod io;
pub mod pipeline;
pub mod prep;
pub mod refine;
pub mod rings;

pub use archive::{export_samples, import_samples, ArchiveSample, SampleArchive};
pub use bbox::{convex_hull, min_area_rect, min_oriented_bbox, OrientedBBox};
pub use cloud::{ClassId, Point, PointCloud};
pub use cluster::{cluster_ring_based, ClusterLabeling, ClusterParams};
pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use ground::{ground_plane_fit, GroundFit, GroundParams, PlaneModel};
pub use pipeline::{run_stage1, run_stage1_timed, Stage1Output, Stage1Params};
pub use prep::{prepare_proposal, Sample, SamplePrepParams};
pub use refine::{adaptive_threshold, Proposal, RefineParams, SizePrior, SizePriors};
pub use rings::{assign_rings, ring_ids_by_quadrant};
