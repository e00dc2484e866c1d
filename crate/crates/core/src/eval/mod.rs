//! Evaluation harness: point-wise metrics, stage-1 recall, a synthetic
//! scan generator used as ground truth, and per-frame timing.

pub mod bench;
pub mod metrics;
pub mod synth;

pub use bench::{benchmark_stage1, StageStats, TimingReport};
pub use metrics::{
    pointwise_metrics, proposal_recall, proposal_recall_from_labels, ClassMetrics, MetricsReport,
    ProposalRecall,
};
pub use synth::{
    generate_synthetic_scene, random_scene_spec, GroundSpec, ObjectSpec, RandomSceneOptions,
    SceneSpec, SensorModel, Shape, SyntheticScene,
};
