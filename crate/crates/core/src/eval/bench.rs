//! Repeated timing of the stage-1 pipeline.

use std::time::Duration;

use serde::Serialize;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::pipeline::{run_stage1_timed, Stage1Params, StageTimings};

/// Median and 95th percentile (nearest rank) in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageStats {
    pub median_us: f64,
    pub p95_us: f64,
}

impl StageStats {
    pub fn from_samples(samples: &[Duration]) -> Self {
        let mut us: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e6).collect();
        us.sort_by(f64::total_cmp);
        let n = us.len();
        if n == 0 {
            return Self {
                median_us: 0.0,
                p95_us: 0.0,
            };
        }
        let median_us = if n % 2 == 1 {
            us[n / 2]
        } else {
            (us[n / 2 - 1] + us[n / 2]) / 2.0
        };
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Self {
            median_us,
            p95_us: us[rank - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub reps: usize,
    pub parallel: bool,
    pub rings: StageStats,
    pub ground: StageStats,
    pub cluster: StageStats,
    pub refine: StageStats,
    pub total: StageStats,
    pub points_in: usize,
    pub clusters_formed: usize,
    pub proposals_out: usize,
    pub points_passed: usize,
}

/// Runs the pipeline once to warm up, then `reps` timed times.
pub fn benchmark_stage1(
    cloud: &PointCloud,
    params: &Stage1Params,
    reps: usize,
    parallel: bool,
) -> Result<TimingReport> {
    if reps == 0 {
        return Err(Error::Precondition("reps must be >= 1".into()));
    }
    let (first, _) = run_stage1_timed(cloud, params, parallel)?;
    let mut runs: Vec<StageTimings> = Vec::with_capacity(reps);
    for _ in 0..reps {
        let (_, t) = run_stage1_timed(cloud, params, parallel)?;
        runs.push(t);
    }
    let stat = |f: fn(&StageTimings) -> Duration| {
        StageStats::from_samples(&runs.iter().map(f).collect::<Vec<_>>())
    };
    Ok(TimingReport {
        reps,
        parallel,
        rings: stat(|t| t.rings),
        ground: stat(|t| t.ground),
        cluster: stat(|t| t.cluster),
        refine: stat(|t| t.refine),
        total: stat(|t| t.total()),
        points_in: cloud.len(),
        clusters_formed: first.clusters_formed(),
        proposals_out: first.proposals.len(),
        points_passed: first.points_passed(),
    })
}
