//! The stage-1 cluster proposal pipeline: rings, ground removal, ring-based
//! clustering and proposal refinement.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bbox::min_oriented_bbox;
use crate::cloud::PointCloud;
use crate::cluster::{cluster_ring_based, ClusterLabeling, ClusterParams};
use crate::error::{Error, Result};
use crate::ground::{ground_plane_fit_with, GroundFit, GroundParams, SegmentPartition};
use crate::refine::{enlarge_bbox, passes_filter, points_inside, ClusterStats, Proposal, RefineParams};
use crate::rings::ring_ids_by_quadrant;

pub const DEFAULT_NUM_RINGS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage1Params {
    pub num_rings: usize,
    pub ground: GroundParams,
    pub cluster: ClusterParams,
    pub refine: RefineParams,
}

impl Default for Stage1Params {
    fn default() -> Self {
        Self {
            num_rings: DEFAULT_NUM_RINGS,
            ground: GroundParams::default(),
            cluster: ClusterParams::default(),
            refine: RefineParams::default(),
        }
    }
}

impl Stage1Params {
    pub fn validate(&self) -> Result<()> {
        if self.num_rings < 1 || self.num_rings > u16::MAX as usize + 1 {
            return Err(Error::config("num_rings", "must be in 1..=65536"));
        }
        self.ground.validate()?;
        self.cluster.validate()?;
        self.refine.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Output {
    pub ring_ids: Vec<u16>,
    pub ground: GroundFit,
    /// Cloud index of every non-ground point, in scan order.
    pub non_ground: Vec<usize>,
    /// Labels over the non-ground subset.
    pub labeling: ClusterLabeling,
    pub proposals: Vec<Proposal>,
    /// Proposal id per cloud point, 0 for background.
    pub point_labels: Vec<u32>,
}

impl Stage1Output {
    pub fn clusters_formed(&self) -> usize {
        self.labeling.num_clusters()
    }

    /// Points handed on to the next stage.
    pub fn points_passed(&self) -> usize {
        self.proposals.iter().map(|p| p.members.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub rings: Duration,
    pub ground: Duration,
    pub cluster: Duration,
    pub refine: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.rings + self.ground + self.cluster + self.refine
    }
}

pub fn run_stage1(cloud: &PointCloud, params: &Stage1Params) -> Result<Stage1Output> {
    run_stage1_timed(cloud, params, false).map(|(out, _)| out)
}

/// Runs the pipeline and records wall-clock time per stage. With
/// `parallel`, ground segments and per-cluster boxes are computed on the
/// rayon pool; the output is identical either way.
pub fn run_stage1_timed(
    cloud: &PointCloud,
    params: &Stage1Params,
    parallel: bool,
) -> Result<(Stage1Output, StageTimings)> {
    params.validate()?;
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let ring_ids = match cloud.ring_ids() {
        Some(r) => r.to_vec(),
        None => ring_ids_by_quadrant(cloud.xs(), cloud.ys(), params.num_rings)?,
    };
    timings.rings = t.elapsed();

    let t = Instant::now();
    let partition = SegmentPartition::new(cloud.xs(), params.ground.n_seg)?;
    let segments: Vec<usize> = cloud.xs().iter().map(|&x| partition.bin(x)).collect();
    let ground = if cloud.is_empty() {
        GroundFit {
            mask: Vec::new(),
            planes: vec![None; params.ground.n_seg],
            warnings: Vec::new(),
        }
    } else {
        ground_plane_fit_with(cloud, &segments, &params.ground, parallel)?
    };
    timings.ground = t.elapsed();

    let t = Instant::now();
    let non_ground: Vec<usize> = (0..cloud.len()).filter(|&i| !ground.mask[i]).collect();
    let mut sub = cloud.select(&non_ground);
    sub.set_ring_ids(non_ground.iter().map(|&i| ring_ids[i]).collect())?;
    let labeling = cluster_ring_based(&sub, &params.cluster)?;
    timings.cluster = t.elapsed();

    let t = Instant::now();
    let clusters: Vec<(u32, Vec<usize>)> = labeling
        .clusters
        .iter()
        .map(|(&id, m)| (id, m.iter().map(|&k| non_ground[k]).collect()))
        .collect();
    let describe = |(id, members): &(u32, Vec<usize>)| {
        let pts: Vec<[f64; 3]> = members.iter().map(|&i| cloud.xyz(i)).collect();
        let n = pts.len() as f64;
        let c = pts.iter().fold([0.0; 3], |acc, p| {
            [acc[0] + p[0], acc[1] + p[1], acc[2] + p[2]]
        });
        let c = c.map(|v| v / n);
        let up = ground
            .plane_near(partition.bin(c[0]))
            .map(|p| p.normal)
            .unwrap_or([0.0, 0.0, 1.0]);
        ClusterStats {
            cluster_id: *id,
            count: members.len(),
            bbox: min_oriented_bbox(&pts, up),
            distance: (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt(),
        }
    };
    let stats: Vec<ClusterStats> = if parallel {
        clusters.par_iter().map(describe).collect()
    } else {
        clusters.iter().map(describe).collect()
    };

    let kept: Vec<usize> = (0..stats.len())
        .filter(|&k| passes_filter(&stats[k], &params.refine))
        .collect();
    let ground_points: Vec<usize> = (0..cloud.len()).filter(|&i| ground.mask[i]).collect();
    let grow = |&k: &usize| {
        let bbox = enlarge_bbox(&stats[k].bbox, &params.refine);
        let inside = points_inside(&bbox, cloud, &ground_points);
        (bbox, inside)
    };
    let grown: Vec<_> = if parallel {
        kept.par_iter().map(grow).collect()
    } else {
        kept.iter().map(grow).collect()
    };

    let mut point_labels = vec![0u32; cloud.len()];
    let mut proposals = Vec::with_capacity(kept.len());
    for (&k, (bbox, inside)) in kept.iter().zip(grown) {
        let id = stats[k].cluster_id;
        let mut members = clusters[k].1.clone();
        for &i in &members {
            point_labels[i] = id;
        }
        for i in inside {
            // ground points claimed by an earlier proposal stay there
            if point_labels[i] == 0 {
                point_labels[i] = id;
                members.push(i);
            }
        }
        proposals.push(Proposal {
            cluster_id: id,
            members,
            bbox,
            distance: stats[k].distance,
        });
    }
    timings.refine = t.elapsed();

    Ok((
        Stage1Output {
            ring_ids,
            ground,
            non_ground,
            labeling,
            proposals,
            point_labels,
        },
        timings,
    ))
}
