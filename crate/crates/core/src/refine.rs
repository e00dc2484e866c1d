//! Proposal refinement: box fitting, prior-based filtering and box
//! enlargement with ground re-merge.

use serde::{Deserialize, Serialize};

use crate::bbox::{OrientedBBox, Vec3};
use crate::cloud::{ClassId, PointCloud};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Dims {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

/// Admissible full box extents for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizePrior {
    pub min: Dims,
    pub max: Dims,
}

impl SizePrior {
    pub const fn new(min: Dims, max: Dims) -> Self {
        Self { min, max }
    }

    /// Whether a box of full extents `(a, b, height)` fits, with the two
    /// footprint sides matched to the prior's x/y in either order.
    pub fn admits(&self, a: f64, b: f64, height: f64) -> bool {
        let within = |v: f64, lo: f64, hi: f64| v >= lo && v <= hi;
        let footprint = (within(a, self.min.x, self.max.x) && within(b, self.min.y, self.max.y))
            || (within(b, self.min.x, self.max.x) && within(a, self.min.y, self.max.y));
        footprint && within(height, self.min.z, self.max.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizePriors {
    pub car: SizePrior,
    pub pedestrian: SizePrior,
    pub cyclist: SizePrior,
}

impl Default for SizePriors {
    fn default() -> Self {
        Self {
            car: SizePrior::new(Dims::new(1.5, 0.0, 1.0), Dims::new(6.0, 2.5, 2.5)),
            pedestrian: SizePrior::new(Dims::new(0.2, 0.2, 0.8), Dims::new(1.2, 1.2, 2.2)),
            cyclist: SizePrior::new(Dims::new(0.8, 0.2, 0.8), Dims::new(2.5, 1.2, 2.2)),
        }
    }
}

impl SizePriors {
    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &SizePrior)> {
        [
            (ClassId::Car, &self.car),
            (ClassId::Pedestrian, &self.pedestrian),
            (ClassId::Cyclist, &self.cyclist),
        ]
        .into_iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineParams {
    /// Point-count threshold at `d_ref`.
    pub th_num_base: usize,
    pub d_ref: f64,
    pub th_num_floor: usize,
    pub enlarge_xy: f64,
    /// Downward growth of the box along the ground normal.
    pub enlarge_z: f64,
    pub size_priors: SizePriors,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            th_num_base: 30,
            d_ref: 10.0,
            th_num_floor: 5,
            enlarge_xy: 0.1,
            enlarge_z: 0.4,
            size_priors: SizePriors::default(),
        }
    }
}

impl RefineParams {
    pub fn validate(&self) -> Result<()> {
        if self.th_num_floor < 1 {
            return Err(Error::config("refine.th_num_floor", "must be >= 1"));
        }
        if self.th_num_base < self.th_num_floor {
            return Err(Error::config(
                "refine.th_num_base",
                "must be >= refine.th_num_floor",
            ));
        }
        if !(self.d_ref > 0.0 && self.d_ref.is_finite()) {
            return Err(Error::config("refine.d_ref", "must be > 0"));
        }
        if !(self.enlarge_xy >= 0.0 && self.enlarge_xy.is_finite()) {
            return Err(Error::config("refine.enlarge_xy", "must be >= 0"));
        }
        if !(self.enlarge_z >= 0.0 && self.enlarge_z.is_finite()) {
            return Err(Error::config("refine.enlarge_z", "must be >= 0"));
        }
        for (class, prior) in self.size_priors.iter() {
            for (axis, lo, hi) in [
                ("x", prior.min.x, prior.max.x),
                ("y", prior.min.y, prior.max.y),
                ("z", prior.min.z, prior.max.z),
            ] {
                if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
                    return Err(Error::config(
                        &format!("refine.size_priors.{}.min.{axis}", class.name()),
                        "must be >= 0 and below the matching max",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Minimum member count for a cluster whose centroid is `d` meters away:
/// `max(round(th_num_base * d_ref / d), th_num_floor)`.
pub fn adaptive_threshold(d: f64, params: &RefineParams) -> Result<usize> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("distance must be finite and > 0, got {d}")));
    }
    let scaled = (params.th_num_base as f64 * params.d_ref / d).round();
    Ok((scaled as usize).max(params.th_num_floor))
}

/// Per-cluster statistics the filter decides on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterStats {
    pub cluster_id: u32,
    pub count: usize,
    pub bbox: OrientedBBox,
    pub distance: f64,
}

/// Count test and size-prior test for one cluster.
pub fn passes_filter(stats: &ClusterStats, params: &RefineParams) -> bool {
    let threshold = match adaptive_threshold(stats.distance, params) {
        Ok(t) => t,
        // a cluster centred on the sensor has no meaningful distance;
        // hold it to the strictest count
        Err(_) => usize::MAX,
    };
    if stats.count < threshold {
        return false;
    }
    let e = stats.bbox.extents();
    params
        .size_priors
        .iter()
        .any(|(_, prior)| prior.admits(e[0], e[1], e[2]))
}

/// Ids of the clusters that survive filtering, in input order.
pub fn filter_proposals(stats: &[ClusterStats], params: &RefineParams) -> Vec<u32> {
    stats
        .iter()
        .filter(|s| passes_filter(s, params))
        .map(|s| s.cluster_id)
        .collect()
}

/// A cluster that passed filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub cluster_id: u32,
    /// Indices into the full cloud.
    pub members: Vec<usize>,
    pub bbox: OrientedBBox,
    /// Distance from the sensor to the centroid of the clustered points.
    pub distance: f64,
}

/// Grows the box by `enlarge_xy` on every side and by `enlarge_z` toward the
/// ground.
pub fn enlarge_bbox(bbox: &OrientedBBox, params: &RefineParams) -> OrientedBBox {
    let mut out = *bbox;
    out.half_extents[0] += params.enlarge_xy;
    out.half_extents[1] += params.enlarge_xy;
    out.half_extents[2] += params.enlarge_z / 2.0;
    for k in 0..3 {
        out.center[k] -= bbox.up[k] * params.enlarge_z / 2.0;
    }
    out
}

fn aabb(bbox: &OrientedBBox) -> (Vec3, Vec3) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                let c = bbox.corner(sx, sy, sz);
                for k in 0..3 {
                    lo[k] = lo[k].min(c[k]);
                    hi[k] = hi[k].max(c[k]);
                }
            }
        }
    }
    (lo, hi)
}

/// Ground points among `candidates` that lie inside `bbox`, in candidate
/// order.
pub fn points_inside(bbox: &OrientedBBox, cloud: &PointCloud, candidates: &[usize]) -> Vec<usize> {
    let (lo, hi) = aabb(bbox);
    let (xs, ys, zs) = (cloud.xs(), cloud.ys(), cloud.zs());
    candidates
        .iter()
        .copied()
        .filter(|&i| {
            xs[i] >= lo[0]
                && xs[i] <= hi[0]
                && ys[i] >= lo[1]
                && ys[i] <= hi[1]
                && zs[i] >= lo[2]
                && zs[i] <= hi[2]
                && bbox.contains(cloud.xyz(i), 0.0)
        })
        .collect()
}

/// Enlarges the proposal box and appends every ground point inside it.
pub fn enlarge_and_merge(
    proposal: &Proposal,
    cloud: &PointCloud,
    ground_mask: &[bool],
    params: &RefineParams,
) -> Proposal {
    let ground: Vec<usize> = ground_mask
        .iter()
        .enumerate()
        .filter(|(_, &g)| g)
        .map(|(i, _)| i)
        .collect();
    let bbox = enlarge_bbox(&proposal.bbox, params);
    let mut members = proposal.members.clone();
    members.extend(points_inside(&bbox, cloud, &ground));
    Proposal {
        cluster_id: proposal.cluster_id,
        members,
        bbox,
        distance: proposal.distance,
    }
}
