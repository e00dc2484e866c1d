//! Ring-based clustering of non-ground points.
//!
//! Within a ring, consecutive points (scan order, closing the loop from the
//! last point back to the first) closer than `th_ring` form runs. Each point
//! is also linked to its nearest neighbour on the previous ring when that
//! neighbour is closer than `th_prop`. A run inherits the smallest label
//! among its linked neighbours, records merges for the others, or opens a
//! new label. Merged labels collapse to the smallest id.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    pub th_ring: f64,
    pub th_prop: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            th_ring: 0.5,
            th_prop: 1.0,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.th_ring > 0.0 && self.th_ring.is_finite()) {
            return Err(Error::config("cluster.th_ring", "must be > 0"));
        }
        if !(self.th_prop > 0.0 && self.th_prop.is_finite()) {
            return Err(Error::config("cluster.th_prop", "must be > 0"));
        }
        Ok(())
    }
}

/// Cluster id per point of the clustered cloud plus the inverse map.
///
/// Ids start at 1; an id is the smallest label of its merge class, so ids
/// need not be contiguous.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterLabeling {
    pub labels: Vec<u32>,
    pub clusters: BTreeMap<u32, Vec<usize>>,
}

impl ClusterLabeling {
    pub fn from_labels(labels: Vec<u32>) -> Self {
        let mut clusters: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            clusters.entry(l).or_default().push(i);
        }
        Self { labels, clusters }
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }
}

/// Union-find over labels whose root is always the smallest member.
#[derive(Debug, Default, Clone)]
pub(crate) struct MinUnion {
    parent: Vec<u32>,
}

impl MinUnion {
    pub(crate) fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    pub(crate) fn find(&mut self, mut a: u32) -> u32 {
        let mut root = a;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[a as usize] != root {
            let next = self.parent[a as usize];
            self.parent[a as usize] = root;
            a = next;
        }
        root
    }

    pub(crate) fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

/// Replaces every label by the smallest label of its merge class.
///
/// Labels not mentioned in any merge are left as they are.
pub fn resolve_labels(labels: &[u32], merges: &[(u32, u32)]) -> Vec<u32> {
    let mut slot: HashMap<u32, u32> = HashMap::new();
    let mut value: Vec<u32> = Vec::new();
    let mut uf = MinUnion::default();
    // slots are handed out in ascending label order so the min-root rule
    // carries over to the label values
    let mut distinct: Vec<u32> = merges.iter().flat_map(|&(a, b)| [a, b]).collect();
    distinct.sort_unstable();
    distinct.dedup();
    for l in distinct {
        slot.insert(l, uf.make());
        value.push(l);
    }
    for &(a, b) in merges {
        uf.union(slot[&a], slot[&b]);
    }
    labels
        .iter()
        .map(|l| match slot.get(l) {
            Some(&s) => value[uf.find(s) as usize],
            None => *l,
        })
        .collect()
}

/// Azimuth-sorted view of one ring for windowed neighbour queries.
struct RingIndex {
    azimuth: Vec<f64>,
    point: Vec<usize>,
}

impl RingIndex {
    fn new(members: &[usize], azimuth: &[f64]) -> Self {
        let mut order: Vec<usize> = members.to_vec();
        order.sort_by(|&a, &b| azimuth[a].total_cmp(&azimuth[b]).then(a.cmp(&b)));
        Self {
            azimuth: order.iter().map(|&i| azimuth[i]).collect(),
            point: order,
        }
    }

    fn for_each_in(&self, lo: f64, hi: f64, mut f: impl FnMut(usize)) {
        let start = self.azimuth.partition_point(|&a| a < lo);
        let end = self.azimuth.partition_point(|&a| a <= hi);
        for k in start..end {
            f(self.point[k]);
        }
    }

    /// Nearest ring member to `p` closer than `radius`, ties to the smaller
    /// index. Only the azimuth window that can hold such a point is scanned.
    fn nearest_within(&self, cloud: &PointCloud, p: [f64; 3], az: f64, radius: f64) -> Option<usize> {
        let r_xy = p[0].hypot(p[1]);
        let mut best: Option<(f64, usize)> = None;
        let r2 = radius * radius;
        let mut visit = |j: usize| {
            let q = cloud.xyz(j);
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
            if d2 < r2 {
                match best {
                    Some((bd, bj)) if bd < d2 || (bd == d2 && bj < j) => {}
                    _ => best = Some((d2, j)),
                }
            }
        };
        if r_xy <= radius {
            self.for_each_in(f64::NEG_INFINITY, f64::INFINITY, &mut visit);
        } else {
            let half = (radius / r_xy).asin() + 1e-9;
            let (lo, hi) = (az - half, az + half);
            if lo < -PI {
                self.for_each_in(lo + 2.0 * PI, f64::INFINITY, &mut visit);
                self.for_each_in(f64::NEG_INFINITY, hi, &mut visit);
            } else if hi > PI {
                self.for_each_in(f64::NEG_INFINITY, hi - 2.0 * PI, &mut visit);
                self.for_each_in(lo, f64::INFINITY, &mut visit);
            } else {
                self.for_each_in(lo, hi, &mut visit);
            }
        }
        best.map(|(_, j)| j)
    }
}

#[inline]
fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Clusters a non-ground cloud that carries ring ids.
pub fn cluster_ring_based(cloud: &PointCloud, params: &ClusterParams) -> Result<ClusterLabeling> {
    params.validate()?;
    let rings = cloud
        .ring_ids()
        .ok_or_else(|| Error::Precondition("ring ids are required for clustering".into()))?;
    if cloud.is_empty() {
        return Ok(ClusterLabeling::default());
    }

    let max_ring = *rings.iter().max().unwrap() as usize;
    let mut by_ring: Vec<Vec<usize>> = vec![Vec::new(); max_ring + 1];
    for (i, &r) in rings.iter().enumerate() {
        by_ring[r as usize].push(i);
    }
    let azimuth: Vec<f64> = cloud
        .xs()
        .iter()
        .zip(cloud.ys())
        .map(|(&x, &y)| y.atan2(x))
        .collect();

    let th_ring2 = params.th_ring * params.th_ring;
    let mut uf = MinUnion::default();
    uf.make(); // label 0 stays unused
    let mut raw = vec![0u32; cloud.len()];
    let mut prev: Option<RingIndex> = None;
    let mut run_of: Vec<usize> = Vec::new();
    let mut run_links: Vec<Vec<u32>> = Vec::new();

    for members in &by_ring {
        if members.is_empty() {
            prev = None;
            continue;
        }
        run_of.clear();
        let mut runs = 0usize;
        for (k, &i) in members.iter().enumerate() {
            if k == 0 || dist2(cloud.xyz(members[k - 1]), cloud.xyz(i)) >= th_ring2 {
                runs += 1;
            }
            run_of.push(runs - 1);
        }
        let n = members.len();
        if runs > 1 && dist2(cloud.xyz(members[n - 1]), cloud.xyz(members[0])) < th_ring2 {
            let last = runs - 1;
            for r in run_of.iter_mut() {
                if *r == last {
                    *r = 0;
                }
            }
            runs -= 1;
        }

        run_links.iter_mut().for_each(Vec::clear);
        run_links.resize_with(runs, Vec::new);
        if let Some(index) = &prev {
            for (k, &i) in members.iter().enumerate() {
                let p = cloud.xyz(i);
                if let Some(j) = index.nearest_within(cloud, p, azimuth[i], params.th_prop) {
                    run_links[run_of[k]].push(raw[j]);
                }
            }
        }

        let mut run_label = vec![0u32; runs];
        // runs are labelled in order of their first point
        let mut seen = vec![false; runs];
        for &r in &run_of {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            let links = &run_links[r];
            let label = if links.is_empty() {
                uf.make()
            } else {
                let mut roots: Vec<u32> = links.iter().map(|&l| uf.find(l)).collect();
                roots.sort_unstable();
                roots.dedup();
                for &other in &roots[1..] {
                    uf.union(roots[0], other);
                }
                roots[0]
            };
            run_label[r] = label;
        }
        for (k, &i) in members.iter().enumerate() {
            raw[i] = run_label[run_of[k]];
        }
        prev = Some(RingIndex::new(members, &azimuth));
    }

    let labels: Vec<u32> = raw.iter().map(|&l| uf.find(l)).collect();
    Ok(ClusterLabeling::from_labels(labels))
}
