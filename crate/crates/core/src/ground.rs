//! Segmented iterative ground-plane fitting.
//!
//! The scene is cut into equal-width slabs along x. In each slab the lowest
//! points seed a total-least-squares plane, which is refined by re-selecting
//! every point within `th_dist` of the current plane and refitting.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundParams {
    pub n_seg: usize,
    pub n_iter: usize,
    pub n_lpr: usize,
    pub th_seeds: f64,
    pub th_dist: f64,
}

impl Default for GroundParams {
    fn default() -> Self {
        Self {
            n_seg: 3,
            n_iter: 3,
            n_lpr: 20,
            th_seeds: 0.4,
            th_dist: 0.3,
        }
    }
}

impl GroundParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_seg < 1 {
            return Err(Error::config("ground.n_seg", "must be >= 1"));
        }
        if self.n_iter < 1 {
            return Err(Error::config("ground.n_iter", "must be >= 1"));
        }
        if self.n_lpr < 3 {
            return Err(Error::config("ground.n_lpr", "must be >= 3"));
        }
        if !(self.th_seeds > 0.0 && self.th_seeds.is_finite()) {
            return Err(Error::config("ground.th_seeds", "must be > 0"));
        }
        if !(self.th_dist > 0.0 && self.th_dist.is_finite()) {
            return Err(Error::config("ground.th_dist", "must be > 0"));
        }
        Ok(())
    }
}

/// Plane `{p : normal . p + offset = 0}` with a unit normal pointing up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneModel {
    pub normal: [f64; 3],
    pub offset: f64,
    pub segment_index: usize,
}

impl PlaneModel {
    #[inline]
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1] + self.normal[2] * p[2] + self.offset
    }
}

/// Equal-width partition of an x range into `n_seg` bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPartition {
    pub min_x: f64,
    pub max_x: f64,
    pub n_seg: usize,
}

impl SegmentPartition {
    pub fn new(xs: &[f64], n_seg: usize) -> Result<Self> {
        if n_seg < 1 {
            return Err(Error::Precondition("n_seg must be >= 1".into()));
        }
        let (min_x, max_x) = xs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        Ok(Self {
            min_x,
            max_x,
            n_seg,
        })
    }

    pub fn width(&self) -> f64 {
        (self.max_x - self.min_x) / self.n_seg as f64
    }

    /// Bin of `x`; a value on an interior boundary goes to the lower bin.
    #[inline]
    pub fn bin(&self, x: f64) -> usize {
        let width = self.width();
        if !(width > 0.0) {
            return 0;
        }
        let t = ((x - self.min_x) / width).ceil() - 1.0;
        t.clamp(0.0, (self.n_seg - 1) as f64) as usize
    }
}

/// Segment index of every point. An empty cloud gives an empty assignment.
pub fn split_segments(cloud: &PointCloud, n_seg: usize) -> Result<Vec<usize>> {
    let partition = SegmentPartition::new(cloud.xs(), n_seg)?;
    Ok(cloud.xs().iter().map(|&x| partition.bin(x)).collect())
}

/// Seeds among `heights`: everything below the mean of the `n_lpr` lowest
/// values plus `th_seeds`. Returns indices into `heights`.
pub fn extract_initial_seeds(heights: &[f64], n_lpr: usize, th_seeds: f64) -> Vec<usize> {
    if heights.is_empty() {
        return Vec::new();
    }
    let k = n_lpr.clamp(1, heights.len());
    let mut sorted = heights.to_vec();
    sorted.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    let lpr = sorted[..k].iter().sum::<f64>() / k as f64;
    let cut = lpr + th_seeds;
    heights
        .iter()
        .enumerate()
        .filter(|(_, &h)| h < cut)
        .map(|(i, _)| i)
        .collect()
}

/// Total least-squares plane through the points.
///
/// The normal is the eigenvector of the covariance with the smallest
/// eigenvalue, flipped to point up.
pub fn fit_plane<I>(points: I) -> Result<PlaneModel>
where
    I: IntoIterator<Item = [f64; 3]> + Clone,
{
    let mut n = 0usize;
    let mut sum = [0.0; 3];
    for p in points.clone() {
        n += 1;
        for k in 0..3 {
            sum[k] += p[k];
        }
    }
    if n < 3 {
        return Err(Error::Degenerate(format!("{n} points cannot define a plane")));
    }
    let c = sum.map(|s| s / n as f64);
    let mut cov = [0.0; 6];
    for p in points {
        let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
        cov[0] += d[0] * d[0];
        cov[1] += d[0] * d[1];
        cov[2] += d[0] * d[2];
        cov[3] += d[1] * d[1];
        cov[4] += d[1] * d[2];
        cov[5] += d[2] * d[2];
    }
    let cov = cov.map(|v| v / n as f64);
    let m = Matrix3::new(
        cov[0], cov[1], cov[2], cov[1], cov[3], cov[4], cov[2], cov[4], cov[5],
    );
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (l0, l1, l2) = (
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    );
    if l1 - l0 <= 1e-12 * l2.max(1.0) {
        return Err(Error::Degenerate(
            "points are collinear or coincident".into(),
        ));
    }
    let v = eig.eigenvectors.column(order[0]);
    let norm = v.norm();
    let mut normal = [v[0] / norm, v[1] / norm, v[2] / norm];
    if normal[2] < 0.0 {
        normal = normal.map(|x| -x);
    }
    let offset = -(normal[0] * c[0] + normal[1] * c[1] + normal[2] * c[2]);
    Ok(PlaneModel {
        normal,
        offset,
        segment_index: 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFit {
    pub plane: PlaneModel,
    /// Indices into the full cloud.
    pub ground: Vec<usize>,
    /// RMS distance of each refit's input set to the plane fitted from it.
    pub rms_history: Vec<f64>,
}

/// Seeds, fits and refines one segment given by `indices` into `cloud`.
pub fn fit_segment(
    cloud: &PointCloud,
    indices: &[usize],
    segment_index: usize,
    params: &GroundParams,
) -> Result<SegmentFit> {
    if indices.is_empty() {
        return Err(Error::Degenerate(format!("segment {segment_index} is empty")));
    }
    let heights: Vec<f64> = indices.iter().map(|&i| cloud.zs()[i]).collect();
    let mut ground: Vec<usize> = extract_initial_seeds(&heights, params.n_lpr, params.th_seeds)
        .into_iter()
        .map(|k| indices[k])
        .collect();

    let mut plane = None;
    let mut rms_history = Vec::with_capacity(params.n_iter);
    for _ in 0..params.n_iter {
        let mut fitted = fit_plane(ground.iter().map(|&i| cloud.xyz(i)))?;
        fitted.segment_index = segment_index;
        let sq: f64 = ground
            .iter()
            .map(|&i| fitted.signed_distance(cloud.xyz(i)).powi(2))
            .sum();
        rms_history.push((sq / ground.len() as f64).sqrt());
        ground = indices
            .iter()
            .copied()
            .filter(|&i| fitted.signed_distance(cloud.xyz(i)).abs() < params.th_dist)
            .collect();
        plane = Some(fitted);
    }
    Ok(SegmentFit {
        plane: plane.expect("n_iter >= 1"),
        ground,
        rms_history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundWarning {
    pub segment_index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundFit {
    /// `true` for ground points, one entry per cloud point.
    pub mask: Vec<bool>,
    /// Fitted plane per segment; `None` where the segment was degenerate.
    pub planes: Vec<Option<PlaneModel>>,
    pub warnings: Vec<GroundWarning>,
}

impl GroundFit {
    /// Plane of `segment`, falling back to the nearest segment that has one.
    pub fn plane_near(&self, segment: usize) -> Option<&PlaneModel> {
        let n = self.planes.len();
        (0..n)
            .flat_map(|off| [segment.checked_sub(off), segment.checked_add(off)])
            .flatten()
            .filter(|&s| s < n)
            .find_map(|s| self.planes[s].as_ref())
    }

    pub fn ground_count(&self) -> usize {
        self.mask.iter().filter(|&&g| g).count()
    }
}

/// Fits every segment and concatenates the per-segment ground sets.
///
/// A degenerate segment contributes no ground points and a warning.
pub fn ground_plane_fit(
    cloud: &PointCloud,
    segments: &[usize],
    params: &GroundParams,
) -> Result<GroundFit> {
    ground_plane_fit_with(cloud, segments, params, false)
}

pub fn ground_plane_fit_with(
    cloud: &PointCloud,
    segments: &[usize],
    params: &GroundParams,
    parallel: bool,
) -> Result<GroundFit> {
    params.validate()?;
    if segments.len() != cloud.len() {
        return Err(Error::Alignment {
            expected: cloud.len(),
            found: segments.len(),
        });
    }
    let n_seg = params.n_seg;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_seg];
    for (i, &s) in segments.iter().enumerate() {
        if s >= n_seg {
            return Err(Error::Precondition(format!(
                "segment index {s} out of range for n_seg={n_seg}"
            )));
        }
        members[s].push(i);
    }

    let run = |(s, idx): (usize, &Vec<usize>)| fit_segment(cloud, idx, s, params);
    let fits: Vec<Result<SegmentFit>> = if parallel {
        members.par_iter().enumerate().map(run).collect()
    } else {
        members.iter().enumerate().map(run).collect()
    };

    let mut mask = vec![false; cloud.len()];
    let mut planes = Vec::with_capacity(n_seg);
    let mut warnings = Vec::new();
    for (s, fit) in fits.into_iter().enumerate() {
        match fit {
            Ok(fit) => {
                for &i in &fit.ground {
                    mask[i] = true;
                }
                planes.push(Some(fit.plane));
            }
            Err(e) => {
                if !members[s].is_empty() {
                    log::warn!("ground segment {s}: {e}");
                }
                warnings.push(GroundWarning {
                    segment_index: s,
                    message: e.to_string(),
                });
                planes.push(None);
            }
        }
    }
    Ok(GroundFit {
        mask,
        planes,
        warnings,
    })
}
