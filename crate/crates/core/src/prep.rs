//! Training-sample preparation for proposals.
//!
//! A proposal is moved into a local frame whose origin is a bottom vertex
//! of its box, with the box in the first octant. The eight planar
//! isometries of the box footprint (four rotations, each optionally
//! mirrored) give eight equally plausible views of the same object. Each
//! view is resampled to a fixed point count and turned into rows of
//! `(x, y, z, intensity, n)` with `n = (NUM - N) / N`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::ArchiveSample;
use crate::bbox::{dot3, OrientedBBox, Vec3};
use crate::cloud::{ClassId, PointCloud};
use crate::error::{Error, Result};
use crate::refine::Proposal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplePrepParams {
    pub n_points: usize,
    #[serde(skip)]
    pub rng_seed: u64,
    pub augment: bool,
    /// Probability of keeping a background sample.
    pub background_keep_prob: f64,
}

impl Default for SamplePrepParams {
    fn default() -> Self {
        Self {
            n_points: 512,
            rng_seed: 0,
            augment: false,
            background_keep_prob: 0.25,
        }
    }
}

impl SamplePrepParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 1 {
            return Err(Error::config("prep.n_points", "must be >= 1"));
        }
        if self.n_points > u32::MAX as usize {
            return Err(Error::config("prep.n_points", "must fit in 32 bits"));
        }
        if !(0.0..=1.0).contains(&self.background_keep_prob) {
            return Err(Error::config("prep.background_keep_prob", "must be in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SampleSource {
    pub frame_id: u32,
    pub cluster_id: u32,
    /// Augmentation variant, 0..8; 0 is the untouched view.
    pub variant: u8,
    /// Which bottom vertex became the origin, 0..4.
    pub origin_vertex: u8,
}

/// A proposal in its local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub local_points: Vec<Vec3>,
    pub intensities: Vec<f64>,
    pub class_label: ClassId,
    pub source: SampleSource,
    /// Box in the local frame: axis aligned, spanning `[0, 2h]` per axis.
    pub bbox_local: OrientedBBox,
    /// Point count before resampling.
    pub num: usize,
}

impl Sample {
    pub fn len(&self) -> usize {
        self.local_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local_points.is_empty()
    }
}

fn local_box(half: Vec3) -> OrientedBBox {
    OrientedBBox {
        center: half,
        yaw: 0.0,
        half_extents: half,
        up: [0.0, 0.0, 1.0],
    }
}

/// Box-frame signs of the four bottom vertices.
const BOTTOM_VERTICES: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

/// Majority label over the members, ties to the smaller class id.
pub fn majority_class(labels: &[ClassId], members: &[usize]) -> ClassId {
    let mut counts = [0usize; 4];
    for &i in members {
        counts[labels[i].as_u8() as usize] += 1;
    }
    let mut best = 0;
    for c in 1..4 {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    ClassId::from_u8(best as u8).unwrap()
}

/// Moves a proposal into a local frame anchored at a randomly chosen bottom
/// vertex of its box. The local axes run along the box edges leaving that
/// vertex, so the box occupies `[0, 2hx] x [0, 2hy] x [0, 2hz]`. Vertices 1
/// and 3 give a mirror image of vertices 0 and 2.
pub fn canonical_transform<R: Rng + ?Sized>(
    proposal: &Proposal,
    cloud: &PointCloud,
    frame_id: u32,
    rng: &mut R,
) -> Sample {
    let vertex = rng.random_range(0..4u8);
    canonical_transform_at(proposal, cloud, frame_id, vertex)
}

/// [`canonical_transform`] with an explicit origin vertex.
pub fn canonical_transform_at(
    proposal: &Proposal,
    cloud: &PointCloud,
    frame_id: u32,
    vertex: u8,
) -> Sample {
    let bbox = &proposal.bbox;
    let (sx, sy) = BOTTOM_VERTICES[vertex as usize % 4];
    let [ax, ay, az] = bbox.axes();
    let x_axis = ax.map(|v| -sx * v);
    let y_axis = ay.map(|v| -sy * v);
    let origin = bbox.corner(sx, sy, -1.0);

    let mut local_points = Vec::with_capacity(proposal.members.len());
    let mut intensities = Vec::with_capacity(proposal.members.len());
    for &i in &proposal.members {
        let p = cloud.xyz(i);
        let d = [p[0] - origin[0], p[1] - origin[1], p[2] - origin[2]];
        local_points.push([dot3(d, x_axis), dot3(d, y_axis), dot3(d, az)]);
        intensities.push(cloud.intensities()[i]);
    }
    let class_label = cloud
        .labels()
        .map(|l| majority_class(l, &proposal.members))
        .unwrap_or_default();
    Sample {
        num: local_points.len(),
        local_points,
        intensities,
        class_label,
        source: SampleSource {
            frame_id,
            cluster_id: proposal.cluster_id,
            variant: 0,
            origin_vertex: vertex,
        },
        bbox_local: local_box(bbox.half_extents),
    }
}

pub type Mat2 = [[f64; 2]; 2];

/// Linear part of augmentation variant `v`: an optional mirror of the x
/// axis (`v >= 4`) followed by a rotation of `(v % 4)` quarter turns.
pub fn d4_matrix(variant: u8) -> Mat2 {
    let rot: Mat2 = match variant % 4 {
        0 => [[1.0, 0.0], [0.0, 1.0]],
        1 => [[0.0, -1.0], [1.0, 0.0]],
        2 => [[-1.0, 0.0], [0.0, -1.0]],
        _ => [[0.0, 1.0], [-1.0, 0.0]],
    };
    if variant % 8 >= 4 {
        [[-rot[0][0], rot[0][1]], [-rot[1][0], rot[1][1]]]
    } else {
        rot
    }
}

/// Applies variant `v` about the footprint center and re-anchors the result
/// in the first octant.
pub fn apply_variant(sample: &Sample, variant: u8) -> Sample {
    if variant % 8 == 0 {
        return sample.clone();
    }
    let m = d4_matrix(variant);
    let h = sample.bbox_local.half_extents;
    let swapped = variant % 2 == 1;
    let h_new = if swapped { [h[1], h[0], h[2]] } else { h };
    let local_points = sample
        .local_points
        .iter()
        .map(|p| {
            let (dx, dy) = (p[0] - h[0], p[1] - h[1]);
            [
                m[0][0] * dx + m[0][1] * dy + h_new[0],
                m[1][0] * dx + m[1][1] * dy + h_new[1],
                p[2],
            ]
        })
        .collect();
    Sample {
        local_points,
        intensities: sample.intensities.clone(),
        class_label: sample.class_label,
        source: SampleSource {
            variant: variant % 8,
            ..sample.source
        },
        bbox_local: local_box(h_new),
        num: sample.num,
    }
}

/// All eight views of a canonical sample; index = variant id.
pub fn augment_eightfold(sample: &Sample) -> Vec<Sample> {
    (0..8).map(|v| apply_variant(sample, v)).collect()
}

/// Indices to draw for resampling `num` points to `n`.
///
/// More points than needed: `n` distinct indices. Fewer: every index once,
/// then `n - num` more drawn with replacement. Equal: the identity.
pub fn resample_indices<R: Rng + ?Sized>(num: usize, n: usize, rng: &mut R) -> Vec<usize> {
    use std::cmp::Ordering;
    match num.cmp(&n) {
        Ordering::Equal => (0..num).collect(),
        Ordering::Greater => index::sample(rng, num, n).into_vec(),
        Ordering::Less => {
            let mut idx: Vec<usize> = (0..num).collect();
            idx.extend((num..n).map(|_| rng.random_range(0..num)));
            idx
        }
    }
}

/// Resamples to exactly `n` points; `num` keeps the original count.
pub fn resample_points<R: Rng + ?Sized>(sample: &Sample, n: usize, rng: &mut R) -> Result<Sample> {
    if sample.is_empty() {
        return Err(Error::Precondition("cannot resample an empty sample".into()));
    }
    if n == 0 {
        return Err(Error::Precondition("n_points must be >= 1".into()));
    }
    let idx = resample_indices(sample.len(), n, rng);
    Ok(Sample {
        local_points: idx.iter().map(|&i| sample.local_points[i]).collect(),
        intensities: idx.iter().map(|&i| sample.intensities[i]).collect(),
        class_label: sample.class_label,
        source: sample.source,
        bbox_local: sample.bbox_local,
        num: sample.num,
    })
}

/// Rows of `(x, y, z, intensity, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<[f32; 5]>,
    pub num: usize,
}

impl FeatureMatrix {
    pub fn n_points(&self) -> usize {
        self.rows.len()
    }
}

/// The relative-count feature `(NUM - N) / N`.
pub fn relative_count(num: usize, n: usize) -> f64 {
    (num as f64 - n as f64) / n as f64
}

pub fn build_feature_matrix(sample: &Sample) -> FeatureMatrix {
    let n = relative_count(sample.num, sample.len()) as f32;
    let rows = sample
        .local_points
        .iter()
        .zip(&sample.intensities)
        .map(|(p, &i)| [p[0] as f32, p[1] as f32, p[2] as f32, i as f32, n])
        .collect();
    FeatureMatrix {
        rows,
        num: sample.num,
    }
}

const STREAM_KEEP: u64 = 0;
const STREAM_VERTEX: u64 = 1;
const STREAM_RESAMPLE: u64 = 2;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for one (frame, cluster, stream) triple, so
/// proposals can be prepared in any order or in parallel.
pub fn derive_rng(seed: u64, frame_id: u32, cluster_id: u32, stream: u64) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(seed) ^ frame_id as u64) ^ cluster_id as u64) ^ stream;
    ChaCha8Rng::seed_from_u64(splitmix(key))
}

/// Full preparation of one proposal into archive-ready samples.
///
/// Background proposals survive with probability `background_keep_prob` and
/// are never augmented. Foreground proposals give eight samples when
/// `augment` is set, one otherwise.
pub fn prepare_proposal(
    proposal: &Proposal,
    cloud: &PointCloud,
    frame_id: u32,
    params: &SamplePrepParams,
) -> Result<Vec<ArchiveSample>> {
    if proposal.members.is_empty() {
        return Ok(Vec::new());
    }
    let seed = params.rng_seed;
    let cid = proposal.cluster_id;
    let mut vertex_rng = derive_rng(seed, frame_id, cid, STREAM_VERTEX);
    let canonical = canonical_transform(proposal, cloud, frame_id, &mut vertex_rng);

    if canonical.class_label == ClassId::Background {
        let mut keep = derive_rng(seed, frame_id, cid, STREAM_KEEP);
        if keep.random::<f64>() >= params.background_keep_prob {
            return Ok(Vec::new());
        }
    }
    let views = if params.augment && canonical.class_label.is_foreground() {
        augment_eightfold(&canonical)
    } else {
        vec![canonical]
    };
    views
        .iter()
        .map(|view| {
            let mut rng = derive_rng(seed, frame_id, cid, STREAM_RESAMPLE + view.source.variant as u64);
            let resampled = resample_points(view, params.n_points, &mut rng)?;
            let features = build_feature_matrix(&resampled);
            Ok(ArchiveSample {
                class: view.class_label,
                variant: view.source.variant,
                frame_id,
                cluster_id: cid,
                num: view.num as u32,
                features: features.rows,
            })
        })
        .collect()
}
