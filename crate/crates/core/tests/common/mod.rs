//! Independent oracles and scene builders shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringseg::cloud::{ClassId, Point, PointCloud};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn d2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Connected components of the ring link graph, built edge by edge and
/// flood filled. Returns one component index per point.
///
/// Edges: consecutive points of a ring (and last to first) closer than
/// `th_ring`; each point to its nearest point on ring `r - 1` (full scan,
/// ties to the smaller index) when closer than `th_prop`.
pub fn brute_ring_components(pts: &[[f64; 3]], rings: &[u16], th_ring: f64, th_prop: f64) -> Vec<usize> {
    let n = pts.len();
    let mut by_ring: HashMap<u16, Vec<usize>> = HashMap::new();
    for i in 0..n {
        by_ring.entry(rings[i]).or_default().push(i);
    }
    let mut adj = vec![Vec::new(); n];
    let link = |a: usize, b: usize, adj: &mut Vec<Vec<usize>>| {
        adj[a].push(b);
        adj[b].push(a);
    };
    for members in by_ring.values() {
        let m = members.len();
        for k in 0..m {
            if m < 2 {
                break;
            }
            let (a, b) = (members[k], members[(k + 1) % m]);
            if a != b && d2(pts[a], pts[b]).sqrt() < th_ring {
                link(a, b, &mut adj);
            }
        }
    }
    for (&r, members) in &by_ring {
        if r == 0 {
            continue;
        }
        let Some(prev) = by_ring.get(&(r - 1)) else { continue };
        for &i in members {
            let mut best: Option<(f64, usize)> = None;
            for &j in prev {
                let d = d2(pts[i], pts[j]).sqrt();
                if best.is_none_or(|(bd, bj)| d < bd || (d == bd && j < bj)) {
                    best = Some((d, j));
                }
            }
            if let Some((d, j)) = best {
                if d < th_prop {
                    link(i, j, &mut adj);
                }
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = next;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    comp
}

/// True when two labelings induce the same partition.
pub fn same_partition<A: Copy + Eq + std::hash::Hash, B: Copy + Eq + std::hash::Hash>(a: &[A], b: &[B]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut ab: HashMap<A, B> = HashMap::new();
    let mut ba: HashMap<B, A> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if *ab.entry(x).or_insert(y) != y || *ba.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

/// Random small multi-ring scene in scan order: points of ring `r` sit on a
/// circle-ish curve at increasing azimuth, bunched into arcs so that both
/// intra-ring and cross-ring links occur.
pub fn random_ring_scene(seed: u64, max_points: usize) -> PointCloud {
    let mut rng = rng(seed);
    let n_rings = rng.random_range(4..=8);
    let total = rng.random_range(1..=max_points);
    let spacing = rng.random_range(0.2..0.9);
    let mut cloud = PointCloud::with_capacity(total);
    let mut rings = Vec::with_capacity(total);
    let mut counts = vec![0usize; n_rings];
    for _ in 0..total {
        counts[rng.random_range(0..n_rings)] += 1;
    }
    // an occasional empty ring cuts propagation
    if rng.random_bool(0.2) {
        let r = rng.random_range(0..n_rings);
        let moved = counts[r];
        counts[r] = 0;
        counts[(r + 1) % n_rings] += moved;
    }
    let arcs: Vec<(f64, f64)> = (0..rng.random_range(1..6))
        .map(|_| (rng.random_range(0.0..TAU), rng.random_range(0.05..1.5)))
        .collect();
    let base_r = rng.random_range(2.0..12.0);
    for (r, &count) in counts.iter().enumerate() {
        let mut az: Vec<f64> = (0..count)
            .map(|_| {
                let (start, width) = arcs[rng.random_range(0..arcs.len())];
                (start + rng.random_range(0.0..width)).rem_euclid(TAU)
            })
            .collect();
        az.sort_by(f64::total_cmp);
        for a in az {
            let range = base_r + rng.random_range(-spacing..spacing);
            let z = -1.0 + r as f64 * spacing * 0.6 + rng.random_range(-0.1..0.1);
            cloud.push(Point::new(range * a.cos(), range * a.sin(), z, 0.5));
            rings.push(r as u16);
        }
    }
    cloud.with_ring_ids(rings).unwrap()
}

/// Symmetric 3x3 eigen decomposition by cyclic Jacobi rotations.
/// Returns eigenvalues ascending with matching unit eigenvectors.
pub fn jacobi_eigen3(mut a: [[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..100 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        if off < 1e-30 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let vals = order.map(|i| a[i][i]);
    let vecs = order.map(|i| [v[0][i], v[1][i], v[2][i]]);
    (vals, vecs)
}

/// Total-least-squares plane through points: unit normal with positive z
/// and offset, `n . p + d = 0`.
pub fn tls_plane(pts: &[[f64; 3]]) -> ([f64; 3], f64) {
    let n = pts.len() as f64;
    let mut c = [0.0; 3];
    for p in pts {
        for k in 0..3 {
            c[k] += p[k] / n;
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for p in pts {
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += (p[i] - c[i]) * (p[j] - c[j]) / n;
            }
        }
    }
    let (_, vecs) = jacobi_eigen3(cov);
    let mut normal = vecs[0];
    if normal[2] < 0.0 {
        normal = normal.map(|v| -v);
    }
    let d = -(normal[0] * c[0] + normal[1] * c[1] + normal[2] * c[2]);
    (normal, d)
}

/// Smallest bounding-rectangle area over orientations `0, step, 2 step, ...`
/// up to 90 degrees.
pub fn sweep_min_area(pts: &[[f64; 2]], step_deg: f64) -> f64 {
    let steps = (90.0 / step_deg).round() as usize;
    (0..=steps)
        .map(|k| {
            let a = (k as f64 * step_deg).to_radians();
            let (s, c) = a.sin_cos();
            let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) =
                (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for p in pts {
                let u = c * p[0] + s * p[1];
                let v = -s * p[0] + c * p[1];
                lo_u = lo_u.min(u);
                hi_u = hi_u.max(u);
                lo_v = lo_v.min(v);
                hi_v = hi_v.max(v);
            }
            (hi_u - lo_u) * (hi_v - lo_v)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Random planar point set in one of several shapes.
pub fn random_planar_points(seed: u64) -> Vec<[f64; 2]> {
    let mut rng = rng(seed);
    let n = rng.random_range(3..200);
    let (cx, cy) = (rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
    let (sx, sy) = (rng.random_range(0.1..6.0), rng.random_range(0.1..6.0));
    let rot = rng.random_range(0.0..TAU);
    let (s, c) = rot.sin_cos();
    (0..n)
        .map(|_| {
            let (u, v) = if rng.random_bool(0.5) {
                (rng.random_range(-sx..sx), rng.random_range(-sy..sy))
            } else {
                let a = rng.random_range(0.0..TAU);
                let r = rng.random_range(0.0f64..1.0).sqrt();
                (sx * r * a.cos(), sy * r * a.sin())
            };
            [cx + c * u - s * v, cy + s * u + c * v]
        })
        .collect()
}

/// Per-class counts `(|P|, |G|, |P & G|)` by walking the labels once per
/// class.
pub fn naive_counts(pred: &[ClassId], gt: &[ClassId], class: ClassId) -> (usize, usize, usize) {
    let mut p = 0;
    let mut g = 0;
    let mut both = 0;
    for i in 0..pred.len() {
        let in_p = pred[i] == class;
        let in_g = gt[i] == class;
        if in_p {
            p += 1;
        }
        if in_g {
            g += 1;
        }
        if in_p && in_g {
            both += 1;
        }
    }
    (p, g, both)
}

pub fn random_labels<R: Rng>(rng: &mut R, n: usize, bias: f64) -> Vec<ClassId> {
    (0..n)
        .map(|_| {
            if rng.random_bool(bias) {
                ClassId::Background
            } else {
                ClassId::ALL[rng.random_range(0..4)]
            }
        })
        .collect()
}

/// Sorted pairwise distances of a point set.
pub fn pairwise_distances(pts: &[[f64; 3]]) -> Vec<f64> {
    let mut d = Vec::with_capacity(pts.len() * pts.len() / 2);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d.push(d2(pts[i], pts[j]).sqrt());
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

pub fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

pub fn mat_close(a: [[f64; 2]; 2], b: [[f64; 2]; 2], tol: f64) -> bool {
    (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
}
