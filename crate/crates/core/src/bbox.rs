//! Ground-aligned oriented bounding boxes.
//!
//! Points are projected onto the ground plane, the minimum-area rectangle
//! of the projected convex hull is found with rotating calipers, and the
//! vertical extent is taken along the ground normal.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

/// Smallest half extent a box may have. Single points and flat clusters
/// get this thickness instead of a zero-size box.
pub const MIN_HALF_EXTENT: f64 = 0.01;

pub type Vec2 = [f64; 2];
pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn scale3(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn normalize3(a: Vec3) -> Vec3 {
    let n = dot3(a, a).sqrt();
    scale3(a, 1.0 / n)
}

/// In-plane reference axes `(u, v)` for a unit normal, with `u` the
/// projection of global x (global y when the normal is close to x).
pub fn plane_basis(up: Vec3) -> (Vec3, Vec3) {
    let reference = if up[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = normalize3(add3(reference, scale3(up, -dot3(reference, up))));
    let v = cross3(up, u);
    (u, v)
}

/// Box with its z axis along `up`, rotated by `yaw` about `up` from the
/// reference axes of [`plane_basis`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBBox {
    pub center: Vec3,
    pub yaw: f64,
    pub half_extents: Vec3,
    pub up: Vec3,
}

impl OrientedBBox {
    /// Box x, y and z axes in the global frame.
    pub fn axes(&self) -> [Vec3; 3] {
        let (u, v) = plane_basis(self.up);
        let (s, c) = self.yaw.sin_cos();
        let ax = add3(scale3(u, c), scale3(v, s));
        let ay = cross3(self.up, ax);
        [ax, ay, self.up]
    }

    /// Coordinates of `p` in the box frame, relative to the center.
    pub fn to_local(&self, p: Vec3) -> Vec3 {
        let d = [
            p[0] - self.center[0],
            p[1] - self.center[1],
            p[2] - self.center[2],
        ];
        let [ax, ay, az] = self.axes();
        [dot3(d, ax), dot3(d, ay), dot3(d, az)]
    }

    /// Containment with a tolerance `eps` on every face.
    pub fn contains(&self, p: Vec3, eps: f64) -> bool {
        let l = self.to_local(p);
        (0..3).all(|k| l[k].abs() <= self.half_extents[k] + eps)
    }

    /// Footprint area (x by y).
    pub fn area(&self) -> f64 {
        4.0 * self.half_extents[0] * self.half_extents[1]
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.iter().product::<f64>()
    }

    /// Full extents, `2 * half_extents`.
    pub fn extents(&self) -> Vec3 {
        self.half_extents.map(|h| 2.0 * h)
    }

    /// Corner at box-frame signs `(sx, sy, sz)`, each `+1.0` or `-1.0`.
    pub fn corner(&self, sx: f64, sy: f64, sz: f64) -> Vec3 {
        let [ax, ay, az] = self.axes();
        let h = self.half_extents;
        add3(
            self.center,
            add3(
                scale3(ax, sx * h[0]),
                add3(scale3(ay, sy * h[1]), scale3(az, sz * h[2])),
            ),
        )
    }
}

#[inline]
fn cross2(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

#[inline]
fn dot2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Convex hull in counter-clockwise order without collinear vertices
/// (monotone chain).
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross2(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross2(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Rectangle in the plane: orientation of its first axis, center and half
/// extents along (first axis, second axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect2 {
    pub angle: f64,
    pub center: Vec2,
    pub half: Vec2,
}

impl Rect2 {
    pub fn area(&self) -> f64 {
        4.0 * self.half[0] * self.half[1]
    }
}

/// Minimum-area enclosing rectangle of a counter-clockwise convex polygon.
///
/// Rotating calipers: one side of the optimum is flush with a hull edge, and
/// the three supporting vertices advance monotonically as the edge index
/// does, so the sweep is linear in the hull size.
pub fn min_area_rect(hull: &[Vec2]) -> Rect2 {
    let m = hull.len();
    match m {
        0 => {
            return Rect2 {
                angle: 0.0,
                center: [0.0, 0.0],
                half: [0.0, 0.0],
            }
        }
        1 => {
            return Rect2 {
                angle: 0.0,
                center: hull[0],
                half: [0.0, 0.0],
            }
        }
        2 => {
            let d = [hull[1][0] - hull[0][0], hull[1][1] - hull[0][1]];
            return Rect2 {
                angle: d[1].atan2(d[0]),
                center: [(hull[0][0] + hull[1][0]) / 2.0, (hull[0][1] + hull[1][1]) / 2.0],
                half: [dot2(d, d).sqrt() / 2.0, 0.0],
            };
        }
        _ => {}
    }

    let next = |i: usize| (i + 1) % m;
    let advance = |mut ptr: usize, dir: Vec2, sign: f64| {
        for _ in 0..m {
            let n = next(ptr);
            if sign * dot2(hull[n], dir) > sign * dot2(hull[ptr], dir) {
                ptr = n;
            } else {
                break;
            }
        }
        ptr
    };

    let mut best: Option<(f64, Rect2)> = None;
    let (mut j, mut k, mut l) = (0usize, 0usize, 0usize);
    for i in 0..m {
        let a = hull[i];
        let b = hull[next(i)];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let e = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        let nrm = [-e[1], e[0]];

        if i == 0 {
            // seed the calipers at the true extremes of the first edge
            let arg = |dir: Vec2, sign: f64| {
                (0..m)
                    .max_by(|&p, &q| (sign * dot2(hull[p], dir)).total_cmp(&(sign * dot2(hull[q], dir))))
                    .unwrap()
            };
            (j, k, l) = (arg(e, 1.0), arg(nrm, 1.0), arg(e, -1.0));
        } else {
            j = advance(j, e, 1.0);
            k = advance(k, nrm, 1.0);
            l = advance(l, e, -1.0);
        }

        let (lo_e, hi_e) = (dot2(hull[l], e), dot2(hull[j], e));
        let (lo_n, hi_n) = (dot2(a, nrm), dot2(hull[k], nrm));
        let area = (hi_e - lo_e) * (hi_n - lo_n);
        if best.map_or(true, |(ba, _)| area < ba) {
            let ce = (lo_e + hi_e) / 2.0;
            let cn = (lo_n + hi_n) / 2.0;
            best = Some((
                area,
                Rect2 {
                    angle: e[1].atan2(e[0]),
                    center: [e[0] * ce + nrm[0] * cn, e[1] * ce + nrm[1] * cn],
                    half: [(hi_e - lo_e) / 2.0, (hi_n - lo_n) / 2.0],
                },
            ));
        }
    }
    best.unwrap().1
}

/// Normalizes an angle into `[0, pi)`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let y = yaw.rem_euclid(PI);
    if y >= PI {
        0.0
    } else {
        y
    }
}

/// Minimal ground-aligned box around `points`.
///
/// The box x axis is the longer footprint side. Half extents are at least
/// [`MIN_HALF_EXTENT`]. `points` must be non-empty.
pub fn min_oriented_bbox(points: &[Vec3], ground_normal: Vec3) -> OrientedBBox {
    assert!(!points.is_empty(), "bounding box of an empty point set");
    let up = normalize3(ground_normal);
    let (u, v) = plane_basis(up);
    let mut flat = Vec::with_capacity(points.len());
    let (mut h_lo, mut h_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &p in points {
        flat.push([dot3(p, u), dot3(p, v)]);
        let h = dot3(p, up);
        h_lo = h_lo.min(h);
        h_hi = h_hi.max(h);
    }
    let hull = convex_hull(&flat);
    let rect = min_area_rect(&hull);

    let (mut angle, mut half) = (rect.angle, rect.half);
    if half[0] < half[1] {
        angle += FRAC_PI_2;
        half = [half[1], half[0]];
    }
    let center = add3(
        add3(scale3(u, rect.center[0]), scale3(v, rect.center[1])),
        scale3(up, (h_lo + h_hi) / 2.0),
    );
    OrientedBBox {
        center,
        yaw: normalize_yaw(angle),
        half_extents: [
            half[0].max(MIN_HALF_EXTENT),
            half[1].max(MIN_HALF_EXTENT),
            ((h_hi - h_lo) / 2.0).max(MIN_HALF_EXTENT),
        ],
        up,
    }
}
