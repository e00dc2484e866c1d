//! Synthetic rotating-LiDAR scans with full ground truth.
//!
//! A multi-ring sensor at the origin casts one ray per (ring, azimuth step)
//! against a ground plane and upright primitives: boxes (cars, walls),
//! vertical cylinders (pedestrians, poles) and a box with a cylinder on top
//! (cyclists). The nearest hit, with optional Gaussian range noise, becomes
//! a point. Points are emitted ring by ring, azimuth increasing from +x, so
//! the output has the same ordering as a raw scan.

use std::f64::consts::TAU;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cloud::{ClassId, Point, PointCloud};
use crate::error::{Error, Result};
use crate::ground::PlaneModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundSpec {
    /// Height of the sensor above the ground along the ground normal.
    pub sensor_height: f64,
    /// Ground slope in degrees.
    pub tilt_deg: f64,
    /// Direction (degrees from +x) in which the ground rises.
    pub tilt_azimuth_deg: f64,
}

impl Default for GroundSpec {
    fn default() -> Self {
        Self {
            sensor_height: 1.73,
            tilt_deg: 0.0,
            tilt_azimuth_deg: 0.0,
        }
    }
}

impl GroundSpec {
    pub fn plane(&self) -> PlaneModel {
        let (t, a) = (self.tilt_deg.to_radians(), self.tilt_azimuth_deg.to_radians());
        PlaneModel {
            normal: [-t.sin() * a.cos(), -t.sin() * a.sin(), t.cos()],
            offset: self.sensor_height,
            segment_index: 0,
        }
    }

    /// Ground height at `(x, y)`.
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        let p = self.plane();
        -(p.offset + p.normal[0] * x + p.normal[1] * y) / p.normal[2]
    }

    fn slope(&self) -> f64 {
        self.tilt_deg.to_radians().tan().abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorModel {
    pub num_rings: usize,
    /// Elevation of ring 0, degrees.
    pub elevation_max_deg: f64,
    /// Elevation of the last ring, degrees.
    pub elevation_min_deg: f64,
    /// Rays per revolution.
    pub azimuth_steps: usize,
    pub min_range: f64,
    pub max_range: f64,
    /// Standard deviation of additive range noise, meters.
    pub range_noise: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            num_rings: 64,
            elevation_max_deg: -1.0,
            elevation_min_deg: -24.8,
            azimuth_steps: 1800,
            min_range: 1.0,
            max_range: 120.0,
            range_noise: 0.02,
        }
    }
}

impl SensorModel {
    pub fn elevation(&self, ring: usize) -> f64 {
        if self.num_rings == 1 {
            return self.elevation_max_deg.to_radians();
        }
        let step = (self.elevation_max_deg - self.elevation_min_deg) / (self.num_rings - 1) as f64;
        (self.elevation_max_deg - step * ring as f64).to_radians()
    }

    pub fn azimuth(&self, step: usize) -> f64 {
        (step as f64 + 0.5) * TAU / self.azimuth_steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Box {
        length: f64,
        width: f64,
        height: f64,
    },
    Cylinder {
        radius: f64,
        height: f64,
    },
    /// Bike body as a box with the rider as a cylinder standing on it.
    Cyclist {
        length: f64,
        width: f64,
        bike_height: f64,
        rider_radius: f64,
        rider_height: f64,
    },
}

impl Shape {
    fn footprint_radius(&self) -> f64 {
        match *self {
            Shape::Box { length, width, .. } => (length / 2.0).hypot(width / 2.0),
            Shape::Cylinder { radius, .. } => radius,
            Shape::Cyclist {
                length,
                width,
                rider_radius,
                ..
            } => (length / 2.0).hypot(width / 2.0).max(rider_radius),
        }
    }

    fn dims(&self) -> Vec<f64> {
        match *self {
            Shape::Box {
                length,
                width,
                height,
            } => vec![length, width, height],
            Shape::Cylinder { radius, height } => vec![radius, height],
            Shape::Cyclist {
                length,
                width,
                bike_height,
                rider_radius,
                rider_height,
            } => vec![length, width, bike_height, rider_radius, rider_height],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub class: ClassId,
    pub shape: Shape,
    pub x: f64,
    pub y: f64,
    /// Heading about the vertical axis, radians.
    pub yaw: f64,
    /// Gap between the highest ground point under the footprint and the
    /// object's bottom.
    #[serde(default)]
    pub clearance: f64,
    #[serde(default = "default_intensity")]
    pub intensity: f64,
}

fn default_intensity() -> f64 {
    0.6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub ground: GroundSpec,
    pub sensor: SensorModel,
    pub objects: Vec<ObjectSpec>,
    pub rng_seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            ground: GroundSpec::default(),
            sensor: SensorModel::default(),
            objects: Vec::new(),
            rng_seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let g = &self.ground;
        if !(g.sensor_height > 0.0 && g.sensor_height.is_finite()) {
            return Err(Error::Scene("sensor_height must be > 0".into()));
        }
        if !(g.tilt_deg.abs() < 45.0) || !g.tilt_azimuth_deg.is_finite() {
            return Err(Error::Scene("ground tilt must be below 45 degrees".into()));
        }
        let s = &self.sensor;
        if s.num_rings < 1 || s.num_rings > u16::MAX as usize + 1 {
            return Err(Error::Scene("num_rings out of range".into()));
        }
        if s.azimuth_steps < 1 {
            return Err(Error::Scene("azimuth_steps must be >= 1".into()));
        }
        if !(s.elevation_max_deg.abs() < 90.0 && s.elevation_min_deg.abs() < 90.0)
            || s.elevation_min_deg > s.elevation_max_deg
        {
            return Err(Error::Scene("elevations must satisfy -90 < min <= max < 90".into()));
        }
        if !(s.min_range >= 0.0 && s.max_range > s.min_range && s.max_range.is_finite()) {
            return Err(Error::Scene("ranges must satisfy 0 <= min < max".into()));
        }
        if !(s.range_noise >= 0.0 && s.range_noise.is_finite()) {
            return Err(Error::Scene("range_noise must be >= 0".into()));
        }
        for (k, o) in self.objects.iter().enumerate() {
            if !o.shape.dims().iter().all(|d| *d > 0.0 && d.is_finite()) {
                return Err(Error::Scene(format!("object {k}: dimensions must be > 0")));
            }
            if !(o.x.is_finite() && o.y.is_finite() && o.yaw.is_finite()) {
                return Err(Error::Scene(format!("object {k}: non-finite pose")));
            }
            if !(o.clearance >= 0.0) || !o.clearance.is_finite() {
                return Err(Error::Scene(format!("object {k} is below the ground")));
            }
            if !(0.0..=1.0).contains(&o.intensity) {
                return Err(Error::Scene(format!("object {k}: intensity outside [0, 1]")));
            }
            let r = o.shape.footprint_radius();
            if o.x.hypot(o.y) <= r {
                return Err(Error::Scene(format!("object {k} contains the sensor")));
            }
            for (j, other) in self.objects[..k].iter().enumerate() {
                let gap = (o.x - other.x).hypot(o.y - other.y);
                if gap <= r + other.shape.footprint_radius() {
                    return Err(Error::Scene(format!("objects {j} and {k} interpenetrate")));
                }
            }
        }
        Ok(())
    }
}

/// Generated scan with ground truth aligned to the cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    /// Cloud in scan order, carrying ring ids and labels.
    pub cloud: PointCloud,
    pub labels: Vec<ClassId>,
    pub ring_ids: Vec<u16>,
    pub ground_mask: Vec<bool>,
    /// 0 for ground, `k + 1` for object `k`.
    pub object_ids: Vec<u32>,
    pub ground_plane: PlaneModel,
}

/// An object placed in the world: vertical extent resolved against the
/// ground.
#[derive(Debug, Clone, Copy)]
pub struct Placed {
    pub spec: ObjectSpec,
    pub bottom: f64,
}

impl Placed {
    fn new(spec: ObjectSpec, ground: &GroundSpec) -> Self {
        let support = match spec.shape {
            Shape::Box { length, width, .. } | Shape::Cyclist { length, width, .. } => {
                let (s, c) = spec.yaw.sin_cos();
                [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
                    .iter()
                    .map(|&(a, b)| {
                        let lx = a * length / 2.0;
                        let ly = b * width / 2.0;
                        ground.height_at(spec.x + c * lx - s * ly, spec.y + s * lx + c * ly)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            Shape::Cylinder { radius, .. } => {
                ground.height_at(spec.x, spec.y) + radius * ground.slope()
            }
        };
        Self {
            spec,
            bottom: support + spec.clearance,
        }
    }

    /// Ray parameter of the first hit, for a ray from the origin.
    pub fn intersect(&self, dir: [f64; 3]) -> Option<f64> {
        let o = &self.spec;
        // ray in the object frame: origin at footprint center, bottom at z=0
        let (s, c) = o.yaw.sin_cos();
        let origin = [-(c * o.x + s * o.y), -(-s * o.x + c * o.y), -self.bottom];
        let d = [c * dir[0] + s * dir[1], -s * dir[0] + c * dir[1], dir[2]];
        match o.shape {
            Shape::Box {
                length,
                width,
                height,
            } => ray_box(origin, d, [length / 2.0, width / 2.0], 0.0, height),
            Shape::Cylinder { radius, height } => ray_cylinder(origin, d, radius, 0.0, height),
            Shape::Cyclist {
                length,
                width,
                bike_height,
                rider_radius,
                rider_height,
            } => {
                let bike = ray_box(origin, d, [length / 2.0, width / 2.0], 0.0, bike_height);
                let rider = ray_cylinder(origin, d, rider_radius, bike_height, bike_height + rider_height);
                match (bike, rider) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                }
            }
        }
    }
}

/// Slab test against `[-h0, h0] x [-h1, h1] x [z0, z1]`; entry point only.
fn ray_box(o: [f64; 3], d: [f64; 3], half: [f64; 2], z0: f64, z1: f64) -> Option<f64> {
    let lo = [-half[0], -half[1], z0];
    let hi = [half[0], half[1], z1];
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for k in 0..3 {
        if d[k] == 0.0 {
            if o[k] < lo[k] || o[k] > hi[k] {
                return None;
            }
        } else {
            let a = (lo[k] - o[k]) / d[k];
            let b = (hi[k] - o[k]) / d[k];
            t_enter = t_enter.max(a.min(b));
            t_exit = t_exit.min(a.max(b));
        }
    }
    (t_enter <= t_exit && t_enter > 0.0).then_some(t_enter)
}

/// Vertical cylinder of `radius` about the local z axis between `z0` and
/// `z1`, caps included.
fn ray_cylinder(o: [f64; 3], d: [f64; 3], radius: f64, z0: f64, z1: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut consider = |t: f64| {
        if t > 0.0 && best.map_or(true, |b| t < b) {
            best = Some(t);
        }
    };
    let a = d[0] * d[0] + d[1] * d[1];
    if a > 0.0 {
        let b = 2.0 * (o[0] * d[0] + o[1] * d[1]);
        let c = o[0] * o[0] + o[1] * o[1] - radius * radius;
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let t = (-b - disc.sqrt()) / (2.0 * a);
            let z = o[2] + t * d[2];
            if z >= z0 && z <= z1 {
                consider(t);
            }
        }
    }
    if d[2] != 0.0 {
        for zc in [z0, z1] {
            let t = (zc - o[2]) / d[2];
            let x = o[0] + t * d[0];
            let y = o[1] + t * d[1];
            if x * x + y * y <= radius * radius {
                consider(t);
            }
        }
    }
    best
}

pub fn generate_synthetic_scene(spec: &SceneSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let sensor = &spec.sensor;
    let plane = spec.ground.plane();
    let placed: Vec<Placed> = spec
        .objects
        .iter()
        .map(|o| Placed::new(*o, &spec.ground))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let noise = Normal::new(0.0, sensor.range_noise).map_err(|e| Error::Scene(e.to_string()))?;
    let trig: Vec<(f64, f64)> = (0..sensor.azimuth_steps)
        .map(|k| sensor.azimuth(k).sin_cos())
        .collect();

    let capacity = sensor.num_rings * sensor.azimuth_steps;
    let mut cloud = PointCloud::with_capacity(capacity);
    let mut labels = Vec::with_capacity(capacity);
    let mut ring_ids = Vec::with_capacity(capacity);
    let mut ground_mask = Vec::with_capacity(capacity);
    let mut object_ids = Vec::with_capacity(capacity);

    for ring in 0..sensor.num_rings {
        let (se, ce) = sensor.elevation(ring).sin_cos();
        for &(sa, ca) in &trig {
            let dir = [ce * ca, ce * sa, se];
            let mut hit: Option<(f64, u32)> = None;
            let nd = plane.normal[0] * dir[0] + plane.normal[1] * dir[1] + plane.normal[2] * dir[2];
            if nd < 0.0 {
                hit = Some((-plane.offset / nd, 0));
            }
            for (k, obj) in placed.iter().enumerate() {
                if let Some(t) = obj.intersect(dir) {
                    if hit.map_or(true, |(bt, _)| t < bt) {
                        hit = Some((t, k as u32 + 1));
                    }
                }
            }
            let Some((t, id)) = hit else { continue };
            if t < sensor.min_range || t > sensor.max_range {
                continue;
            }
            let range = if sensor.range_noise > 0.0 {
                t + noise.sample(&mut rng)
            } else {
                t
            };
            if range <= 0.0 {
                continue;
            }
            let (class, intensity) = if id == 0 {
                (ClassId::Background, rng.random_range(0.1..0.4))
            } else {
                let o = &placed[id as usize - 1].spec;
                (o.class, o.intensity)
            };
            cloud.push(Point::new(dir[0] * range, dir[1] * range, dir[2] * range, intensity));
            labels.push(class);
            ring_ids.push(ring as u16);
            ground_mask.push(id == 0);
            object_ids.push(id);
        }
    }
    let cloud = cloud
        .with_ring_ids(ring_ids.clone())?
        .with_labels(labels.clone())?;
    Ok(SyntheticScene {
        cloud,
        labels,
        ring_ids,
        ground_mask,
        object_ids,
        ground_plane: plane,
    })
}

/// Knobs for [`random_scene_spec`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSceneOptions {
    pub objects: RangeInclusive<usize>,
    /// Background structures (walls, poles) added on top of `objects`.
    pub clutter: RangeInclusive<usize>,
    pub min_distance: f64,
    pub max_distance: f64,
    /// Free space kept between object footprints.
    pub separation: f64,
    pub clearance: RangeInclusive<f64>,
    pub ground: GroundSpec,
    pub sensor: SensorModel,
}

impl Default for RandomSceneOptions {
    fn default() -> Self {
        Self {
            objects: 3..=10,
            clutter: 0..=2,
            min_distance: 5.0,
            max_distance: 30.0,
            separation: 2.0,
            clearance: 0.0..=0.0,
            ground: GroundSpec::default(),
            sensor: SensorModel::default(),
        }
    }
}

fn random_object<R: Rng>(rng: &mut R, class: ClassId) -> Shape {
    match class {
        ClassId::Car => Shape::Box {
            length: rng.random_range(3.6..4.8),
            width: rng.random_range(1.6..1.95),
            height: rng.random_range(1.4..1.7),
        },
        ClassId::Pedestrian => Shape::Cylinder {
            radius: rng.random_range(0.25..0.35),
            height: rng.random_range(1.55..1.9),
        },
        ClassId::Cyclist => Shape::Cyclist {
            length: rng.random_range(1.6..1.9),
            width: rng.random_range(0.45..0.6),
            bike_height: rng.random_range(0.9..1.1),
            rider_radius: rng.random_range(0.22..0.28),
            rider_height: rng.random_range(0.7..0.85),
        },
        ClassId::Background => {
            if rng.random_bool(0.5) {
                Shape::Box {
                    length: rng.random_range(8.0..15.0),
                    width: rng.random_range(0.3..0.6),
                    height: rng.random_range(2.5..4.0),
                }
            } else {
                Shape::Cylinder {
                    radius: rng.random_range(0.08..0.15),
                    height: rng.random_range(3.0..6.0),
                }
            }
        }
    }
}

/// Random non-overlapping scene: objects drawn from car, pedestrian and
/// cyclist, plus background clutter, at random poses in an annulus around
/// the sensor.
pub fn random_scene_spec(seed: u64, opts: &RandomSceneOptions) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f5c_e4e5);
    let n_obj = rng.random_range(opts.objects.clone());
    let n_clutter = rng.random_range(opts.clutter.clone());
    let mut objects: Vec<ObjectSpec> = Vec::new();
    let classes = (0..n_obj)
        .map(|_| ClassId::FOREGROUND[rng.random_range(0..3)])
        .chain((0..n_clutter).map(|_| ClassId::Background))
        .collect::<Vec<_>>();
    for class in classes {
        let shape = random_object(&mut rng, class);
        let r = shape.footprint_radius();
        // rejection sampling for a free spot
        for _ in 0..200 {
            let dist = rng.random_range(opts.min_distance..opts.max_distance);
            let az = rng.random_range(0.0..TAU);
            let (x, y) = (dist * az.cos(), dist * az.sin());
            if x.hypot(y) <= r + 1.0 {
                continue;
            }
            let free = objects.iter().all(|o| {
                (o.x - x).hypot(o.y - y) > r + o.shape.footprint_radius() + opts.separation
            });
            if free {
                let (lo, hi) = (*opts.clearance.start(), *opts.clearance.end());
                let clearance = if hi > lo { rng.random_range(lo..hi) } else { lo };
                objects.push(ObjectSpec {
                    class,
                    shape,
                    x,
                    y,
                    yaw: rng.random_range(0.0..TAU),
                    clearance,
                    intensity: rng.random_range(0.3..0.9),
                });
                break;
            }
        }
    }
    SceneSpec {
        ground: opts.ground,
        sensor: opts.sensor,
        objects,
        rng_seed: seed,
    }
}
