//! Columnar point-cloud storage.
//!
//! Coordinates are kept as `f64` columns. Values loaded from the 32-bit
//! on-disk format widen exactly, so a load/save cycle is lossless.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single return in the sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

impl Point {
    pub fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Self { x, y, z, intensity }
    }

    #[inline]
    pub fn xyz(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Semantic class of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassId {
    #[default]
    Background = 0,
    Car = 1,
    Pedestrian = 2,
    Cyclist = 3,
}

impl ClassId {
    pub const ALL: [ClassId; 4] = [
        ClassId::Background,
        ClassId::Car,
        ClassId::Pedestrian,
        ClassId::Cyclist,
    ];

    pub const FOREGROUND: [ClassId; 3] = [ClassId::Car, ClassId::Pedestrian, ClassId::Cyclist];

    pub fn from_u8(value: u8) -> Option<Self> {
        match value {
            0 => Some(ClassId::Background),
            1 => Some(ClassId::Car),
            2 => Some(ClassId::Pedestrian),
            3 => Some(ClassId::Cyclist),
            _ => None,
        }
    }

    #[inline]
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn is_foreground(self) -> bool {
        self != ClassId::Background
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassId::Background => "background",
            ClassId::Car => "car",
            ClassId::Pedestrian => "pedestrian",
            ClassId::Cyclist => "cyclist",
        }
    }
}

/// Ordered point set with optional per-point ring ids and class labels.
///
/// All columns have the same length. Scan order is the storage order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    intensity: Vec<f64>,
    ring_ids: Option<Vec<u16>>,
    labels: Option<Vec<ClassId>>,
}

impl PointCloud {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
            intensity: Vec::with_capacity(n),
            ring_ids: None,
            labels: None,
        }
    }

    /// Builds a cloud from points, rejecting non-finite coordinates and
    /// clamping intensity into `[0, 1]`.
    pub fn from_points<I: IntoIterator<Item = Point>>(points: I) -> Result<Self> {
        let mut cloud = Self::new();
        for (i, p) in points.into_iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite() && p.intensity.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
            cloud.push(p);
        }
        Ok(cloud)
    }

    /// Appends a point. Intensity is clamped to `[0, 1]`; coordinates are
    /// assumed finite.
    pub fn push(&mut self, p: Point) {
        debug_assert!(p.x.is_finite() && p.y.is_finite() && p.z.is_finite());
        self.x.push(p.x);
        self.y.push(p.y);
        self.z.push(p.z);
        self.intensity.push(p.intensity.clamp(0.0, 1.0));
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.x.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> Point {
        Point {
            x: self.x[i],
            y: self.y[i],
            z: self.z[i],
            intensity: self.intensity[i],
        }
    }

    #[inline]
    pub fn xyz(&self, i: usize) -> [f64; 3] {
        [self.x[i], self.y[i], self.z[i]]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    pub fn xs(&self) -> &[f64] {
        &self.x
    }

    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    pub fn zs(&self) -> &[f64] {
        &self.z
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensity
    }

    pub fn ring_ids(&self) -> Option<&[u16]> {
        self.ring_ids.as_deref()
    }

    pub fn labels(&self) -> Option<&[ClassId]> {
        self.labels.as_deref()
    }

    pub fn set_ring_ids(&mut self, rings: Vec<u16>) -> Result<()> {
        if rings.len() != self.len() {
            return Err(Error::Alignment {
                expected: self.len(),
                found: rings.len(),
            });
        }
        self.ring_ids = Some(rings);
        Ok(())
    }

    pub fn with_ring_ids(mut self, rings: Vec<u16>) -> Result<Self> {
        self.set_ring_ids(rings)?;
        Ok(self)
    }

    pub fn set_labels(&mut self, labels: Vec<ClassId>) -> Result<()> {
        if labels.len() != self.len() {
            return Err(Error::Alignment {
                expected: self.len(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(())
    }

    pub fn with_labels(mut self, labels: Vec<ClassId>) -> Result<Self> {
        self.set_labels(labels)?;
        Ok(self)
    }

    /// Copies the given points, in the given order, into a new cloud.
    /// Ring ids and labels are carried along when present.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let pick = |col: &[f64]| indices.iter().map(|&i| col[i]).collect::<Vec<_>>();
        PointCloud {
            x: pick(&self.x),
            y: pick(&self.y),
            z: pick(&self.z),
            intensity: pick(&self.intensity),
            ring_ids: self
                .ring_ids
                .as_ref()
                .map(|r| indices.iter().map(|&i| r[i]).collect()),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }
}
