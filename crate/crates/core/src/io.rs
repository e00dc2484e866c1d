//! Binary file formats.
//!
//! * point cloud: little-endian records of four `f32` (x, y, z, intensity),
//!   byte-compatible with KITTI velodyne `.bin` files
//! * labels: one `u8` class id per point
//! * cluster ids: one little-endian `u32` per point, 0 = background
//! * ring ids: one little-endian `u16` per point
//! * ground mask: one `u8` per point, 1 = ground

use std::fs;
use std::path::Path;

use crate::cloud::{ClassId, Point, PointCloud};
use crate::error::{Error, Result};

pub const POINT_RECORD_BYTES: usize = 16;

pub fn decode_point_cloud(bytes: &[u8]) -> Result<PointCloud> {
    if bytes.len() % POINT_RECORD_BYTES != 0 {
        return Err(Error::Malformed(format!(
            "point cloud length {} is not a multiple of {POINT_RECORD_BYTES}",
            bytes.len()
        )));
    }
    let n = bytes.len() / POINT_RECORD_BYTES;
    let mut cloud = PointCloud::with_capacity(n);
    for (index, rec) in bytes.chunks_exact(POINT_RECORD_BYTES).enumerate() {
        let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap());
        let (x, y, z, i) = (f(0), f(1), f(2), f(3));
        if !(x.is_finite() && y.is_finite() && z.is_finite() && i.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        cloud.push(Point::new(x as f64, y as f64, z as f64, i as f64));
    }
    Ok(cloud)
}

/// Encodes coordinates and intensity as `f32`. Values that are not exactly
/// representable in single precision are rounded.
pub fn encode_point_cloud(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * POINT_RECORD_BYTES);
    for p in cloud.points() {
        for v in [p.x, p.y, p.z, p.intensity] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn load_point_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_point_cloud(&bytes)
}

pub fn save_point_cloud(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_point_cloud(cloud)).map_err(|e| Error::io(path, e))
}

pub fn decode_labels(bytes: &[u8], expected_len: usize) -> Result<Vec<ClassId>> {
    if bytes.len() != expected_len {
        return Err(Error::Alignment {
            expected: expected_len,
            found: bytes.len(),
        });
    }
    bytes
        .iter()
        .enumerate()
        .map(|(index, &value)| ClassId::from_u8(value).ok_or(Error::InvalidClass { index, value }))
        .collect()
}

pub fn encode_labels(labels: &[ClassId]) -> Vec<u8> {
    labels.iter().map(|c| c.as_u8()).collect()
}

pub fn load_labels(path: impl AsRef<Path>, expected_len: usize) -> Result<Vec<ClassId>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_labels(&bytes, expected_len)
}

pub fn save_labels(path: impl AsRef<Path>, labels: &[ClassId]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_labels(labels)).map_err(|e| Error::io(path, e))
}

pub fn save_cluster_ids(path: impl AsRef<Path>, ids: &[u32]) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = ids.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_cluster_ids(path: impl AsRef<Path>, expected_len: usize) -> Result<Vec<u32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected_len * 4 {
        return Err(Error::Alignment {
            expected: expected_len,
            found: bytes.len() / 4,
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn save_ring_ids(path: impl AsRef<Path>, rings: &[u16]) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = rings.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_ring_ids(path: impl AsRef<Path>, expected_len: usize) -> Result<Vec<u16>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected_len * 2 {
        return Err(Error::Alignment {
            expected: expected_len,
            found: bytes.len() / 2,
        });
    }
    Ok(bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn save_mask(path: impl AsRef<Path>, mask: &[bool]) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = mask.iter().map(|&b| b as u8).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_mask(path: impl AsRef<Path>, expected_len: usize) -> Result<Vec<bool>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected_len {
        return Err(Error::Alignment {
            expected: expected_len,
            found: bytes.len(),
        });
    }
    Ok(bytes.into_iter().map(|b| b != 0).collect())
}
