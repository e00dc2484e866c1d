//! Ring recovery for ordered rotating-LiDAR scans.
//!
//! A scan stores one laser's revolution after another. Quadrants of
//! `(x, y)` are numbered 1..=4 counter-clockwise starting at +x/+y. The
//! quadrant of the first scan point is the start quadrant and quadrants are
//! ranked counter-clockwise from it. A revolution is complete, and the ring
//! id increments, when the tracked rank drops by two or more: 4 -> 1 for a
//! dense scan starting in quadrant 1, but also 3 -> 1 or 4 -> 2 when a ring
//! has no returns over part of its sweep. A drop of one is jitter at a
//! quadrant edge and is ignored.

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Quadrant 1..=4 of `(x, y)`, or `None` on an axis.
#[inline]
pub fn quadrant(x: f64, y: f64) -> Option<u8> {
    if x > 0.0 && y > 0.0 {
        Some(1)
    } else if x < 0.0 && y > 0.0 {
        Some(2)
    } else if x < 0.0 && y < 0.0 {
        Some(3)
    } else if x > 0.0 && y < 0.0 {
        Some(4)
    } else {
        None
    }
}

#[inline]
fn rank(q: u8, start: u8) -> u8 {
    (q + 4 - start) % 4
}

/// Ring id per point, in scan order.
///
/// Points lying exactly on an axis keep the previously tracked quadrant.
/// Fewer revolutions than `num_rings` is fine; more is a scan-format error.
pub fn ring_ids_by_quadrant(xs: &[f64], ys: &[f64], num_rings: usize) -> Result<Vec<u16>> {
    if num_rings == 0 {
        return Err(Error::Precondition("num_rings must be >= 1".into()));
    }
    if num_rings > u16::MAX as usize + 1 {
        return Err(Error::Precondition(format!(
            "num_rings {num_rings} exceeds the ring id range"
        )));
    }
    let start = xs
        .iter()
        .zip(ys)
        .find_map(|(&x, &y)| quadrant(x, y))
        .unwrap_or(1);

    let mut rings = Vec::with_capacity(xs.len());
    let mut ring = 0usize;
    let mut tracked = start;
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        if let Some(q) = quadrant(x, y) {
            if rank(q, start) + 2 <= rank(tracked, start) {
                ring += 1;
                if ring >= num_rings {
                    return Err(Error::ScanFormat(format!(
                        "more than {num_rings} revolutions detected (at point {i})"
                    )));
                }
            }
            tracked = q;
        }
        rings.push(ring as u16);
    }
    Ok(rings)
}

/// Returns the cloud with ring ids assigned from the quadrant sequence.
pub fn assign_rings(cloud: &PointCloud, num_rings: usize) -> Result<PointCloud> {
    let rings = ring_ids_by_quadrant(cloud.xs(), cloud.ys(), num_rings)?;
    cloud.clone().with_ring_ids(rings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::Point;
    use std::f64::consts::TAU;

    fn sweep(revolutions: usize, steps: usize, offset: f64) -> PointCloud {
        let mut pts = Vec::new();
        for _ in 0..revolutions {
            for k in 0..steps {
                let a = offset + (k as f64 + 0.5) * TAU / steps as f64;
                pts.push(Point::new(10.0 * a.cos(), 10.0 * a.sin(), -1.0, 0.5));
            }
        }
        PointCloud::from_points(pts).unwrap()
    }

    #[test]
    fn two_sweeps_two_rings() {
        let cloud = assign_rings(&sweep(2, 36, 0.0), 64).unwrap();
        let rings = cloud.ring_ids().unwrap();
        assert!(rings[..36].iter().all(|&r| r == 0));
        assert!(rings[36..].iter().all(|&r| r == 1));
    }

    #[test]
    fn sixty_four_revolutions() {
        let cloud = assign_rings(&sweep(64, 100, 0.0), 64).unwrap();
        assert_eq!(*cloud.ring_ids().unwrap().iter().max().unwrap(), 63);
    }

    #[test]
    fn surplus_revolutions_error() {
        assert!(matches!(
            assign_rings(&sweep(3, 20, 0.0), 2),
            Err(Error::ScanFormat(_))
        ));
    }

    #[test]
    fn rear_start_scans() {
        // revolutions starting at -pi, as in KITTI velodyne files
        let cloud = assign_rings(&sweep(3, 50, -std::f64::consts::PI), 64).unwrap();
        let rings = cloud.ring_ids().unwrap();
        for (i, &r) in rings.iter().enumerate() {
            assert_eq!(r as usize, i / 50);
        }
    }

    #[test]
    fn axis_points_inherit_quadrant() {
        // (10,0) sits on the axis between quadrant 4 and 1; it must not
        // trigger the boundary on its own.
        let pts = [
            (1.0, 1.0),
            (-1.0, 1.0),
            (-1.0, -1.0),
            (1.0, -1.0),
            (10.0, 0.0),
            (1.0, -1.0),
            (1.0, 1.0),
        ];
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let rings = ring_ids_by_quadrant(&xs, &ys, 4).unwrap();
        assert_eq!(rings, vec![0, 0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn partial_scan_is_allowed() {
        let cloud = assign_rings(&sweep(1, 10, 0.0), 64).unwrap();
        assert!(cloud.ring_ids().unwrap().iter().all(|&r| r == 0));
    }

    #[test]
    fn zero_rings_rejected() {
        assert!(ring_ids_by_quadrant(&[], &[], 0).is_err());
    }
}
