mod common;

use std::f64::consts::TAU;

use proptest::prelude::*;
use rand::Rng;
use ringseg::cloud::{Point, PointCloud};
use ringseg::eval::{generate_synthetic_scene, random_scene_spec, RandomSceneOptions};
use ringseg::rings::quadrant;
use ringseg::{assign_rings, ring_ids_by_quadrant, Error};

/// `revolutions` sweeps of `steps` rays each, starting at the quadrant edge
/// `start_edge * 90` degrees, with some rays dropped (never the first).
fn sweeps(revolutions: usize, steps: usize, start_edge: u8, drop: f64, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<u16>) {
    let offset = start_edge as f64 * TAU / 4.0;
    let mut rng = common::rng(seed);
    let (mut xs, mut ys, mut truth) = (Vec::new(), Vec::new(), Vec::new());
    for r in 0..revolutions {
        for k in 0..steps {
            if (r, k) != (0, 0) && rng.random_bool(drop) {
                continue;
            }
            let a = offset + (k as f64 + 0.5) * TAU / steps as f64;
            let range = rng.random_range(2.0..80.0);
            xs.push(range * a.cos());
            ys.push(range * a.sin());
            truth.push(r as u16);
        }
    }
    (xs, ys, truth)
}

#[test]
fn hdl64_shaped_cloud_has_64_rings() {
    let (xs, ys, truth) = sweeps(64, 2000, 0, 0.0, 1);
    let rings = ring_ids_by_quadrant(&xs, &ys, 64).unwrap();
    assert_eq!(rings, truth);
    assert_eq!(*rings.iter().max().unwrap(), 63);
}

#[test]
fn one_revolution_too_many_is_a_scan_error() {
    let (xs, ys, _) = sweeps(65, 200, 2, 0.0, 2);
    assert!(matches!(ring_ids_by_quadrant(&xs, &ys, 64), Err(Error::ScanFormat(_))));
}

#[test]
fn generator_ring_ids_recovered_on_default_sensor() {
    for seed in [3u64, 17, 99] {
        let scene = generate_synthetic_scene(&random_scene_spec(seed, &RandomSceneOptions::default())).unwrap();
        let bare = PointCloud::from_points(scene.cloud.points()).unwrap();
        let with = assign_rings(&bare, 64).unwrap();
        assert_eq!(with.ring_ids().unwrap(), scene.ring_ids.as_slice(), "seed {seed}");
        assert_eq!(*scene.ring_ids.iter().max().unwrap(), 63);
    }
}

#[test]
fn axis_points_inherit_previous_quadrant() {
    // a point on +x after quadrant 4 must not open a new ring
    let xs = [1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
    let ys = [1.0, 1.0, -1.0, -1.0, 0.0, 1.0];
    assert_eq!(ring_ids_by_quadrant(&xs, &ys, 4).unwrap(), vec![0, 0, 0, 0, 0, 1]);
    // leading axis points belong to ring 0
    let xs = [0.0, 1.0, -1.0];
    let ys = [0.0, 1.0, 1.0];
    assert_eq!(ring_ids_by_quadrant(&xs, &ys, 1).unwrap(), vec![0, 0, 0]);
}

#[test]
fn empty_cloud_and_bad_ring_count() {
    assert!(ring_ids_by_quadrant(&[], &[], 64).unwrap().is_empty());
    assert!(ring_ids_by_quadrant(&[1.0], &[1.0], 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generator_ring_ids_recovered(seed in any::<u64>(),
                                    rings in 8usize..=64,
                                    steps in 360usize..1200,
                                    tilt in 0.0f64..0.5,
                                    tilt_az in 0.0f64..360.0) {
        let mut opts = RandomSceneOptions::default();
        opts.sensor.num_rings = rings;
        opts.sensor.azimuth_steps = steps;
        opts.ground.tilt_deg = tilt;
        opts.ground.tilt_azimuth_deg = tilt_az;
        let scene = generate_synthetic_scene(&random_scene_spec(seed, &opts)).unwrap();
        let got = ring_ids_by_quadrant(scene.cloud.xs(), scene.cloud.ys(), rings).unwrap();
        prop_assert_eq!(got, scene.ring_ids);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sweeps_with_gaps_recovered(revs in 1usize..20,
                                  steps in 8usize..400,
                                  edge in 0u8..4,
                                  drop in 0.0f64..0.3,
                                  seed in any::<u64>()) {
        let (xs, ys, truth) = sweeps(revs, steps, edge, drop, seed);
        // a revolution is visible when the next ring starts at least two
        // quadrants before the previous one ended
        let start = quadrant(xs[0], ys[0]).unwrap();
        let rank = |k: usize| (quadrant(xs[k], ys[k]).unwrap() + 4 - start) % 4;
        let visible = (1..xs.len()).all(|k| truth[k] == truth[k - 1] || rank(k) + 2 <= rank(k - 1));
        prop_assume!(visible);
        let got = ring_ids_by_quadrant(&xs, &ys, revs).unwrap();
        prop_assert_eq!(got, truth);
    }

    #[test]
    fn ring_ids_ignore_range(revs in 1usize..10,
                             steps in 8usize..200,
                             seed in any::<u64>(),
                             scales in prop::collection::vec(0.01f64..100.0, 1..64)) {
        let (xs, ys, _) = sweeps(revs, steps, 1, 0.1, seed);
        let base = ring_ids_by_quadrant(&xs, &ys, revs).unwrap();
        let sx: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * scales[i % scales.len()]).collect();
        let sy: Vec<f64> = ys.iter().enumerate().map(|(i, y)| y * scales[i % scales.len()]).collect();
        prop_assert_eq!(ring_ids_by_quadrant(&sx, &sy, revs).unwrap(), base.clone());
        prop_assert_eq!(ring_ids_by_quadrant(&xs, &ys, revs).unwrap(), base);
    }

    #[test]
    fn ring_ids_non_decreasing(revs in 1usize..10, steps in 4usize..200, seed in any::<u64>()) {
        let (xs, ys, _) = sweeps(revs, steps, 3, 0.2, seed);
        let pts: Vec<Point> = xs.iter().zip(&ys).map(|(&x, &y)| Point::new(x, y, 0.0, 0.0)).collect();
        let cloud = assign_rings(&PointCloud::from_points(pts).unwrap(), revs).unwrap();
        let r = cloud.ring_ids().unwrap();
        prop_assert!(r.windows(2).all(|w| w[0] <= w[1]));
    }
}
