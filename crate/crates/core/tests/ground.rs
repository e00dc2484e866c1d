mod common;

use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use ringseg::cloud::{Point, PointCloud};
use ringseg::eval::{generate_synthetic_scene, random_scene_spec, RandomSceneOptions};
use ringseg::ground::*;

/// Tilted ground with Gaussian noise plus a few elevated blobs.
fn ground_cloud(seed: u64, noise: f64) -> PointCloud {
    let mut rng = common::rng(seed);
    let n_ground = rng.random_range(200..1500);
    let (a, b) = (rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
    let c = rng.random_range(-2.0..-1.0);
    let half = rng.random_range(10.0..50.0);
    let normal = Normal::new(0.0, noise.max(1e-12)).unwrap();
    let mut pts = Vec::new();
    for _ in 0..n_ground {
        let (x, y) = (rng.random_range(-half..half), rng.random_range(-half..half));
        let e = if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 };
        pts.push(Point::new(x, y, a * x + b * y + c + e, 0.2));
    }
    for _ in 0..rng.random_range(0..6) {
        let (cx, cy) = (rng.random_range(-half..half), rng.random_range(-half..half));
        let lift = rng.random_range(0.6..3.0);
        for _ in 0..rng.random_range(5..80) {
            let (x, y) = (cx + rng.random_range(-1.0..1.0), cy + rng.random_range(-1.0..1.0));
            pts.push(Point::new(x, y, a * x + b * y + c + lift + rng.random_range(0.0..1.5), 0.6));
        }
    }
    PointCloud::from_points(pts).unwrap()
}

fn fit_mask(cloud: &PointCloud, params: &GroundParams) -> GroundFit {
    let seg = split_segments(cloud, params.n_seg).unwrap();
    ground_plane_fit(cloud, &seg, params).unwrap()
}

fn angle_deg(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).abs();
    dot.min(1.0).acos().to_degrees()
}

#[test]
fn default_parameters() {
    let p = GroundParams::default();
    assert_eq!((p.n_seg, p.n_iter, p.n_lpr), (3, 3, 20));
    assert_eq!((p.th_seeds, p.th_dist), (0.4, 0.3));
}

#[test]
fn equal_width_partition_on_80m_scene() {
    let mut rng = common::rng(80);
    let xs: Vec<f64> = (0..5000).map(|_| rng.random_range(-40.0..40.0)).collect();
    let pts = xs.iter().map(|&x| Point::new(x, 0.0, -1.7, 0.0));
    let cloud = PointCloud::from_points(pts).unwrap();
    let seg = split_segments(&cloud, 3).unwrap();

    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let part = SegmentPartition::new(&xs, 3).unwrap();
    assert!((part.width() - (hi - lo) / 3.0).abs() < 1e-9);
    let edges = [lo + (hi - lo) / 3.0, lo + 2.0 * (hi - lo) / 3.0];
    for (i, &x) in xs.iter().enumerate() {
        let expect = edges.iter().filter(|&&e| x > e).count();
        assert_eq!(seg[i], expect, "x = {x}");
    }
    let mut counts = [0usize; 3];
    seg.iter().for_each(|&s| counts[s] += 1);
    assert!(counts.iter().all(|&c| c > 1500));
}

#[test]
fn small_partition_cases() {
    let cloud = PointCloud::from_points([0.0, 5.0, 10.0].map(|x| Point::new(x, 0.0, 0.0, 0.0))).unwrap();
    assert_eq!(split_segments(&cloud, 2).unwrap(), vec![0, 0, 1]);
    assert_eq!(split_segments(&cloud, 1).unwrap(), vec![0, 0, 0]);
    assert!(split_segments(&PointCloud::new(), 3).unwrap().is_empty());
}

#[test]
fn plane_fit_matches_full_eigensolve() {
    let mut rng = common::rng(500);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let (a, b, c) = (0.08, -0.05, -1.6);
    let pts: Vec<[f64; 3]> = (0..500)
        .map(|_| {
            let (x, y) = (rng.random_range(-20.0..20.0), rng.random_range(-10.0..10.0));
            [x, y, a * x + b * y + c + noise.sample(&mut rng)]
        })
        .collect();
    let plane = fit_plane(pts.iter().copied()).unwrap();
    let (n_ref, d_ref) = common::tls_plane(&pts);
    assert!(angle_deg(plane.normal, n_ref) < 0.5);
    assert!(angle_deg(plane.normal, n_ref) < 1e-6);
    assert!((plane.offset - d_ref).abs() < 1e-6);
    let norm = plane.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-9 && plane.normal[2] > 0.0);
    let truth = [-a, -b, 1.0];
    assert!(angle_deg(plane.normal, truth) < 0.5);
}

#[test]
fn fewer_than_three_points_is_degenerate() {
    assert!(fit_plane([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).is_err());
    assert!(fit_plane([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0]]).is_err());
}

#[test]
fn mask_matches_generator_away_from_the_band() {
    let params = GroundParams::default();
    for seed in 0..4u64 {
        let opts = RandomSceneOptions {
            clearance: 0.5..=1.0,
            ..RandomSceneOptions::default()
        };
        let scene = generate_synthetic_scene(&random_scene_spec(seed, &opts)).unwrap();
        let fit = fit_mask(&scene.cloud, &params);
        let mut checked = 0;
        for i in 0..scene.cloud.len() {
            if scene.ground_plane.signed_distance(scene.cloud.xyz(i)).abs() > params.th_dist {
                assert_eq!(fit.mask[i], scene.ground_mask[i], "seed {seed} point {i}");
                checked += 1;
            }
        }
        assert!(checked > 500);
    }
}

#[test]
fn empty_segment_warns_without_failing() {
    let cloud = PointCloud::from_points((0..50).map(|k| Point::new(k as f64 * 0.1, (k % 7) as f64, -1.7, 0.0))).unwrap();
    let segments = vec![0; cloud.len()];
    let params = GroundParams::default();
    let fit = ground_plane_fit(&cloud, &segments, &params).unwrap();
    assert_eq!(fit.mask.len(), 50);
    assert_eq!(fit.warnings.iter().map(|w| w.segment_index).collect::<Vec<_>>(), vec![1, 2]);
    assert!(fit.plane_near(2).is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seeds_match_direct_rule(heights in prop::collection::vec(-5.0f64..5.0, 0..300),
                               n_lpr in 1usize..40,
                               th in 0.01f64..1.0) {
        let got = extract_initial_seeds(&heights, n_lpr, th);
        let mut sorted = heights.clone();
        sorted.sort_by(f64::total_cmp);
        let k = n_lpr.min(sorted.len());
        let expect: Vec<usize> = if k == 0 {
            Vec::new()
        } else {
            let mean = sorted[..k].iter().sum::<f64>() / k as f64;
            (0..heights.len()).filter(|&i| heights[i] < mean + th).collect()
        };
        prop_assert_eq!(got, expect);
    }

    #[test]
    fn mask_length_matches_cloud(seed in any::<u64>(), n_seg in 1usize..6) {
        let cloud = ground_cloud(seed, 0.02);
        let params = GroundParams { n_seg, ..GroundParams::default() };
        let fit = fit_mask(&cloud, &params);
        prop_assert_eq!(fit.mask.len(), cloud.len());
        prop_assert_eq!(fit.planes.len(), n_seg);
        for p in fit.planes.iter().flatten() {
            let norm = p.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-9 && p.normal[2] > 0.0);
        }
    }

    #[test]
    fn horizontal_translation_keeps_mask(seed in any::<u64>(), dx in -200i32..200, dy in -200i32..200) {
        let cloud = ground_cloud(seed, 0.02);
        let (dx, dy) = (dx as f64 * 0.25, dy as f64 * 0.25);
        let moved = PointCloud::from_points(cloud.points().map(|p| Point::new(p.x + dx, p.y + dy, p.z, p.intensity))).unwrap();
        let params = GroundParams::default();
        let a = fit_mask(&cloud, &params);
        let b = fit_mask(&moved, &params);
        prop_assert_eq!(a.mask, b.mask);
    }

    #[test]
    fn high_point_never_flips_mask(seed in any::<u64>(), pick in any::<prop::sample::Index>(), lift in 0.5f64..20.0) {
        let cloud = ground_cloud(seed, 0.02);
        let params = GroundParams::default();
        let before = fit_mask(&cloud, &params);
        let top = cloud.zs().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let host = cloud.point(pick.index(cloud.len()));
        let mut grown = cloud.clone();
        grown.push(Point::new(host.x, host.y, top + params.th_dist + lift, 0.5));
        let after = fit_mask(&grown, &params);
        prop_assert_eq!(&after.mask[..cloud.len()], before.mask.as_slice());
        prop_assert!(!after.mask[cloud.len()]);
    }

    #[test]
    fn refit_rms_does_not_grow_on_noiseless_plane(seed in any::<u64>()) {
        let cloud = ground_cloud(seed, 0.0);
        let params = GroundParams { n_iter: 4, ..GroundParams::default() };
        let idx: Vec<usize> = (0..cloud.len()).collect();
        let fit = fit_segment(&cloud, &idx, 0, &params).unwrap();
        let h = &fit.rms_history;
        prop_assert_eq!(h.len(), 4);
        prop_assert!(h[h.len() - 1] <= h[h.len() - 2] + 1e-12, "{:?}", h);
    }
}
