mod common;

use proptest::prelude::*;
use rand::Rng;
use robust_d2d::channel::{ChannelSample, ErrorDistribution};
use robust_d2d::quantile_sets::{dual_certificate, fit_center, fit_symmetric, quantile_rank, SetShape, SymmetricSet};

const SHAPES: [SetShape; 3] = [SetShape::L1Ball, SetShape::L2Ball, SetShape::BoxSet];

fn vertices(set: &SymmetricSet) -> Vec<[f64; 2]> {
    let c = set.center;
    let r = set.size;
    match set.shape {
        SetShape::L1Ball => vec![[c[0] + r, c[1]], [c[0] - r, c[1]], [c[0], c[1] + r], [c[0], c[1] - r]],
        SetShape::BoxSet => vec![
            [c[0] + r, c[1] + r],
            [c[0] + r, c[1] - r],
            [c[0] - r, c[1] + r],
            [c[0] - r, c[1] - r],
        ],
        SetShape::L2Ball => unreachable!(),
    }
}

fn brute_distance(shape: SetShape, c: [f64; 2], g: [f64; 2]) -> f64 {
    let (a, b) = ((g[0] - c[0]).abs(), (g[1] - c[1]).abs());
    match shape {
        SetShape::L1Ball => a + b,
        SetShape::L2Ball => a * a + b * b,
        SetShape::BoxSet => a.max(b),
    }
}

fn set(shape: SetShape, center: [f64; 2], size: f64) -> SymmetricSet {
    SymmetricSet {
        shape,
        center,
        size,
        epsilon: 0.05,
        n: 1000,
    }
}

#[test]
fn center_within_clt_band() {
    let dist = ErrorDistribution::Gaussian {
        mean: [0.0, 0.0],
        cov: [[1.0, 0.5], [0.5, 1.0]],
    };
    let pop = common::channel_samples(&dist, 200_000, 77);
    let n_pop = pop.len() as f64;
    let mu = [
        pop.iter().map(|g| g.g_d).sum::<f64>() / n_pop,
        pop.iter().map(|g| g.g_cd).sum::<f64>() / n_pop,
    ];
    let sd = [
        (pop.iter().map(|g| (g.g_d - mu[0]).powi(2)).sum::<f64>() / n_pop).sqrt(),
        (pop.iter().map(|g| (g.g_cd - mu[1]).powi(2)).sum::<f64>() / n_pop).sqrt(),
    ];
    let train = common::channel_samples(&dist, 1000, 5);
    let c = fit_center(&train);
    for k in 0..2 {
        assert!((c[k] - mu[k]).abs() <= 5.0 * sd[k] / 1000f64.sqrt(), "axis {k}");
    }
}

#[test]
fn boundary_sampling_agrees_with_l2_closed_form() {
    let s = set(SetShape::L2Ball, [2.0, 0.0], 1.0);
    assert_eq!(s.worst_case_value([0.0, 1.0]), -1.0);
    let mut rng = common::rng(1);
    for _ in 0..5 {
        let p = common::unit_direction(&mut rng);
        let m = 200_000;
        let sampled = (0..m)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / m as f64;
                common::dot(p, [2.0 + t.cos(), t.sin()])
            })
            .fold(f64::INFINITY, f64::min);
        let v = s.worst_case_value(p);
        assert!(sampled >= v - 1e-12);
        assert!(sampled - v <= 1e-6 * v.abs().max(1.0));
    }
}

#[test]
fn robust_constraint_agrees_with_sampled_members() {
    let train = common::channel_samples(&ErrorDistribution::default_gaussian(), 1000, 3);
    let mut rng = common::rng(2);
    for shape in SHAPES {
        let s = fit_symmetric(&train, shape, 0.05).unwrap();
        let r = s.radius();
        let p = [1e8, -3e7];
        let mut sampled = f64::INFINITY;
        let mut members = 0;
        while members < 100_000 {
            let g = [
                s.center[0] + rng.random_range(-r..=r),
                s.center[1] + rng.random_range(-r..=r),
            ];
            if s.contains(g) {
                members += 1;
                sampled = sampled.min(common::dot(p, g));
            }
        }
        let v = s.worst_case_value(p);
        assert!(sampled >= v - 1e-9 * v.abs());
        // Thresholds below and above the sampled minimum.
        assert!(s.robust_constraint_holds(p, v));
        assert!(!s.robust_constraint_holds(p, v + 1e-6 * v.abs().max(1.0)));
    }
    assert!(!set(SetShape::BoxSet, [1.0, 1.0], 0.5).robust_constraint_holds([0.0, 0.0], 0.1));
}

#[test]
fn quantile_index_example() {
    // t-values {1,2,3,4} along the first axis around a zero centre
    let pts: Vec<ChannelSample> = [1.0, -2.0, 3.0, -4.0]
        .iter()
        .map(|x| ChannelSample::new(*x, 0.0))
        .collect();
    assert_eq!(fit_center(&pts), [-0.5, 0.0]);
    assert_eq!(quantile_rank(0.25, 4), 3);
    let s = robust_d2d::quantile_sets::calibrate(&pts, [0.0, 0.0], SetShape::BoxSet, 0.25).unwrap();
    assert_eq!(s.size, 3.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn polyhedral_oracles_match_vertex_enumeration(
        cx in -5.0f64..5.0, cy in -5.0f64..5.0, size in 0.0f64..4.0, theta in 0.0f64..6.3, box_set in any::<bool>(),
    ) {
        let shape = if box_set { SetShape::BoxSet } else { SetShape::L1Ball };
        let s = set(shape, [cx, cy], size);
        let p = [theta.cos(), theta.sin()];
        let brute = vertices(&s).into_iter().map(|v| common::dot(p, v)).fold(f64::INFINITY, f64::min);
        let v = s.worst_case_value(p);
        prop_assert!((v - brute).abs() <= 1e-12 * (1.0 + brute.abs()));
        let g = s.worst_case_point(p);
        prop_assert!((common::dot(p, g) - v).abs() <= 1e-12 * (1.0 + v.abs()));
    }

    #[test]
    fn membership_matches_brute_force(
        cx in -5.0f64..5.0, cy in -5.0f64..5.0, size in 0.0f64..4.0, gx in -10.0f64..10.0, gy in -10.0f64..10.0,
        k in 0usize..3,
    ) {
        let shape = SHAPES[k];
        let s = set(shape, [cx, cy], size);
        prop_assert_eq!(s.contains([gx, gy]), brute_distance(shape, [cx, cy], [gx, gy]) <= size);
        prop_assert!(s.contains([cx, cy]));
    }

    #[test]
    fn training_coverage_and_monotone_size(seed in 0u64..1000, n in 10usize..300, e1 in 0.01f64..0.5, e2 in 0.01f64..0.5, k in 0usize..3) {
        let pts = common::cloud(n, seed);
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let a = fit_symmetric(&pts, SHAPES[k], lo).unwrap();
        let b = fit_symmetric(&pts, SHAPES[k], hi).unwrap();
        prop_assert!(a.size >= b.size);
        let covered = pts.iter().filter(|g| a.contains(g.to_array())).count();
        prop_assert!(covered >= quantile_rank(lo, n));
    }

    #[test]
    fn translation_equivariance(seed in 0u64..1000, vx in -100.0f64..100.0, vy in -100.0f64..100.0, theta in 0.0f64..6.3, k in 0usize..3) {
        let pts = common::cloud(64, seed);
        let moved: Vec<ChannelSample> = pts.iter().map(|g| ChannelSample::new(g.g_d + vx, g.g_cd + vy)).collect();
        let a = fit_symmetric(&pts, SHAPES[k], 0.1).unwrap();
        let b = fit_symmetric(&moved, SHAPES[k], 0.1).unwrap();
        let scale = 1.0 + vx.abs() + vy.abs();
        prop_assert!((b.center[0] - a.center[0] - vx).abs() <= 1e-12 * scale);
        prop_assert!((b.center[1] - a.center[1] - vy).abs() <= 1e-12 * scale);
        prop_assert!((b.size - a.size).abs() <= 1e-10 * scale * scale);
        let p = [theta.cos(), theta.sin()];
        let shift = b.worst_case_value(p) - a.worst_case_value(p);
        prop_assert!((shift - common::dot(p, [vx, vy])).abs() <= 1e-9 * scale);
    }

    #[test]
    fn certificates_close_the_gap(seed in 0u64..1000, theta in 0.0f64..6.3, box_set in any::<bool>(), eps in 0.01f64..0.3) {
        let shape = if box_set { SetShape::BoxSet } else { SetShape::L1Ball };
        let s = fit_symmetric(&common::cloud(100, seed), shape, eps).unwrap();
        let p = [theta.cos(), theta.sin()];
        let cert = dual_certificate(&s, p).unwrap();
        prop_assert!(cert.multipliers.iter().all(|x| *x >= 0.0));
        prop_assert!((cert.value - s.worst_case_value(p)).abs() <= 1e-9 * (1.0 + cert.value.abs()));
    }
}
