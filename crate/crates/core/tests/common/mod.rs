#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use robust_d2d::channel::{
    build_scenario, generate_dataset, ChannelSample, ErrorDistribution, Scenario, ScenarioConfig,
};

pub fn default_scenario() -> Scenario {
    build_scenario(&ScenarioConfig::default()).unwrap()
}

pub fn channel_samples(dist: &ErrorDistribution, n: usize, seed: u64) -> Vec<ChannelSample> {
    generate_dataset(&default_scenario(), dist, n, seed).unwrap().samples
}

/// Correlated, skewed point cloud of unit scale.
pub fn cloud(n: usize, seed: u64) -> Vec<ChannelSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho: f64 = rng.random_range(-0.8..0.8);
    let sx: f64 = rng.random_range(0.5..3.0);
    let sy: f64 = rng.random_range(0.5..3.0);
    (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let x = sx * a;
            let y = sy * (rho * a + (1.0 - rho * rho).sqrt() * b);
            ChannelSample::new(x + 0.3 * x * x, y)
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_direction<R: Rng>(rng: &mut R) -> [f64; 2] {
    let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    [t.cos(), t.sin()]
}

pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Axis-aligned bounding box of a point list.
pub fn bounds(points: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}
