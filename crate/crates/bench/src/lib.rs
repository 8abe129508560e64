//! Shared fixtures for the kernel benchmarks.

use hbilinear::sampling::stream_rng;
use hbilinear::GroupPoint;
use rand::Rng;

/// `count` points with coordinates uniform in `[−w, w]`.
pub fn points(n: usize, count: usize, w: f64, seed: u64) -> Vec<GroupPoint> {
    let mut rng = stream_rng(seed, n as u64);
    (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..2 * n + 1).map(|_| rng.gen_range(-w..w)).collect();
            GroupPoint::from_coords(&c).expect("finite")
        })
        .collect()
}
