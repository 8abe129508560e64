//! Random points and reproducible generator streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::group::{knorm_parts, GroupPoint, Horizontal};

/// splitmix64 finaliser; decorrelates nearby seeds.
pub fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent generator for `(seed, stream)`; used per shell so results do
/// not depend on scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ mix(stream.wrapping_add(0x5151))))
}

/// Uniform point of the Koranyi ball `B(0, radius)`, by rejection from its
/// bounding box `[−ρ,ρ]²ⁿ × [−ρ²,ρ²]`.
pub fn uniform_in_ball<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> GroupPoint {
    let mut z: Horizontal = Horizontal::from_elem(0.0, 2 * n);
    loop {
        for c in z.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        let t = rng.gen_range(-1.0..1.0);
        if knorm_parts(&z, t) < 1.0 {
            let p = GroupPoint::from_parts(z, t);
            return p.dilate_unchecked(radius);
        }
    }
}

/// Point of the Koranyi unit sphere, distributed by the polar surface measure
/// (normalised). Obtained by pushing a uniform ball point out along its dilation orbit.
pub fn unit_sphere_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GroupPoint {
    loop {
        let v = uniform_in_ball(n, 1.0, rng);
        let k = v.knorm();
        if k > 1e-6 {
            return v.dilate_unchecked(1.0 / k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(3, 1).gen();
        let b: u64 = stream_rng(3, 1).gen();
        let c: u64 = stream_rng(3, 2).gen();
        let d: u64 = stream_rng(4, 1).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn ball_points_inside() {
        let mut rng = stream_rng(0, 0);
        for _ in 0..1000 {
            assert!(uniform_in_ball(2, 0.3, &mut rng).knorm() < 0.3);
            let s = unit_sphere_point(1, &mut rng).knorm();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn radius_law_of_ball_points() {
        // |v| has law ρ^Q on [0,1]
        let mut rng = stream_rng(9, 0);
        let m = 20000;
        let below = (0..m)
            .filter(|_| uniform_in_ball(1, 1.0, &mut rng).knorm() < 0.5)
            .count() as f64
            / m as f64;
        assert!((below - 0.5f64.powi(4)).abs() < 0.01);
    }
}
