//! Input builders shared by the benchmarks.

use iap_core::geom::{random_orthogonal, random_unit, Vector};
use iap_core::CorrespondenceSample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Half-space points (plus the origin) under a random rotation with noise of norm ≤ `noise`.
pub fn noisy_half_space(n: usize, count: usize, noise: f64, seed: u64) -> CorrespondenceSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_orthogonal(n, &mut rng);
    let mut pairs = vec![(Vector::zeros(n), Vector::zeros(n))];
    while pairs.len() < count {
        let mut x = random_unit(n, &mut rng) * rng.random_range(1.0..100.0);
        x[0] = x[0].abs();
        let y = &q * &x + random_unit(n, &mut rng) * rng.random_range(0.0..noise);
        pairs.push((x, y));
    }
    CorrespondenceSample::new(pairs).expect("distinct random points")
}

pub fn random_units(n: usize, count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_unit(n, &mut rng)).collect()
}
