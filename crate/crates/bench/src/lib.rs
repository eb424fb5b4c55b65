//! Seeded instance generators for the criterion benches.

use ksm_core::{fixtures, PointSet};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` points uniform in `[-1, 1]^d`.
pub fn uniform(n: usize, d: usize, seed: u64) -> PointSet {
    fixtures::uniform_points(n, d, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Points near a random `k`-subspace with uniform noise of width `noise`,
/// plus `outliers` far points in random directions.
pub fn planted(n: usize, d: usize, k: usize, noise: f64, outliers: usize, seed: u64) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = fixtures::random_subspace(d, k, &mut rng);
    let clean = fixtures::points_in_subspace(n, &basis, &mut rng);
    let mut m = clean.matrix().clone().insert_rows(n, outliers, 0.0);
    for i in 0..n {
        for j in 0..d {
            m[(i, j)] += noise * rng.gen_range(-1.0..1.0);
        }
    }
    for i in n..n + outliers {
        for j in 0..d {
            m[(i, j)] = 20.0 * rng.gen_range(-1.0..1.0);
        }
    }
    PointSet::new(m).expect("finite points")
}

/// A random symmetric matrix for the eigensolver bench.
pub fn symmetric(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    &a + a.transpose()
}
