#![allow(dead_code)]

use hhl_core::qlsp::Qlsp;
use hhl_core::sim::CMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random real symmetric problem whose eigenvalues are distinct nonzero multiples of `step`
/// drawn from `levels`, with a random real `b`.
pub fn grid_aligned_problem(dim: usize, levels: &[i64], step: f64, seed: u64) -> Qlsp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = levels.to_vec();
    pool.shuffle(&mut rng);
    let eigenvalues: Vec<f64> = pool[..dim].iter().map(|&g| g as f64 * step).collect();
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let q = g.qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eigenvalues));
    let a = &q * d * q.transpose();
    let b: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
        .collect();
    Qlsp::new(CMatrix::from_fn(dim, dim, |r, c| Complex64::new(a[(r, c)], 0.0)), b).unwrap()
}
