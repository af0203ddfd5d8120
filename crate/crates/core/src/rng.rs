//! Seeded, platform-independent random streams.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child seed for stream `index` of `base` (splitmix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn complex_normal(rng: &mut Rng) -> Complex64 {
    Complex64::new(normal(rng), normal(rng))
}

/// Uniformly random point on the complex unit circle.
pub fn unit_complex(rng: &mut Rng) -> Complex64 {
    let z = complex_normal(rng);
    z / z.norm()
}

pub fn normal_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DMatrix<f64> {
    // Row-major draw order so the stream maps to entries the same way on
    // every platform and storage layout.
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = normal(rng);
        }
    }
    m
}

/// Complex symmetric matrix with i.i.d. complex normal upper triangle.
pub fn complex_symmetric(n: usize, rng: &mut Rng) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = complex_normal(rng);
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
    }
    m
}
