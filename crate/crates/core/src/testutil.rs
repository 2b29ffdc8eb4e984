//! Shared helpers for unit tests: seeded RNG and random matrix generators.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{CMatrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(r: &mut ChaCha8Rng) -> C64 {
    C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

pub fn random_matrix(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_complex(r))
}

pub fn random_hermitian(n: usize, r: &mut ChaCha8Rng) -> CMatrix {
    random_matrix(n, n, r).hermitize()
}
