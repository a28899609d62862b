//! Seeded instances shared by the benchmarks.

use lpopt::{SymmetricTensor, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform entries in `[-1, 1)`.
pub fn random_tensor(dims: &[usize], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(dims.to_vec(), |_| rng.random_range(-1.0..1.0)).expect("bench dims are small")
}

/// Super-symmetric tensor whose entries depend only on the sorted index.
pub fn random_symmetric(n: usize, d: usize, seed: u64) -> SymmetricTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = (0..n.pow(d as u32)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let t = Tensor::from_fn(vec![n; d], |idx| {
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        base[sorted.iter().fold(0, |acc, &i| acc * n + i)]
    })
    .expect("bench dims are small");
    SymmetricTensor::new(t, 0.0).expect("sorted-index tensors are symmetric")
}
