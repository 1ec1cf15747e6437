//! Fixtures shared by the benchmarks.

use qrwald_core::sim::{generate_sample, DgpSpec, ErrorDist};
use qrwald_core::{Dataset, Restriction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Model-1 null sample of size `n` with the D·X₁ restriction.
pub fn model1_sample(n: usize, seed: u64) -> (Dataset, Restriction) {
    let spec = DgpSpec::new(1, 0.0, 0.5, ErrorDist::Normal, n).expect("valid design");
    generate_sample(&spec, &mut ChaCha8Rng::seed_from_u64(seed)).expect("sample")
}
