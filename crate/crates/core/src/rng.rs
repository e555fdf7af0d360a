//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha20 keystream keyed by the run seed, with the
//! stream identifier selecting an independent 64-bit nonce. Two runs with the
//! same `(seed, stream)` see identical draws, and distinct streams never
//! overlap, so alternate implementations can reproduce every random input by
//! keying ChaCha20 the same way (`seed_from_u64(seed)`, `set_stream(stream)`).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::harmonics::SphereDim;
use crate::transform::CoefficientTable;

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha20Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        StreamRng { inner }
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Standard complex Gaussian, `E|z|² = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.normal() * s, self.normal() * s)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.random_range(lo..hi)
    }
}

/// I.i.d. complex Gaussian coefficients for every `(n, m)` with `n ≤ band`.
pub fn random_full_table(band: usize, rng: &mut StreamRng) -> CoefficientTable {
    let mut t = CoefficientTable::zeros_full(band);
    t.as_mut_slice().iter_mut().for_each(|c| *c = rng.complex_normal());
    t
}

/// I.i.d. complex Gaussian zonal coefficients up to `band`.
pub fn random_zonal_table(band: usize, d: SphereDim, rng: &mut StreamRng) -> CoefficientTable {
    let mut t = CoefficientTable::zeros_zonal(band, d).expect("zonal table needs d >= 2");
    t.as_mut_slice().iter_mut().for_each(|c| *c = rng.complex_normal());
    t
}
