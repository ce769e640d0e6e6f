//! Seeded random streams.
//!
//! Each node owns one stream and scenario-level draws get their own, all
//! derived from the single master seed. Splitting rule: stream `i` seeds a
//! ChaCha8 generator with `splitmix64(master ^ splitmix64(i + 1))`, which
//! decorrelates streams even for adjacent master seeds. ChaCha8 keeps the
//! draw sequence stable across platforms, so a (scenario, seed) pair pins the
//! whole run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    /// Stream `index` of the family rooted at `master`. Index 0 is reserved
    /// for scenario-level draws; node `i` uses index `i + 1`.
    pub fn derive(master: u64, index: u64) -> Self {
        RandomStream {
            rng: ChaCha8Rng::seed_from_u64(splitmix64(master ^ splitmix64(index.wrapping_add(1)))),
        }
    }

    /// Uniform integer on the closed range [lo, hi].
    pub fn uniform_int(&mut self, lo: u32, hi: u32) -> u32 {
        assert!(lo <= hi, "uniform_int: empty range [{lo}, {hi}]");
        self.rng.random_range(lo..=hi)
    }

    /// Uniform draw on [0, 1).
    pub fn uniform_f64(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Exponential variate with the given rate (events per unit time).
    pub fn exponential(&mut self, rate: f64) -> f64 {
        assert!(rate > 0.0 && rate.is_finite(), "exponential: rate must be positive, got {rate}");
        let u: f64 = self.rng.random();
        -(1.0 - u).ln() / rate
    }
}
