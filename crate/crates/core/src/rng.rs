//! Deterministic random streams.
//!
//! Every trajectory (or ensemble replica) owns a `RandomStream` derived from
//! the run seed and its index, so results do not depend on how work is
//! distributed over threads.

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Key offset separating auxiliary streams (measurement thinning) from
/// dynamics streams with the same index.
const AUX_KEY: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Stream `index` of the family keyed by `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { rng }
    }

    /// Auxiliary stream paired with [`RandomStream::substream`]; never
    /// overlaps with any dynamics stream of the same seed.
    pub fn aux_substream(seed: u64, index: u64) -> Self {
        Self::substream(seed ^ AUX_KEY, index)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        Open01.sample(&mut self.rng)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        p >= 1.0 || (p > 0.0 && self.uniform() < p)
    }

    /// Poisson variate with the given mean.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if !(mean > 0.0) {
            return 0;
        }
        if mean < 30.0 {
            // CDF inversion with a single uniform.
            let u = self.uniform();
            let mut k = 0u64;
            let mut pk = (-mean).exp();
            let mut cdf = pk;
            while u > cdf && pk > 0.0 {
                k += 1;
                pk *= mean / k as f64;
                cdf += pk;
            }
            k
        } else {
            let dist = rand_distr::Poisson::new(mean).expect("finite positive Poisson mean");
            dist.sample(&mut self.rng) as u64
        }
    }
}
