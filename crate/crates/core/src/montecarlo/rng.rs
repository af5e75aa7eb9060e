//! Per-path random streams.
//!
//! Every path draws from ChaCha8 keyed by the user seed, with the stream
//! number set to the path index. Streams are independent and a path's draws
//! do not depend on how many other paths run or in what order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub(crate) struct PathRng(ChaCha8Rng);

impl PathRng {
    pub(crate) fn new(seed: u64, path: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        PathRng(rng)
    }

    /// Uniform on the open interval (0, 1), 53 bits.
    pub(crate) fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential with the given positive rate, by inversion.
    pub(crate) fn exponential(&mut self, rate: f64) -> f64 {
        -self.uniform().ln() / rate
    }

    /// Index drawn with probability proportional to `weights`, whose sum is
    /// `total > 0`. Zero-weight entries are never returned.
    pub(crate) fn categorical(&mut self, weights: impl Iterator<Item = (usize, f64)>, total: f64) -> Option<usize> {
        let target = self.uniform() * total;
        let mut acc = 0.0;
        let mut last = None;
        for (k, w) in weights {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = Some(k);
            if target < acc {
                return last;
            }
        }
        // rounding left the target just past the running sum
        last
    }
}
