//! Reproducible random streams.
//!
//! Every random draw in the simulator goes through an [`RngStream`]. A stream
//! is identified by a `(master_seed, stream_id)` pair: the master seed keys a
//! ChaCha8 generator and the stream id selects one of its 2^64 independent
//! keystreams, so trials run in any order (or in parallel) see the same draws.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            inner,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// A child stream under the same master seed. The child id is a mix of
    /// the parent id and `label`, so children of different parents do not
    /// collide in practice.
    pub fn derive(&self, label: u64) -> RngStream {
        RngStream::new(self.master_seed, mix(self.stream_id ^ mix(label)))
    }

    pub fn bit(&mut self) -> bool {
        self.inner.gen::<bool>()
    }

    /// Uniform real in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Bernoulli draw. Probabilities of exactly 0 or 1 consume no randomness.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.uniform() < p
        }
    }

    /// Poisson draw. A zero mean always yields zero without consuming randomness.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        assert!(mean >= 0.0 && mean.is_finite(), "invalid Poisson mean {mean}");
        if mean == 0.0 {
            return 0;
        }
        let dist = Poisson::new(mean).expect("positive finite mean");
        dist.sample(&mut self.inner) as u64
    }

    /// Uniform index in `0..bound`.
    pub fn below(&mut self, bound: usize) -> usize {
        self.inner.gen_range(0..bound)
    }

    pub fn bits(&mut self, len: usize) -> Vec<bool> {
        (0..len).map(|_| self.bit()).collect()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_ids_same_draws() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let xs: Vec<u64> = (0..64).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..64).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 4);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let n = 200_000;
        let mut a = RngStream::new(1, 10);
        let mut b = RngStream::new(1, 11);
        let agree = (0..n).filter(|_| a.bit() == b.bit()).count() as f64 / n as f64;
        // 3 standard errors of a fair coin
        assert!((agree - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "{agree}");
    }

    #[test]
    fn counter_advances() {
        let mut a = RngStream::new(0, 0);
        assert_eq!(a.counter(), 0);
        a.next_u64();
        assert_eq!(a.counter(), 2);
    }

    #[test]
    fn degenerate_draws_consume_nothing() {
        let mut a = RngStream::new(0, 0);
        assert!(!a.bernoulli(0.0));
        assert!(a.bernoulli(1.0));
        assert_eq!(a.poisson(0.0), 0);
        assert_eq!(a.counter(), 0);
    }

    #[test]
    fn poisson_mean() {
        let mut a = RngStream::new(5, 0);
        let n = 100_000;
        let total: u64 = (0..n).map(|_| a.poisson(1.0)).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 1.0).abs() < 3.0 * (1.0 / n as f64).sqrt(), "{mean}");
    }
}
