//! Seeded, splittable random stream.
//!
//! The generator is counter based: the `n`-th output is a fixed mixing
//! function of `(key, n)`, where the key is derived from the seed. Child
//! streams created with [`RandomStream::split`] get a key that depends only on
//! the parent key and the child index, so a parallel fan-out is reproducible
//! no matter which thread runs which task.

use rand_core::{impls, RngCore};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    seed: u64,
    key: u64,
    counter: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::with_key(seed, mix64(seed ^ 0x6A09_E667_F3BC_C909))
    }

    fn with_key(seed: u64, key: u64) -> Self {
        Self {
            seed,
            key,
            counter: 0,
        }
    }

    /// The seed this stream (or its root ancestor) was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Independent child stream number `index`. Does not advance `self`.
    pub fn split(&self, index: u64) -> RandomStream {
        let child = mix64(self.key ^ mix64(index.wrapping_add(0xD1B5_4A32_D192_ED03)));
        Self::with_key(self.seed, mix64(child.wrapping_add(GOLDEN_GAMMA)))
    }

    #[inline]
    pub fn next_raw(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(
            self.key
                .wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_raw() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// True with probability `p` (clamped to `[0, 1]`). `p = 0` never fires.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Samples an index from unnormalised nonnegative weights. Returns `None`
    /// when all weights vanish.
    pub fn categorical(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let target = self.uniform() * total;
        let mut acc = 0.0;
        let mut last_positive = None;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last_positive = Some(i);
                if target < acc {
                    return Some(i);
                }
            }
        }
        last_positive
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_raw() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_raw()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        let mut a = RandomStream::new(42);
        let mut b = RandomStream::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_raw(), b.next_raw());
        }
        let mut c = RandomStream::new(43);
        assert_ne!(RandomStream::new(42).next_raw(), c.next_raw());
    }

    #[test]
    fn split_is_deterministic_and_distinct() {
        let root = RandomStream::new(7);
        let mut s1 = root.split(1);
        let mut s1b = root.split(1);
        let mut s2 = root.split(2);
        assert_eq!(s1.next_raw(), s1b.next_raw());
        assert_ne!(s1.next_raw(), s2.next_raw());
        assert_eq!(root.split(3).seed(), 7);
        assert_eq!(root.counter(), 0);
    }

    #[test]
    fn uniform_moments() {
        let mut r = RandomStream::new(1);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| r.uniform()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        // 5σ bands for the sample mean and variance of U(0,1)
        assert!((mean - 0.5).abs() < 5.0 * (1.0 / 12.0f64 / n as f64).sqrt());
        assert!((var - 1.0 / 12.0).abs() < 5.0 * (1.0 / 180.0f64 / n as f64).sqrt());
        assert!(xs.iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn split_streams_uncorrelated() {
        let root = RandomStream::new(99);
        let mut a = root.split(0);
        let mut b = root.split(1);
        let n = 50_000;
        let corr: f64 = (0..n)
            .map(|_| (a.uniform() - 0.5) * (b.uniform() - 0.5))
            .sum::<f64>()
            / n as f64;
        // sd of the product of two centred U(0,1) is 1/12
        assert!(corr.abs() < 5.0 / 12.0 / (n as f64).sqrt());
    }

    #[test]
    fn categorical_edges() {
        let mut r = RandomStream::new(3);
        assert_eq!(r.categorical(&[0.0, 0.0]), None);
        for _ in 0..100 {
            assert_eq!(r.categorical(&[0.0, 2.0, 0.0]), Some(1));
        }
        assert!(!r.bernoulli(0.0));
        assert!(r.bernoulli(1.0));
    }
}
