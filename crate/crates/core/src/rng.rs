//! Small deterministic PRNG (splitmix64) used for every seeded choice in
//! the pipeline: candidate sampling in the synthetic backends, critic
//! noise, shot shuffling, and the rerank-ablation sampler.
//!
//! Owning the generator keeps byte-identical reruns independent of any
//! external crate's stream stability guarantees.

use alloc::vec::Vec;

/// Splitmix64 stream. Cheap, seedable, and stable by construction.
#[derive(Clone, Debug)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Derive an independent stream for a named sub-purpose, so adding a
    /// consumer never shifts the draws other consumers see.
    pub fn fork(&self, label: &str) -> Rng {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in label.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        Rng::new(self.state ^ h)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `0..bound`. `bound` must be nonzero.
    pub fn next_below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i + 1);
            items.swap(i, j);
        }
    }

    /// Sample `n` distinct indices from `0..len`, in draw order.
    pub fn sample_indices(&mut self, len: usize, n: usize) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..len).collect();
        self.shuffle(&mut pool);
        pool.truncate(n.min(len));
        pool
    }

    /// Weighted draw over `weights` (all strictly positive). Returns the
    /// chosen index.
    pub fn weighted_index(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut mark = self.next_f64() * total;
        for (i, w) in weights.iter().enumerate() {
            mark -= w;
            if mark < 0.0 {
                return i;
            }
        }
        weights.len() - 1
    }
}

/// Stable 64-bit FNV-1a hash of a string, for seed derivation from text
/// (e.g. per-statement critic noise).
pub fn hash_str(text: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn forks_are_independent_of_consumer_order() {
        let root = Rng::new(42);
        let mut x1 = root.fork("alpha");
        let _ = root.fork("beta");
        let mut x2 = Rng::new(42).fork("alpha");
        assert_eq!(x1.next_u64(), x2.next_u64());
    }

    #[test]
    fn next_f64_in_unit_interval() {
        let mut r = Rng::new(3);
        for _ in 0..1000 {
            let v = r.next_f64();
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut r = Rng::new(9);
        let mut v: Vec<u32> = (0..20).collect();
        r.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..20).collect::<Vec<u32>>());
    }

    #[test]
    fn weighted_index_prefers_heavy_items() {
        let mut r = Rng::new(11);
        let weights = [100.0, 1.0];
        let heavy = (0..1000).filter(|_| r.weighted_index(&weights) == 0).count();
        assert!(heavy > 900);
    }
}
