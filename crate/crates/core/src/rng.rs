//! Counter-based random streams.
//!
//! Every random decision in this crate is a pure function of a 64-bit seed, a
//! stream label and a counter. Workers can evaluate any slice of a stream
//! independently and the output never depends on evaluation order or thread
//! count.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_label(label: &str) -> u64 {
    // FNV-1a, enough to separate the handful of streams we use
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Clone, Copy, Debug)]
pub struct StreamRng {
    key: u64,
}

impl StreamRng {
    pub fn new(seed: u64, label: &str) -> Self {
        StreamRng {
            key: mix(seed ^ mix(hash_label(label))),
        }
    }

    /// Derive an independent sub-stream, e.g. one per trial or per worker.
    pub fn derive(&self, index: u64) -> StreamRng {
        StreamRng {
            key: mix(self.key.wrapping_add(index.wrapping_mul(GOLDEN)).wrapping_add(1)),
        }
    }

    pub fn u64_at(&self, counter: u64) -> u64 {
        mix(self.key.wrapping_add(counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn unit_at(&self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli_at(&self, counter: u64, p: f64) -> bool {
        self.unit_at(counter) < p
    }

    /// Uniform integer in [0, bound) by rejection; `bound` must be nonzero.
    pub fn below_at(&self, counter: u64, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound);
        let mut c = counter;
        loop {
            let x = self.u64_at(c);
            if x < zone {
                return x % bound;
            }
            c = c.wrapping_add(0x5851_f42d_4c95_7f2d);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let a = StreamRng::new(7, "x");
        let b = StreamRng::new(7, "x");
        for c in 0..100 {
            assert_eq!(a.u64_at(c), b.u64_at(c));
        }
    }

    #[test]
    fn streams_differ_by_label_and_seed() {
        let a = StreamRng::new(7, "x");
        let b = StreamRng::new(7, "y");
        let c = StreamRng::new(8, "x");
        assert_ne!(a.u64_at(0), b.u64_at(0));
        assert_ne!(a.u64_at(0), c.u64_at(0));
    }

    #[test]
    fn unit_in_range_and_roughly_uniform() {
        let r = StreamRng::new(3, "unit");
        let mut sum = 0.0;
        for c in 0..10_000 {
            let u = r.unit_at(c);
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / 10_000.0;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn below_respects_bound() {
        let r = StreamRng::new(11, "below");
        for c in 0..1000 {
            assert!(r.below_at(c, 7) < 7);
        }
    }
}
