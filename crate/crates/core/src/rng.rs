//! Seedable, portable random number generation.
//!
//! Every stochastic step in the pipeline (weight init, corpus generation,
//! shuffles) goes through [`PortableRng`], a xoshiro256++ generator seeded
//! via splitmix64. Both algorithms are fully specified in terms of `u64`
//! arithmetic, so identical seeds give identical streams on every platform,
//! which is what makes whole runs byte-reproducible.

/// splitmix64 step, used for seeding and for mixing stream tags.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// xoshiro256++ generator with splitmix64 seed expansion.
#[derive(Debug, Clone)]
pub struct PortableRng {
    s: [u64; 4],
}

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        Self {
            s: [
                splitmix64(&mut sm),
                splitmix64(&mut sm),
                splitmix64(&mut sm),
                splitmix64(&mut sm),
            ],
        }
    }

    /// Derive an independent stream from a seed and a list of tag words.
    ///
    /// Used to give each consumer (corpus generation, split shuffle, epoch
    /// shuffle, ...) its own stream from one user-facing seed.
    pub fn from_parts(parts: &[u64]) -> Self {
        let mut acc = 0x6A09E667F3BCC909u64; // arbitrary fixed offset
        for &p in parts {
            let mut sm = acc ^ p;
            acc = splitmix64(&mut sm);
        }
        Self::new(acc)
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform double in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform index in `[0, n)`. Plain modulo; the bias is far below
    /// anything observable at the corpus sizes used here.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        (self.next_u64() % n as u64) as usize
    }

    /// Bernoulli draw with probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for k in (1..items.len()).rev() {
            let j = self.below(k + 1);
            items.swap(k, j);
        }
    }

    /// Pick one element of a non-empty slice.
    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }
}
