//! Bit-exact random streams: splitmix64 for seeding, xoshiro256** for draws.
//!
//! Fixed here rather than pulled from a generic RNG crate so that any other
//! implementation can reproduce a trial's batch from `(seed, trial)` alone.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One splitmix64 step: advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xoshiro256StarStar {
    s: [u64; 4],
}

impl Xoshiro256StarStar {
    /// State filled by four successive splitmix64 outputs starting at `seed`.
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Xoshiro256StarStar { s }
    }

    pub fn from_state(s: [u64; 4]) -> Self {
        Xoshiro256StarStar { s }
    }

    pub fn state(&self) -> [u64; 4] {
        self.s
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;

        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];

        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);

        result
    }

    /// Uniform integer in `[0, bound)`.
    ///
    /// Draws below `2⁶⁴ mod bound` are rejected, so the accepted range has a
    /// length divisible by `bound` and `x % bound` is unbiased.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let reject_under = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= reject_under {
                return x % bound;
            }
        }
    }

    /// One Bernoulli trial against a threshold from [`bernoulli_threshold`].
    pub fn bernoulli(&mut self, threshold: u128) -> bool {
        u128::from(self.next_u64()) < threshold
    }
}

/// `floor(p · 2⁶⁴)`. A draw `u` succeeds iff `u < threshold`, so `p = 1`
/// always succeeds and `p = 0` never does.
pub fn bernoulli_threshold(p: f64) -> u128 {
    debug_assert!((0.0..=1.0).contains(&p));
    // Scaling by a power of two is exact; the cast floors.
    (p * 18_446_744_073_709_551_616.0).floor() as u128
}

/// Independent stream for one trial of an experiment.
pub fn derive_trial_rng(master_seed: u64, trial_index: u64) -> Xoshiro256StarStar {
    let mut state = master_seed ^ trial_index.wrapping_mul(GOLDEN_GAMMA);
    let trial_seed = splitmix64(&mut state);
    Xoshiro256StarStar::seed_from_u64(trial_seed)
}
