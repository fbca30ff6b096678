//! Counter-based random numbers with per-stream substreams.
//!
//! Each Monte Carlo path gets its own stream derived from `(seed, index)`,
//! so the sequence of draws for a given path is independent of how paths
//! are scheduled across threads. The generator is splitmix64 started at a
//! mixed offset; consecutive streams start at pseudorandom, far-apart
//! points of the state space.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SubstreamRng {
    state: u64,
}

impl SubstreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let state = mix64(mix64(seed ^ GOLDEN) ^ mix64(stream.wrapping_mul(GOLDEN) | 1));
        Self { state }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform draw strictly inside (0, 1).
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via the inverse CDF.
    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        crate::gauss::inv_std_normal_cdf(self.next_uniform())
    }
}
