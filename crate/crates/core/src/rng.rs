//! Stateless counter-based random numbers.
//!
//! Every draw is a pure function of `(domain, seed, stream, counter)`, so
//! replicates and set memberships can be produced in any order, on any
//! thread, with bit-identical results.

/// Domain tag for prime phases of a realization.
pub const DOMAIN_PHASE: u64 = 0x0070_6861_7365;
/// Domain tag for Bernoulli set membership.
pub const DOMAIN_MEMBERSHIP: u64 = 0x6d65_6d62;
/// Domain tag for deriving child seeds.
pub const DOMAIN_DERIVE: u64 = 0x0064_6572_6976;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const STREAM_MUL: u64 = 0xd1b5_4a32_d192_ed03;
const COUNTER_MUL: u64 = 0xaef1_7502_108e_f2d9;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64 uniformly distributed bits keyed by the four inputs.
#[inline]
pub fn keyed_u64(domain: u64, seed: u64, stream: u64, counter: u64) -> u64 {
    let mut h = mix64(seed ^ domain.wrapping_mul(GOLDEN));
    h = mix64(h.wrapping_add(stream.wrapping_mul(STREAM_MUL)) ^ GOLDEN);
    h = mix64(h.wrapping_add(counter.wrapping_mul(COUNTER_MUL)));
    mix64(h ^ (h >> 17).wrapping_add(GOLDEN))
}

/// Uniform double in `[0, 1)` with 53 random bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Child seed for the `index`-th sub-experiment of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    keyed_u64(DOMAIN_DERIVE, seed, index, 0)
}
