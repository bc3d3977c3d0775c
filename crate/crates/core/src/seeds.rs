//! Deterministic seed derivation.
//!
//! Every stochastic component is driven by a stream seeded from a base seed
//! mixed with structural salts (day index, trajectory index, state
//! fingerprint). Mixing uses FNV-1a plus a finalizer so the derivation is
//! stable across platforms and releases, unlike `DefaultHasher`.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a_words<I: IntoIterator<Item = u64>>(words: I) -> u64 {
    let mut h = FNV_OFFSET;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

// splitmix64 finalizer
fn avalanche(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

/// Derives a child seed from a base seed and structural salts.
pub fn mix_seed(base: u64, salts: &[u64]) -> u64 {
    avalanche(fnv1a_words(std::iter::once(base).chain(salts.iter().copied())))
}

/// Stable fingerprint of a word sequence (used for per-state seed salts).
pub fn fingerprint<I: IntoIterator<Item = u64>>(words: I) -> u64 {
    avalanche(fnv1a_words(words))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_is_stable_and_sensitive() {
        assert_eq!(mix_seed(7, &[1, 2]), mix_seed(7, &[1, 2]));
        assert_ne!(mix_seed(7, &[1, 2]), mix_seed(7, &[2, 1]));
        assert_ne!(mix_seed(7, &[1, 2]), mix_seed(8, &[1, 2]));
    }
}
