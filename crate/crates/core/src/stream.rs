//! Counter-based random streams.
//!
//! Every replication draws from its own ChaCha8 stream, addressed by the
//! master seed, a purpose tag and the replication index. Results therefore
//! do not depend on how replications are spread over threads, and streams
//! with different purposes never overlap.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; part of the stream address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    Coverage = 1,
    SelNumerator = 2,
    SelTerm = 3,
    Generic = 4,
}

const INDEX_BITS: u32 = 56;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The stream for replication `index` (below 2⁵⁶) of `purpose` under `seed`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    assert!(index < 1 << INDEX_BITS, "replication index out of range");
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((purpose as u64) << INDEX_BITS) | index);
    rng
}

/// Derives an independent seed for a numbered sub-study (e.g. a search stage).
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut state = seed ^ splitmix64(&mut label.wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(&mut state)
}
