//! Deterministic random substreams.
//!
//! Every unit of work (one realization, one block of moment samples) gets
//! its own ChaCha stream keyed by `(seed, purpose, index)`, so results do
//! not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keep the streams of different estimators disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Realization = 1,
    MomentTerms = 2,
    Distances = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for work item `index` of the estimator tagged `tag`.
pub fn substream(seed: u64, tag: StreamTag, index: u64) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(tag as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}
