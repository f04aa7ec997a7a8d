//! Named random streams derived from a single seed.
//!
//! Every consumer of randomness asks for its own stream so that, for
//! example, changing the batch size does not change the initial weights.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    InitPeer1,
    InitPeer2,
    InitShared,
    Data,
    Noise,
    Imbalance,
    Batching,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::InitPeer1 => 1,
            Stream::InitPeer2 => 2,
            Stream::InitShared => 3,
            Stream::Data => 4,
            Stream::Noise => 5,
            Stream::Imbalance => 6,
            Stream::Batching => 7,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
