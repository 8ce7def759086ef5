//! Named random streams derived from one master seed.
//!
//! Every stream is the ChaCha8 generator seeded with the master seed and
//! switched to a distinct stream id, so draws in one stream never shift
//! another (changing the noise level leaves the mask sequence intact).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    System,
    Mask,
    Noise,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::System => 1,
            Stream::Mask => 2,
            Stream::Noise => 3,
        }
    }
}

pub fn stream(master_seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(which.id());
    rng
}
