//! Named random streams derived from one root seed.
//!
//! Each stream is the ChaCha8 keystream for the root seed with a distinct
//! stream id, so streams are independent and adding a new one never shifts
//! the draws of an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    /// Initial parameters.
    Init,
    /// Mini-batch shuffles.
    Batch,
    /// Additive gradient noise.
    Noise,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Init => 1,
            Stream::Batch => 2,
            Stream::Noise => 3,
        }
    }
}

pub fn stream(root_seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(which.id());
    rng
}
