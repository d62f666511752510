//! Seeded random streams.
//!
//! One user-facing seed fans out into independent named substreams, so
//! adding draws in one component never shifts another component's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PlexRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    /// EM parameter initialization.
    Init,
    /// Pseudo-disambiguation triple generation.
    PseudoGen,
    /// Random-choice baseline.
    RandomBaseline,
    /// Synthetic corpus generation (planted models, self-checks).
    Synthetic,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Init => 1,
            Stream::PseudoGen => 2,
            Stream::RandomBaseline => 3,
            Stream::Synthetic => 4,
        }
    }
}

pub fn substream(seed: u64, stream: Stream) -> PlexRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
