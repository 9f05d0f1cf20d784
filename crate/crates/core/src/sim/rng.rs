//! Counter-based random streams.
//!
//! A master seed fixes a ChaCha key; every (stream kind, index path) pair maps
//! to its own ChaCha stream id. Any worker can therefore rebuild the generator
//! for realization `r`, content `c` without coordination, and the numbers it
//! draws do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Geometry,
    Caches,
    Fading,
    /// Seeds of nested experiments (sweep grid points and the like).
    Derived,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Geometry => 0x67656f6d,
            Stream::Caches => 0x63616368,
            Stream::Fading => 0x66616465,
            Stream::Derived => 0x64657276,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_id(stream: Stream, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(stream.tag()), |h, &i| splitmix64(h ^ splitmix64(i)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
    key: [u8; 32],
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Self { seed, key }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng(&self, stream: Stream, path: &[u64]) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(stream_id(stream, path));
        rng
    }

    /// A fresh master seed for a nested experiment identified by `path`.
    pub fn derive_seed(&self, path: &[u64]) -> u64 {
        splitmix64(self.seed ^ stream_id(Stream::Derived, path))
    }
}
