//! Seeded generators. Each session seed fans out into independent ChaCha
//! streams so that weight init, shuffling and dropout never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SessionRng = ChaCha8Rng;

pub const STREAM_INIT: u64 = 0;
pub const STREAM_TRAIN: u64 = 1;
pub const STREAM_WINDOW: u64 = 2;
pub const STREAM_DATA: u64 = 3;

pub fn stream(seed: u64, stream: u64) -> SessionRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
