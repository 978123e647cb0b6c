//! Counter-based random substreams.
//!
//! Every Monte Carlo chunk owns its own ChaCha8 stream selected by
//! `(seed, stream id)`, so the numbers a chunk sees never depend on which
//! worker runs it or in what order chunks complete.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Purpose tag mixed into the stream id so independent consumers of the
/// same chunk never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamKind {
    Channels = 0,
    Phases = 1,
    Noise = 2,
}

const KINDS: u64 = 4;

/// Substream for `chunk` of the experiment keyed by `seed`.
pub fn substream(seed: u64, chunk: u64, kind: StreamKind) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk.wrapping_mul(KINDS).wrapping_add(kind as u64));
    rng
}
