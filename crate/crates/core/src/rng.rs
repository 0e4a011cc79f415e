//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha20 generator keyed by the
//! master seed and selected by a stream id built from a [`Phase`] tag and an
//! index (node, block, or repetition). Two draws with the same
//! `(seed, phase, index)` are identical regardless of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Purpose tag for a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Raw private inputs of a node.
    Input,
    /// Mask coefficients drawn by a node while sharing.
    Mask,
    /// Differential-privacy noise added to raw inputs.
    DpNoise,
    /// Straggler subset selection.
    Stragglers,
    /// Colluding subset sampling in the leakage analyzer.
    Collusion,
    /// Left matrix operand and its masks.
    MatrixA,
    /// Right matrix operand and its masks.
    MatrixB,
}

impl Phase {
    fn tag(self) -> u64 {
        match self {
            Phase::Input => 1,
            Phase::Mask => 2,
            Phase::DpNoise => 3,
            Phase::Stragglers => 4,
            Phase::Collusion => 5,
            Phase::MatrixA => 6,
            Phase::MatrixB => 7,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Returns the generator for `(seed, phase, index)`.
pub fn stream(seed: u64, phase: Phase, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(splitmix64(phase.tag() << 56 ^ splitmix64(index)));
    rng
}

/// Derives a child seed, used to separate repetitions of one experiment.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0xA5A5_A5A5)))
}
