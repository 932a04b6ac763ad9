//! Seed derivation. Every random source in a run is a ChaCha stream keyed by
//! the run seed and a fixed stream tag, so sources never share draws.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Data,
    MonteCarlo,
    Mechanism,
    Instance,
    Attack,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Data => 0x6461_7461,
            Stream::MonteCarlo => 0x6d63_6d63,
            Stream::Mechanism => 0x6d65_6368,
            Stream::Instance => 0x696e_7374,
            Stream::Attack => 0x6174_6b31,
        }
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: Stream) -> u64 {
    splitmix64(splitmix64(seed) ^ stream.tag())
}

/// Seed for the `index`-th member of a family (sweep point, instance, ...).
pub fn derive_indexed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5eed)))
}
