//! Per-stage seeds derived from one user seed.

/// Pipeline stages that consume randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Label,
    Train,
}

/// Mixes `seed` with the stage tag through splitmix64 so that stages never
/// share a random stream.
pub fn stage_seed(seed: u64, stage: Stage) -> u64 {
    let tag: u64 = match stage {
        Stage::Label => 0x6c61_6265_6c00_0001,
        Stage::Train => 0x7472_6169_6e00_0002,
    };
    splitmix64(seed ^ tag)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
