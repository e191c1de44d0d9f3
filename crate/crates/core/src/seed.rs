//! Deterministic seed derivation.
//!
//! `seed_derive(master, tag, index)` feeds `master`, the tag byte and the
//! index through two rounds of the splitmix64 finalizer. Every random draw in
//! the pipeline starts from a seed derived this way, so results never depend
//! on scheduling.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedTag {
    TrainData,
    TestData,
    Network,
    HeadInit,
}

impl SeedTag {
    fn code(self) -> u64 {
        match self {
            SeedTag::TrainData => 0x7452_4149_4e00_0001,
            SeedTag::TestData => 0x7445_5354_0000_0002,
            SeedTag::Network => 0x6e45_5457_4f52_0003,
            SeedTag::HeadInit => 0x6845_4144_0000_0004,
        }
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn seed_derive(master: u64, tag: SeedTag, index: u64) -> u64 {
    let a = mix64(master.wrapping_add(GOLDEN) ^ tag.code());
    mix64(a.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))) ^ tag.code().rotate_left(17))
}
