//! Seed derivation.
//!
//! Batch experiments give run `i` the seed `splitmix64(master + (i + 1)·γ)`
//! with `γ = 0x9E37_79B9_7F4A_7C15`. The map is a bijection in `i` for a
//! fixed master seed, so distinct runs never share a seed.
//!
//! Inside a run every role draws from its own ChaCha8 stream of the run
//! seed: stream `(stage << 32) | role`, where `role` is `0` for measurement
//! sampling, `i` for agent `i`, and fixed high values for the third party,
//! public coins and the adversary.

use rand::SeedableRng;

use crate::ghz::SimRng;
use crate::netsim::PartyId;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run` in a batch started from `master`.
pub fn derive_run_seed(master: u64, run: u64) -> u64 {
    splitmix64(master.wrapping_add(run.wrapping_add(1).wrapping_mul(GAMMA)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Nature,
    Party(PartyId),
    Public,
    Adversary,
}

impl Role {
    fn code(self) -> u64 {
        match self {
            Role::Nature => 0,
            Role::Party(PartyId::Agent(i)) => i as u64,
            Role::Party(PartyId::ThirdParty) => 0xFFFF_0001,
            Role::Public => 0xFFFF_0002,
            Role::Adversary => 0xFFFF_0003,
        }
    }
}

/// Protocol stage, used to keep per-stage streams apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageStream {
    Network = 0,
    Notification = 1,
    Sharing = 2,
    SharingSecond = 3,
    Comparison = 4,
    Game = 5,
}

/// Generator for `role` during `stage` of the run seeded with `seed`.
pub fn stream_rng(seed: u64, stage: StageStream, role: Role) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(((stage as u64) << 32) | role.code());
    rng
}
