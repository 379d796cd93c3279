//! Reproducible random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 generator keyed
//! by the user seed, with the 64-bit ChaCha stream id selecting an independent
//! sub-sequence. The stream id packs a purpose tag (high 16 bits) and an index
//! such as a trial or sample number (low 48 bits), so trials can run in any
//! order or in parallel and still see identical draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for [`stream`].
pub mod purpose {
    pub const ENSEMBLE_ENTRIES: u16 = 1;
    pub const HADAMARD_ROWS: u16 = 2;
    pub const CMSV_START: u16 = 3;
    pub const ORACLE_SAMPLES: u16 = 4;
    pub const ORACLE_POLISH: u16 = 5;
    pub const CCP_START: u16 = 6;
    pub const RIC_SUPPORT: u16 = 7;
    pub const EXPERIMENT: u16 = 8;
}

pub fn stream(seed: u64, purpose: u16, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | (index & ((1 << 48) - 1)));
    rng
}
