//! Seeded random streams.
//!
//! Every module draws from a ChaCha8 stream derived from `(root seed, module
//! tag, day)`, so a module's draws do not depend on how many numbers another
//! module consumed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Module tags used to derive independent substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Population,
    Workforce,
    Vaccination,
    Immunity,
    HospitalInit,
    CommunityInit,
    VisitorAssignment,
    Exposure,
    Shuffle,
    Execute,
    Synth,
}

impl StreamTag {
    fn code(self) -> u64 {
        match self {
            StreamTag::Population => 1,
            StreamTag::Workforce => 2,
            StreamTag::Vaccination => 3,
            StreamTag::Immunity => 4,
            StreamTag::HospitalInit => 5,
            StreamTag::CommunityInit => 6,
            StreamTag::VisitorAssignment => 7,
            StreamTag::Exposure => 8,
            StreamTag::Shuffle => 9,
            StreamTag::Execute => 10,
            StreamTag::Synth => 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Substream for one module on one day. Initialization passes use day 0.
    pub fn substream(&self, tag: StreamTag, day: u32) -> SimRng {
        let mut h = splitmix64(self.seed);
        h = splitmix64(h ^ tag.code());
        h = splitmix64(h ^ u64::from(day).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        ChaCha8Rng::seed_from_u64(h)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Floor plus a Bernoulli draw on the fractional part. Unbiased for `x >= 0`.
pub fn stochastic_round<R: Rng + ?Sized>(x: f64, rng: &mut R) -> u64 {
    if x <= 0.0 || !x.is_finite() {
        return 0;
    }
    let floor = x.floor();
    let frac = x - floor;
    let bump = frac > 0.0 && rng.random::<f64>() < frac;
    floor as u64 + u64::from(bump)
}

/// Draws an index with probability proportional to `weights`. Zero-weight
/// entries are never chosen. Returns `None` when every weight is zero.
pub fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        if u < w {
            return Some(i);
        }
        u -= w;
        last = Some(i);
    }
    // u landed on the top edge through rounding
    last
}
