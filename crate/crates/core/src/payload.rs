//! Payload sealing: a random freshness byte is prepended to the application
//! signals and the whole 8-byte data field is encrypted as one Speck block.
//! The arbitration identifier is never touched.
//!
//! Plain block layout:
//!
//! | byte | content        |
//! |------|----------------|
//! | 0    | freshness      |
//! | 1    | app_data       |
//! | 2    | constant_ref   |
//! | 3    | shifted_data   |
//! | 4..8 | zero padding   |

use std::time::Instant;

use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::speck::{Block64, RoundKeySchedule};

/// The application-visible signals carried in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PlainSignals {
    pub app_data: u8,
    pub constant_ref: u8,
    pub shifted_data: u8,
}

impl PlainSignals {
    pub const fn new(app_data: u8, constant_ref: u8, shifted_data: u8) -> Self {
        Self {
            app_data,
            constant_ref,
            shifted_data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SealedPayload(pub [u8; 8]);

impl SealedPayload {
    pub fn bytes(&self) -> &[u8; 8] {
        &self.0
    }
}

/// Host-measured cost of one seal, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TimingSample {
    pub freshness_ns: u64,
    pub encrypt_ns: u64,
}

impl TimingSample {
    pub fn combined_ns(&self) -> u64 {
        self.freshness_ns + self.encrypt_ns
    }
}

/// Source of freshness bytes. The seeded variant reproduces bit-exactly;
/// the OS variant is opt-in and not reproducible.
#[derive(Debug, Clone)]
pub enum FreshnessSource {
    Seeded(ChaCha20Rng),
    Os,
}

impl FreshnessSource {
    pub fn seeded(seed: u64) -> Self {
        FreshnessSource::Seeded(ChaCha20Rng::seed_from_u64(seed))
    }

    pub fn os() -> Self {
        FreshnessSource::Os
    }

    pub fn next_byte(&mut self) -> u8 {
        gen_freshness(self)
    }
}

pub fn gen_freshness(src: &mut FreshnessSource) -> u8 {
    let mut b = [0u8; 1];
    match src {
        FreshnessSource::Seeded(rng) => rng.fill_bytes(&mut b),
        FreshnessSource::Os => OsRng.fill_bytes(&mut b),
    }
    b[0]
}

/// Monotonic nanosecond clock used to time the seal steps.
pub trait MonotonicClock {
    fn now_ns(&self) -> u64;
}

/// Wall-clock timing from [`Instant`].
#[derive(Debug, Clone, Copy)]
pub struct HostClock {
    origin: Instant,
}

impl HostClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for HostClock {
    fn default() -> Self {
        Self::new()
    }
}

impl MonotonicClock for HostClock {
    fn now_ns(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }
}

/// A clock that never moves: every measured duration is zero. Used by the
/// virtual-time node so captures stay byte-identical across runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrozenClock;

impl MonotonicClock for FrozenClock {
    fn now_ns(&self) -> u64 {
        0
    }
}

pub fn assemble_plain_block(freshness: u8, s: PlainSignals) -> [u8; 8] {
    [
        freshness,
        s.app_data,
        s.constant_ref,
        s.shifted_data,
        0,
        0,
        0,
        0,
    ]
}

/// Encrypts an already assembled plain block.
pub fn seal_block(plain: [u8; 8], ks: &RoundKeySchedule) -> SealedPayload {
    SealedPayload(ks.encrypt(Block64::from_bytes(plain)).to_bytes())
}

/// Output of [`seal`]: the ciphertext plus what went into it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sealed {
    pub payload: SealedPayload,
    pub freshness: u8,
    pub timing: TimingSample,
}

pub fn seal<C: MonotonicClock + ?Sized>(
    s: PlainSignals,
    src: &mut FreshnessSource,
    ks: &RoundKeySchedule,
    clock: &C,
) -> Sealed {
    let t0 = clock.now_ns();
    let freshness = gen_freshness(src);
    let t1 = clock.now_ns();
    let payload = seal_block(assemble_plain_block(freshness, s), ks);
    let t2 = clock.now_ns();
    Sealed {
        payload,
        freshness,
        timing: TimingSample {
            freshness_ns: t1.saturating_sub(t0),
            encrypt_ns: t2.saturating_sub(t1),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("padding bytes 4..8 are non-zero after decryption ({0:02X?}): wrong key or corrupted frame")]
pub struct PaddingViolation(pub [u8; 4]);

pub fn open(
    p: &SealedPayload,
    ks: &RoundKeySchedule,
) -> Result<(u8, PlainSignals), PaddingViolation> {
    let plain = ks.decrypt(Block64::from_bytes(p.0)).to_bytes();
    if plain[4..] != [0, 0, 0, 0] {
        return Err(PaddingViolation([plain[4], plain[5], plain[6], plain[7]]));
    }
    Ok((plain[0], PlainSignals::new(plain[1], plain[2], plain[3])))
}
