//! Speck64/128: 64-bit block, 128-bit key, 27 rounds, rotations 8 and 3.
//!
//! One CAN payload is exactly one block. Payload bytes map little-endian
//! onto the two words: bytes 0..4 form `y`, bytes 4..8 form `x`.

use std::fmt;

/// Number of rounds for the 64/128 parameter set.
pub const ROUNDS: usize = 27;

const ALPHA: u32 = 8;
const BETA: u32 = 3;

/// A 128-bit key as four 32-bit words in the designers' order `(l2, l1, l0, k0)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Key128 {
    pub words: [u32; 4],
}

impl Key128 {
    pub const fn new(words: [u32; 4]) -> Self {
        Self { words }
    }

    /// Parses 32 hex digits. The leftmost word is `l2`, the rightmost `k0`,
    /// so `1b1a1918131211100b0a090803020100` is the published test key.
    pub fn from_hex(s: &str) -> Result<Self, KeyParseError> {
        let s = s.trim();
        let s = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
        if s.len() != 32 {
            return Err(KeyParseError::Length(s.len()));
        }
        let raw = u128::from_str_radix(s, 16).map_err(|_| KeyParseError::NotHex)?;
        Ok(Self::from_u128(raw))
    }

    pub fn from_u128(raw: u128) -> Self {
        Self {
            words: [
                (raw >> 96) as u32,
                (raw >> 64) as u32,
                (raw >> 32) as u32,
                raw as u32,
            ],
        }
    }

    pub fn to_hex(&self) -> String {
        self.words.iter().map(|w| format!("{w:08x}")).collect()
    }
}

// Keys never print their material.
impl fmt::Debug for Key128 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Key128(..)")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeyParseError {
    #[error("key must be 32 hex digits, got {0}")]
    Length(usize),
    #[error("key contains non-hex characters")]
    NotHex,
}

/// One 64-bit cipher block split into its high (`x`) and low (`y`) words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Block64 {
    pub x: u32,
    pub y: u32,
}

impl Block64 {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    pub fn from_bytes(bytes: [u8; 8]) -> Self {
        Self {
            y: u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
            x: u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]),
        }
    }

    pub fn to_bytes(self) -> [u8; 8] {
        let mut out = [0u8; 8];
        out[..4].copy_from_slice(&self.y.to_le_bytes());
        out[4..].copy_from_slice(&self.x.to_le_bytes());
        out
    }

    pub fn from_u64(v: u64) -> Self {
        Self {
            x: (v >> 32) as u32,
            y: v as u32,
        }
    }

    pub fn to_u64(self) -> u64 {
        (u64::from(self.x) << 32) | u64::from(self.y)
    }
}

/// The 27 expanded round keys. Immutable once built.
#[derive(Clone, PartialEq, Eq)]
pub struct RoundKeySchedule {
    round_keys: [u32; ROUNDS],
}

impl fmt::Debug for RoundKeySchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RoundKeySchedule(..)")
    }
}

impl RoundKeySchedule {
    pub fn round_keys(&self) -> &[u32; ROUNDS] {
        &self.round_keys
    }

    pub fn encrypt(&self, block: Block64) -> Block64 {
        encrypt_block(block, self)
    }

    pub fn decrypt(&self, block: Block64) -> Block64 {
        decrypt_block(block, self)
    }
}

impl From<&Key128> for RoundKeySchedule {
    fn from(key: &Key128) -> Self {
        expand_key(key)
    }
}

/// Expands a key into its round-key schedule.
pub fn expand_key(key: &Key128) -> RoundKeySchedule {
    let [l2, l1, l0, k0] = key.words;
    // l holds a sliding window of the three pending l-words.
    let mut l = [l0, l1, l2];
    let mut k = k0;
    let mut round_keys = [0u32; ROUNDS];
    round_keys[0] = k;
    for i in 0..ROUNDS - 1 {
        let next_l = k.wrapping_add(l[i % 3].rotate_right(ALPHA)) ^ i as u32;
        k = k.rotate_left(BETA) ^ next_l;
        l[i % 3] = next_l;
        round_keys[i + 1] = k;
    }
    RoundKeySchedule { round_keys }
}

#[inline(always)]
fn round(b: Block64, rk: u32) -> Block64 {
    let x = b.x.rotate_right(ALPHA).wrapping_add(b.y) ^ rk;
    let y = b.y.rotate_left(BETA) ^ x;
    Block64 { x, y }
}

#[inline(always)]
fn inverse_round(b: Block64, rk: u32) -> Block64 {
    let y = (b.y ^ b.x).rotate_right(BETA);
    let x = (b.x ^ rk).wrapping_sub(y).rotate_left(ALPHA);
    Block64 { x, y }
}

pub fn encrypt_block(block: Block64, ks: &RoundKeySchedule) -> Block64 {
    ks.round_keys.iter().fold(block, |b, &rk| round(b, rk))
}

pub fn decrypt_block(block: Block64, ks: &RoundKeySchedule) -> Block64 {
    ks.round_keys.iter().rev().fold(block, |b, &rk| inverse_round(b, rk))
}

/// Encrypts with only the first `rounds` round keys. Used as a negative
/// control for the known-answer check; not a secure cipher.
pub fn encrypt_reduced(block: Block64, ks: &RoundKeySchedule, rounds: usize) -> Block64 {
    ks.round_keys
        .iter()
        .take(rounds)
        .fold(block, |b, &rk| round(b, rk))
}

/// Published Speck64/128 known-answer vector.
pub mod kat {
    use super::{Block64, Key128, RoundKeySchedule};

    pub const KEY: Key128 = Key128::new([0x1b1a1918, 0x13121110, 0x0b0a0908, 0x03020100]);
    pub const PLAINTEXT: Block64 = Block64::new(0x3b726574, 0x7475432d);
    pub const CIPHERTEXT: Block64 = Block64::new(0x8c6fa548, 0x454e028b);

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub struct KatOutcome {
        pub encrypted: Block64,
        pub decrypted: Block64,
    }

    impl KatOutcome {
        pub fn passed(&self) -> bool {
            self.encrypted == CIPHERTEXT && self.decrypted == PLAINTEXT
        }
    }

    /// Runs the vector through arbitrary encrypt/decrypt functions.
    pub fn check_with<E, D>(encrypt: E, decrypt: D) -> KatOutcome
    where
        E: Fn(Block64, &RoundKeySchedule) -> Block64,
        D: Fn(Block64, &RoundKeySchedule) -> Block64,
    {
        let ks = super::expand_key(&KEY);
        KatOutcome {
            encrypted: encrypt(PLAINTEXT, &ks),
            decrypted: decrypt(CIPHERTEXT, &ks),
        }
    }

    pub fn check() -> KatOutcome {
        check_with(super::encrypt_block, super::decrypt_block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Straight-line key schedule, written out round by round with explicit
    // l-indices, as an independent check on the windowed loop above.
    fn reference_schedule(key: [u32; 4]) -> Vec<u32> {
        let mut l = vec![key[2], key[1], key[0]];
        let mut k = vec![key[3]];
        macro_rules! step {
            ($i:expr) => {{
                let li = (k[$i] as u64 + l[$i].rotate_right(8) as u64) as u32 ^ ($i as u32);
                l.push(li);
                let ki = k[$i].rotate_left(3) ^ l[$i + 3];
                k.push(ki);
            }};
        }
        step!(0); step!(1); step!(2); step!(3); step!(4); step!(5); step!(6);
        step!(7); step!(8); step!(9); step!(10); step!(11); step!(12); step!(13);
        step!(14); step!(15); step!(16); step!(17); step!(18); step!(19); step!(20);
        step!(21); step!(22); step!(23); step!(24); step!(25);
        k
    }

    // Encryption with the key schedule computed on the fly, interleaved with
    // the rounds, over u64 arithmetic masked to 32 bits.
    fn reference_encrypt(pt: (u32, u32), key: [u32; 4]) -> (u32, u32) {
        const M: u64 = 0xffff_ffff;
        let ror = |v: u64, r: u32| ((v >> r) | (v << (32 - r))) & M;
        let rol = |v: u64, r: u32| ((v << r) | (v >> (32 - r))) & M;
        let (mut x, mut y) = (pt.0 as u64, pt.1 as u64);
        let mut a = key[3] as u64;
        let mut bs = [key[2] as u64, key[1] as u64, key[0] as u64];
        for i in 0..27u64 {
            x = ((ror(x, 8) + y) & M) ^ a;
            y = rol(y, 3) ^ x;
            let idx = (i % 3) as usize;
            bs[idx] = ((ror(bs[idx], 8) + a) & M) ^ i;
            a = rol(a, 3) ^ bs[idx];
        }
        (x as u32, y as u32)
    }

    #[test]
    fn first_round_key_is_k0() {
        let ks = expand_key(&kat::KEY);
        assert_eq!(ks.round_keys()[0], 0x03020100);
        let zero = expand_key(&Key128::new([0; 4]));
        assert_eq!(zero.round_keys()[0], 0);
    }

    #[test]
    fn schedule_matches_straight_line_reference() {
        let ks = expand_key(&kat::KEY);
        assert_eq!(ks.round_keys().to_vec(), reference_schedule(kat::KEY.words));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let words: [u32; 4] = rng.gen();
            let ks = expand_key(&Key128::new(words));
            assert_eq!(ks.round_keys().to_vec(), reference_schedule(words));
        }
    }

    #[test]
    fn known_answer_vector() {
        let out = kat::check();
        assert_eq!(out.encrypted, Block64::new(0x8c6fa548, 0x454e028b));
        assert_eq!(out.decrypted, Block64::new(0x3b726574, 0x7475432d));
        assert!(out.passed());
        assert_eq!(
            reference_encrypt((0x3b726574, 0x7475432d), kat::KEY.words),
            (0x8c6fa548, 0x454e028b)
        );
    }

    #[test]
    fn matches_on_the_fly_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..2000 {
            let words: [u32; 4] = rng.gen();
            let (x, y): (u32, u32) = rng.gen();
            let ks = expand_key(&Key128::new(words));
            let ct = encrypt_block(Block64::new(x, y), &ks);
            assert_eq!((ct.x, ct.y), reference_encrypt((x, y), words));
        }
    }

    #[test]
    fn reduced_rounds_fail_the_vector() {
        let out = kat::check_with(|b, ks| encrypt_reduced(b, ks, ROUNDS - 1), decrypt_block);
        assert!(!out.passed());
        let full = kat::check_with(|b, ks| encrypt_reduced(b, ks, ROUNDS), decrypt_block);
        assert!(full.passed());
    }

    #[test]
    fn zero_block_zero_key_inverse() {
        let ks = expand_key(&Key128::new([0; 4]));
        let z = Block64::default();
        assert_eq!(encrypt_block(decrypt_block(z, &ks), &ks), z);
        assert_eq!(decrypt_block(encrypt_block(z, &ks), &ks), z);
    }

    #[test]
    fn seeded_roundtrip_and_avalanche() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut flipped = 0u64;
        const TRIALS: u64 = 10_000;
        for _ in 0..TRIALS {
            let key = Key128::new(rng.gen());
            let ks = expand_key(&key);
            let b = Block64::from_u64(rng.gen());
            let c = encrypt_block(b, &ks);
            assert_eq!(decrypt_block(c, &ks), b);
            let bit = rng.gen_range(0..64);
            let c2 = encrypt_block(Block64::from_u64(b.to_u64() ^ (1 << bit)), &ks);
            flipped += u64::from((c.to_u64() ^ c2.to_u64()).count_ones());
        }
        let mean = flipped as f64 / TRIALS as f64;
        assert!((30.0..=34.0).contains(&mean), "avalanche mean {mean}");
    }

    #[test]
    fn encryption_is_injective_on_sample() {
        let ks = expand_key(&kat::KEY);
        let mut seen = std::collections::HashSet::new();
        for v in 0..20_000u64 {
            assert!(seen.insert(encrypt_block(Block64::from_u64(v), &ks)));
        }
    }

    #[test]
    fn byte_mapping_is_little_endian_y_then_x() {
        let b = Block64::from_bytes([0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(b, Block64::new(0x07060504, 0x03020100));
        assert_eq!(b.to_bytes(), [0, 1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn key_hex_parsing() {
        let k = Key128::from_hex("1b1a1918131211100b0a090803020100").unwrap();
        assert_eq!(k, kat::KEY);
        assert_eq!(k.to_hex(), "1b1a1918131211100b0a090803020100");
        assert_eq!(Key128::from_hex("abc"), Err(KeyParseError::Length(3)));
        assert_eq!(
            Key128::from_hex("zz1a1918131211100b0a090803020100"),
            Err(KeyParseError::NotHex)
        );
        assert_eq!(format!("{k:?}"), "Key128(..)");
    }
}
