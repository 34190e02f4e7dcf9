//! Virtual-time model of the transmitting node.
//!
//! Every tick (period `1 / rate_hz`, exact in virtual microseconds) the node
//! advances the sawtooth, derives the three reference signals, and emits a
//! data frame on `data_id` followed by a plaintext diagnostic frame on
//! `diag_id` with the same timestamp.

use std::fmt;
use std::str::FromStr;

use crate::capture::{Capture, Mode, RunMeta};
use crate::frame::{Frame, STANDARD_ID_LIMIT};
use crate::payload::{
    assemble_plain_block, gen_freshness, seal, FreshnessSource, FrozenClock, HostClock,
    MonotonicClock, PlainSignals, TimingSample,
};
use crate::speck::{expand_key, Key128};

pub const SAWTOOTH_MAX: u8 = 125;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VirtualClock {
    now_us: u64,
}

impl VirtualClock {
    pub fn now_us(&self) -> u64 {
        self.now_us
    }

    fn set(&mut self, t_us: u64) {
        debug_assert!(t_us >= self.now_us);
        self.now_us = t_us;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SawtoothState {
    pub value: u8,
    pub direction: Direction,
}

impl Default for SawtoothState {
    fn default() -> Self {
        Self {
            value: 0,
            direction: Direction::Ascending,
        }
    }
}

/// Steps the 0..=125..=0 triangle wave. Period is 250 emissions.
pub fn sawtooth_next(st: SawtoothState) -> (u8, SawtoothState) {
    let (value, direction) = match st.direction {
        Direction::Ascending if st.value >= SAWTOOTH_MAX => (st.value - 1, Direction::Descending),
        Direction::Ascending => (st.value + 1, Direction::Ascending),
        Direction::Descending if st.value == 0 => (1, Direction::Ascending),
        Direction::Descending => (st.value - 1, Direction::Descending),
    };
    // Land on the turning point with the direction already flipped.
    let direction = match (direction, value) {
        (Direction::Ascending, SAWTOOTH_MAX) => Direction::Descending,
        (Direction::Descending, 0) => Direction::Ascending,
        (d, _) => d,
    };
    (value, SawtoothState { value, direction })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("shifted value {app} + {offset} exceeds 255")]
pub struct ShiftOverflow {
    pub app: u8,
    pub offset: u8,
}

pub fn shifted_of(app: u8, shift_offset: u8) -> Result<u8, ShiftOverflow> {
    app.checked_add(shift_offset).ok_or(ShiftOverflow {
        app,
        offset: shift_offset,
    })
}

/// Whether the node measures its own seal cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimingMode {
    /// Seal cost is not measured (virtual time charges nothing); diagnostic
    /// timing bytes are zero and runs are byte-reproducible.
    #[default]
    Virtual,
    /// Seal cost is measured with the host monotonic clock.
    Host,
}

impl fmt::Display for TimingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimingMode::Virtual => "virtual",
            TimingMode::Host => "host",
        })
    }
}

impl FromStr for TimingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "virtual" => Ok(TimingMode::Virtual),
            "host" => Ok(TimingMode::Host),
            other => Err(format!("unknown timing mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub rate_hz: u32,
    pub duration_s: u32,
    pub seed: u64,
    pub key: Key128,
    pub data_id: u32,
    pub diag_id: u32,
    pub shift_offset: u8,
    pub constant_value: u8,
    pub timing: TimingMode,
    /// Draw freshness from the OS instead of the seeded generator.
    pub os_entropy: bool,
}

/// Key used when none is configured: the published Speck64/128 test key.
pub const DEFAULT_KEY: Key128 = crate::speck::kat::KEY;

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Encrypted,
            rate_hz: 100,
            duration_s: 180,
            seed: 7,
            key: DEFAULT_KEY,
            data_id: 0x100,
            diag_id: 0x101,
            shift_offset: 64,
            constant_value: 0x55,
            timing: TimingMode::Virtual,
            os_entropy: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("rate_hz must be > 0")]
    ZeroRate,
    #[error("rate_hz must be at most 1000000 (one tick per microsecond)")]
    RateTooHigh,
    #[error("duration_s must be > 0")]
    ZeroDuration,
    #[error("data_id and diag_id must differ")]
    SameIds,
    #[error("{which} 0x{id:X} exceeds 11 bits")]
    IdRange { which: &'static str, id: u32 },
    #[error("mode must be encrypted or plaintext")]
    Mode,
    #[error(transparent)]
    Shift(#[from] ShiftOverflow),
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rate_hz == 0 {
            return Err(ConfigError::ZeroRate);
        }
        if self.rate_hz > 1_000_000 {
            return Err(ConfigError::RateTooHigh);
        }
        if self.duration_s == 0 {
            return Err(ConfigError::ZeroDuration);
        }
        if self.data_id == self.diag_id {
            return Err(ConfigError::SameIds);
        }
        for (which, id) in [("data_id", self.data_id), ("diag_id", self.diag_id)] {
            if id >= STANDARD_ID_LIMIT {
                return Err(ConfigError::IdRange { which, id });
            }
        }
        if self.mode == Mode::External {
            return Err(ConfigError::Mode);
        }
        shifted_of(SAWTOOTH_MAX, self.shift_offset)?;
        Ok(())
    }

    pub fn ticks(&self) -> u64 {
        u64::from(self.duration_s) * u64::from(self.rate_hz)
    }

    /// Timestamp of tick `k`, in microseconds.
    pub fn tick_time_us(&self, k: u64) -> u64 {
        k * 1_000_000 / u64::from(self.rate_hz)
    }

    pub fn period_us(&self) -> f64 {
        1e6 / f64::from(self.rate_hz)
    }

    pub fn meta(&self) -> RunMeta {
        RunMeta {
            seed: self.seed,
            mode: self.mode,
            duration_s: f64::from(self.duration_s),
            rate_hz: f64::from(self.rate_hz),
        }
    }
}

fn ns_to_us_rounded(ns: u64) -> u64 {
    (ns + 500) / 1000
}

/// Diagnostic frame: bytes 0..4 mirror the plain block, byte 4 is the
/// freshness time in µs (saturating u8), bytes 5..7 the encryption time in
/// µs (saturating u16, little-endian), byte 7 is zero.
pub fn build_diagnostic_frame(
    diag_id: u32,
    freshness: u8,
    s: PlainSignals,
    t: TimingSample,
    clock: &VirtualClock,
) -> Frame {
    let fresh_us = ns_to_us_rounded(t.freshness_ns).min(u64::from(u8::MAX)) as u8;
    let enc_us = ns_to_us_rounded(t.encrypt_ns).min(u64::from(u16::MAX)) as u16;
    let [e0, e1] = enc_us.to_le_bytes();
    Frame::standard(
        diag_id,
        &[
            freshness,
            s.app_data,
            s.constant_ref,
            s.shifted_data,
            fresh_us,
            e0,
            e1,
            0,
        ],
        clock.now_us(),
    )
}

/// Everything a run produced: the capture plus the raw (ns) seal timings.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub capture: Capture,
    pub timings: Vec<TimingSample>,
}

pub fn run(config: &RunConfig) -> Result<Capture, ConfigError> {
    run_detailed(config).map(|o| o.capture)
}

pub fn run_detailed(config: &RunConfig) -> Result<RunOutput, ConfigError> {
    config.validate()?;
    let clock: Box<dyn MonotonicClock> = match config.timing {
        TimingMode::Virtual => Box::new(FrozenClock),
        TimingMode::Host => Box::new(HostClock::new()),
    };
    let ks = expand_key(&config.key);
    let mut src = if config.os_entropy {
        FreshnessSource::os()
    } else {
        FreshnessSource::seeded(config.seed)
    };
    let mut vclock = VirtualClock::default();
    let mut saw = SawtoothState::default();
    let mut capture = Capture::new(config.meta());
    let ticks = config.ticks();
    let mut timings = Vec::with_capacity(ticks as usize);

    for k in 0..ticks {
        vclock.set(config.tick_time_us(k));
        let (app, next) = sawtooth_next(saw);
        saw = next;
        let signals = PlainSignals::new(
            app,
            config.constant_value,
            shifted_of(app, config.shift_offset)?,
        );
        let (data, freshness, timing) = match config.mode {
            Mode::Encrypted => {
                let sealed = seal(signals, &mut src, &ks, clock.as_ref());
                (sealed.payload.0, sealed.freshness, sealed.timing)
            }
            _ => {
                let t0 = clock.now_ns();
                let freshness = gen_freshness(&mut src);
                let t1 = clock.now_ns();
                let timing = TimingSample {
                    freshness_ns: t1.saturating_sub(t0),
                    encrypt_ns: 0,
                };
                (assemble_plain_block(freshness, signals), freshness, timing)
            }
        };
        timings.push(timing);
        // Lower identifier first, as bus arbitration would order them.
        capture
            .push(Frame::standard(config.data_id, &data, vclock.now_us()))
            .expect("validated config yields valid frames");
        capture
            .push(build_diagnostic_frame(
                config.diag_id,
                freshness,
                signals,
                timing,
                &vclock,
            ))
            .expect("validated config yields valid frames");
    }
    Ok(RunOutput { capture, timings })
}

/// Runs the encrypted and plaintext variants with the same seed and
/// signal trajectory. The two runs are independent and execute in parallel.
pub fn run_pair(config: &RunConfig) -> Result<(Capture, Capture), ConfigError> {
    let enc = RunConfig {
        mode: Mode::Encrypted,
        ..config.clone()
    };
    let plain = RunConfig {
        mode: Mode::Plaintext,
        ..config.clone()
    };
    let (a, b) = std::thread::scope(|s| {
        let h = s.spawn(|| run(&enc));
        let b = run(&plain);
        (h.join().expect("encrypted run panicked"), b)
    });
    Ok((a?, b?))
}
