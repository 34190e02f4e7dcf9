//! Passive-observer analysis of captured traffic: what an eavesdropper on
//! the bus can learn from timing, constant fields, periodic patterns and
//! cross-signal correlation, with and without payload encryption.

use std::collections::{BTreeMap, HashSet};

use crate::capture::{Capture, Mode};
use crate::frame::Frame;
use crate::node::{RunConfig, TimingMode, SAWTOOTH_MAX};
use crate::payload::{open, SealedPayload, TimingSample};
use crate::speck::RoundKeySchedule;
use crate::stats::{
    autocorrelation, byte_entropy_bits, density_estimate, monotonic_run_lengths, pearson,
    summarize, DensityEstimate, RunLengths, StatsError, Summary,
};

/// A column counts as random-looking at or above this entropy.
pub const RANDOM_ENTROPY_BITS: f64 = 7.9;
/// A column counts as masked at or above this many distinct values.
pub const MASKED_DISTINCT: usize = 250;
/// |r| at or below this counts as uncorrelated (n ≈ 18,000).
pub const UNCORRELATED_ABS_R: f64 = 0.05;
/// r at or above this counts as a detected linear relation or periodicity.
pub const CORRELATED_R: f64 = 0.99;
/// Longest monotonic run tolerated in a masked column.
pub const MAX_MASKED_RUN: usize = 12;
/// Longest run a plaintext sawtooth produces: 0..=125.
pub const SAWTOOTH_RUN: usize = SAWTOOTH_MAX as usize + 1;
/// Full sawtooth period in frames.
pub const SAWTOOTH_PERIOD: usize = 2 * SAWTOOTH_MAX as usize;
/// Host seal-cost bounds.
pub const MAX_MEAN_SEAL_US: f64 = 100.0;
pub const MAX_PERIOD_FRACTION: f64 = 0.01;

pub type IntervalStats = Summary;

/// Which identifiers carry what, plus the periodicity lag to probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamIds {
    pub data_id: u32,
    pub diag_id: u32,
    pub lag: usize,
}

impl Default for StreamIds {
    fn default() -> Self {
        Self {
            data_id: 0x100,
            diag_id: 0x101,
            lag: SAWTOOTH_PERIOD,
        }
    }
}

impl From<&RunConfig> for StreamIds {
    fn from(c: &RunConfig) -> Self {
        Self {
            data_id: c.data_id,
            diag_id: c.diag_id,
            lag: SAWTOOTH_PERIOD,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("id 0x{id:X}: {source}")]
    Stats {
        id: u32,
        #[source]
        source: StatsError,
    },
    #[error("diagnostic frame {index} on 0x{id:X} is malformed: {reason}")]
    MalformedDiagnostic {
        id: u32,
        index: usize,
        reason: &'static str,
    },
    #[error("captures do not share a schedule on 0x{id:X}: {reason}")]
    ScheduleMismatch { id: u32, reason: String },
}

fn on(id: u32) -> impl FnOnce(StatsError) -> AnalysisError {
    move |source| AnalysisError::Stats { id, source }
}

pub fn inter_message_intervals(capture: &Capture, id: u32) -> Result<Vec<f64>, AnalysisError> {
    let frames = capture.frames(id);
    if frames.len() < 2 {
        return Err(AnalysisError::Stats {
            id,
            source: StatsError::InsufficientData {
                needed: 2,
                got: frames.len(),
            },
        });
    }
    Ok(frames
        .windows(2)
        .map(|w| (w[1].timestamp_us - w[0].timestamp_us) as f64 / 1e6)
        .collect())
}

pub fn interval_stats(intervals: &[f64]) -> Result<IntervalStats, StatsError> {
    summarize(intervals)
}

/// One payload byte position of one identifier, in frame order. Frames
/// shorter than `byte_index + 1` are skipped.
pub fn byte_column(capture: &Capture, id: u32, byte_index: usize) -> Vec<u8> {
    capture
        .frames(id)
        .iter()
        .filter_map(|f| f.byte(byte_index))
        .collect()
}

fn as_f64(v: &[u8]) -> Vec<f64> {
    v.iter().map(|&b| f64::from(b)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ByteColumnProfile {
    pub byte_index: usize,
    pub samples: usize,
    pub distinct_count: usize,
    pub shannon_entropy_bits: f64,
    pub min: u8,
    pub max: u8,
    pub is_constant: bool,
}

impl ByteColumnProfile {
    pub fn looks_random(&self) -> bool {
        self.distinct_count >= MASKED_DISTINCT && self.shannon_entropy_bits >= RANDOM_ENTROPY_BITS
    }
}

pub fn byte_column_profile(
    capture: &Capture,
    id: u32,
    byte_index: usize,
) -> Result<ByteColumnProfile, AnalysisError> {
    if byte_index >= 8 {
        return Err(on(id)(StatsError::ByteIndex(byte_index)));
    }
    let col = byte_column(capture, id, byte_index);
    if col.is_empty() {
        return Err(on(id)(StatsError::InsufficientData { needed: 1, got: 0 }));
    }
    let distinct = col.iter().collect::<HashSet<_>>().len();
    Ok(ByteColumnProfile {
        byte_index,
        samples: col.len(),
        distinct_count: distinct,
        shannon_entropy_bits: byte_entropy_bits(&col),
        min: *col.iter().min().expect("non-empty"),
        max: *col.iter().max().expect("non-empty"),
        is_constant: distinct == 1,
    })
}

pub fn cross_signal_correlation(
    external: &[f64],
    capture: &Capture,
    id: u32,
    byte_index: usize,
) -> Result<Option<f64>, AnalysisError> {
    let col = as_f64(&byte_column(capture, id, byte_index));
    pearson(external, &col).map_err(on(id))
}

/// Decoded timing fields of one diagnostic frame, in µs.
pub fn decode_diagnostic_timing(f: &Frame) -> Option<(u8, u16)> {
    if f.payload.len() != 8 || f.payload[7] != 0 {
        return None;
    }
    Some((f.payload[4], u16::from_le_bytes([f.payload[5], f.payload[6]])))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadReport {
    pub freshness_us: Summary,
    pub encrypt_us: Summary,
    pub combined_mean_us: f64,
    pub period_us: f64,
    pub fraction_of_period: f64,
}

impl OverheadReport {
    fn from_series(fresh: &[f64], enc: &[f64], period_us: f64) -> Result<Self, StatsError> {
        let freshness_us = summarize(fresh)?;
        let encrypt_us = summarize(enc)?;
        let combined = freshness_us.mean + encrypt_us.mean;
        Ok(Self {
            freshness_us,
            encrypt_us,
            combined_mean_us: combined,
            period_us,
            fraction_of_period: combined / period_us,
        })
    }

    /// Overhead from raw nanosecond timings, without µs quantization.
    pub fn from_timings(samples: &[TimingSample], period_us: f64) -> Result<Self, StatsError> {
        let fresh: Vec<f64> = samples.iter().map(|t| t.freshness_ns as f64 / 1e3).collect();
        let enc: Vec<f64> = samples.iter().map(|t| t.encrypt_ns as f64 / 1e3).collect();
        Self::from_series(&fresh, &enc, period_us)
    }

    pub fn percent_of_period(&self) -> f64 {
        self.combined_mean_us * 100.0 / self.period_us
    }
}

/// Per-frame diagnostic timings `(freshness_us, encrypt_us)`.
pub fn diagnostic_timings(
    diag: &Capture,
    diag_id: u32,
) -> Result<Vec<(u8, u16)>, AnalysisError> {
    diag.frames(diag_id)
        .iter()
        .enumerate()
        .map(|(index, f)| {
            decode_diagnostic_timing(f).ok_or(AnalysisError::MalformedDiagnostic {
                id: diag_id,
                index,
                reason: "expected 8 bytes with byte 7 zero",
            })
        })
        .collect()
}

pub fn overhead_report(
    diag: &Capture,
    diag_id: u32,
    period_us: f64,
) -> Result<OverheadReport, AnalysisError> {
    let timings = diagnostic_timings(diag, diag_id)?;
    let fresh: Vec<f64> = timings.iter().map(|t| f64::from(t.0)).collect();
    let enc: Vec<f64> = timings.iter().map(|t| f64::from(t.1)).collect();
    OverheadReport::from_series(&fresh, &enc, period_us).map_err(on(diag_id))
}

/// Measures the real per-seal cost on this host by running the encrypted
/// node with host timing enabled.
pub fn host_overhead(config: &RunConfig) -> Result<OverheadReport, AnalysisError> {
    let cfg = RunConfig {
        mode: Mode::Encrypted,
        timing: TimingMode::Host,
        ..config.clone()
    };
    let out = crate::node::run_detailed(&cfg).map_err(|e| AnalysisError::ScheduleMismatch {
        id: cfg.data_id,
        reason: e.to_string(),
    })?;
    OverheadReport::from_timings(&out.timings, cfg.period_us()).map_err(on(cfg.data_id))
}

/// Frames whose 8-byte payload already appeared earlier in the stream.
pub fn repeated_payloads(capture: &Capture, id: u32) -> usize {
    let mut seen = HashSet::new();
    capture
        .frames(id)
        .iter()
        .filter(|f| !seen.insert(f.payload.as_slice()))
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpenAudit {
    pub frames: usize,
    pub padding_violations: usize,
}

impl OpenAudit {
    pub fn violation_rate(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.padding_violations as f64 / self.frames as f64
        }
    }
}

/// Tries to open every 8-byte data frame with `ks` and counts failures.
pub fn open_audit(capture: &Capture, id: u32, ks: &RoundKeySchedule) -> OpenAudit {
    let frames: Vec<&Frame> = capture.frames(id).iter().filter(|f| f.dlc == 8).collect();
    let padding_violations = frames
        .iter()
        .filter(|f| open(&SealedPayload(f.data8()), ks).is_err())
        .count();
    OpenAudit {
        frames: frames.len(),
        padding_violations,
    }
}

/// Everything computed from a single capture.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureAnalysis {
    pub mode: Mode,
    pub intervals: BTreeMap<u32, IntervalStats>,
    pub interval_density: BTreeMap<u32, DensityEstimate>,
    pub byte_profiles: Vec<ByteColumnProfile>,
    /// Pairwise r over data-frame byte columns; `None` where undefined.
    pub pearson_matrix: Vec<Vec<Option<f64>>>,
    pub app_autocorrelation: Option<f64>,
    pub app_runs: RunLengths,
    pub repeated_payloads: usize,
}

impl CaptureAnalysis {
    pub fn profile(&self, byte: usize) -> Option<&ByteColumnProfile> {
        self.byte_profiles.iter().find(|p| p.byte_index == byte)
    }

    pub fn correlation(&self, a: usize, b: usize) -> Option<f64> {
        self.pearson_matrix.get(a).and_then(|r| r.get(b)).copied().flatten()
    }
}

pub fn analyze_capture(capture: &Capture, ids: StreamIds) -> Result<CaptureAnalysis, AnalysisError> {
    let mut intervals = BTreeMap::new();
    let mut interval_density = BTreeMap::new();
    for id in capture.ids() {
        if capture.frames(id).len() < 2 {
            continue;
        }
        let iv = inter_message_intervals(capture, id)?;
        intervals.insert(id, interval_stats(&iv).map_err(on(id))?);
        interval_density.insert(id, density_estimate(&iv, None).map_err(on(id))?);
    }

    let width = capture
        .frames(ids.data_id)
        .iter()
        .map(|f| usize::from(f.dlc))
        .min()
        .unwrap_or(0);
    let byte_profiles = (0..width)
        .map(|b| byte_column_profile(capture, ids.data_id, b))
        .collect::<Result<Vec<_>, _>>()?;
    let columns: Vec<Vec<f64>> = (0..width)
        .map(|b| as_f64(&byte_column(capture, ids.data_id, b)))
        .collect();
    let mut pearson_matrix = vec![vec![None; width]; width];
    for a in 0..width {
        for b in a..width {
            let r = pearson(&columns[a], &columns[b]).map_err(on(ids.data_id))?;
            pearson_matrix[a][b] = r;
            pearson_matrix[b][a] = r;
        }
    }

    let app = columns.get(1).ok_or_else(|| {
        on(ids.data_id)(StatsError::InsufficientData { needed: 2, got: width })
    })?;
    let app_autocorrelation = if app.len() > ids.lag + 1 {
        autocorrelation(app, ids.lag).map_err(on(ids.data_id))?
    } else {
        None
    };
    let app_runs = monotonic_run_lengths(app).map_err(on(ids.data_id))?;

    Ok(CaptureAnalysis {
        mode: capture.meta.mode,
        intervals,
        interval_density,
        byte_profiles,
        pearson_matrix,
        app_autocorrelation,
        app_runs,
        repeated_payloads: repeated_payloads(capture, ids.data_id),
    })
}

/// Side-by-side analysis of an encrypted capture and its plaintext twin.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub ids: StreamIds,
    pub nominal_period_us: f64,
    pub encrypted: CaptureAnalysis,
    pub plaintext: CaptureAnalysis,
    /// r(plaintext shifted_data, plaintext app_data): the observer's
    /// external measurement against unprotected traffic.
    pub external_vs_plain_app: Option<f64>,
    /// r(plaintext shifted_data, encrypted byte 1).
    pub external_vs_encrypted_app: Option<f64>,
    /// Overhead decoded from the encrypted run's diagnostic frames.
    pub diagnostic_overhead: Option<OverheadReport>,
    /// Host-measured seal overhead, when one was taken.
    pub host_overhead: Option<OverheadReport>,
    /// Exact intervals on the data id of both captures, in µs.
    pub schedule_exact: bool,
}

fn data_timestamps(c: &Capture, id: u32) -> Vec<u64> {
    c.frames(id).iter().map(|f| f.timestamp_us).collect()
}

pub fn semantic_report(
    encrypted: &Capture,
    plaintext: &Capture,
    ids: StreamIds,
) -> Result<AnalysisReport, AnalysisError> {
    let te = data_timestamps(encrypted, ids.data_id);
    let tp = data_timestamps(plaintext, ids.data_id);
    if te.len() != tp.len() {
        return Err(AnalysisError::ScheduleMismatch {
            id: ids.data_id,
            reason: format!("{} vs {} frames", te.len(), tp.len()),
        });
    }
    if let Some(i) = te.iter().zip(&tp).position(|(a, b)| a != b) {
        return Err(AnalysisError::ScheduleMismatch {
            id: ids.data_id,
            reason: format!("timestamps diverge at frame {i}"),
        });
    }

    let enc = analyze_capture(encrypted, ids)?;
    let plain = analyze_capture(plaintext, ids)?;

    let external = as_f64(&byte_column(plaintext, ids.data_id, 3));
    let external_vs_plain_app = cross_signal_correlation(&external, plaintext, ids.data_id, 1)?;
    let external_vs_encrypted_app = cross_signal_correlation(&external, encrypted, ids.data_id, 1)?;

    let nominal_period_us = if encrypted.meta.rate_hz > 0.0 {
        1e6 / encrypted.meta.rate_hz
    } else {
        f64::NAN
    };
    let diagnostic_overhead = if encrypted.frames(ids.diag_id).is_empty() {
        None
    } else {
        overhead_report(encrypted, ids.diag_id, nominal_period_us).ok()
    };
    let tolerance_us = if nominal_period_us.fract() == 0.0 { 0.0 } else { 1.0 };
    let schedule_exact = te.len() >= 2
        && [&te, &tp].iter().all(|ts| {
            ts.windows(2)
                .all(|w| ((w[1] - w[0]) as f64 - nominal_period_us).abs() <= tolerance_us)
        });

    Ok(AnalysisReport {
        ids,
        nominal_period_us,
        encrypted: enc,
        plaintext: plain,
        external_vs_plain_app,
        external_vs_encrypted_app,
        diagnostic_overhead,
        host_overhead: None,
        schedule_exact,
    })
}

/// Outcome of one named experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn fmt_r(r: Option<f64>) -> String {
    r.map_or_else(|| "undefined".to_string(), |r| format!("{r:.4}"))
}

fn abs_at_most(r: Option<f64>, bound: f64) -> bool {
    r.is_some_and(|r| r.abs() <= bound)
}

fn at_least(r: Option<f64>, bound: f64) -> bool {
    r.is_some_and(|r| r >= bound)
}

/// Numeric encrypted-minus-plaintext differences. `None` where one side is
/// defined and the other is not.
#[derive(Debug, Clone, PartialEq)]
pub struct Delta {
    pub name: String,
    pub value: Option<f64>,
}

fn delta_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a - b),
        (None, None) => Some(0.0),
        _ => None,
    }
}

impl AnalysisReport {
    pub fn checks(&self) -> Vec<Check> {
        let e = &self.encrypted;
        let p = &self.plaintext;
        let mut out = Vec::with_capacity(6);

        let ei = e.intervals.get(&self.ids.data_id);
        out.push(Check {
            name: "timing_schedule",
            passed: self.schedule_exact,
            detail: format!(
                "nominal {:.6} s; encrypted mean {:.6} s std {:.2e}; plaintext mean {:.6} s std {:.2e}",
                self.nominal_period_us / 1e6,
                ei.map_or(f64::NAN, |s| s.mean),
                ei.map_or(f64::NAN, |s| s.std),
                p.intervals.get(&self.ids.data_id).map_or(f64::NAN, |s| s.mean),
                p.intervals.get(&self.ids.data_id).map_or(f64::NAN, |s| s.std),
            ),
        });

        let pb2 = p.profile(2);
        let eb2 = e.profile(2);
        out.push(Check {
            name: "constant_masking",
            passed: pb2.is_some_and(|b| b.is_constant) && eb2.is_some_and(|b| b.looks_random()),
            detail: format!(
                "byte_2 plaintext distinct {} ; encrypted distinct {} entropy {:.3} bits",
                pb2.map_or(0, |b| b.distinct_count),
                eb2.map_or(0, |b| b.distinct_count),
                eb2.map_or(0.0, |b| b.shannon_entropy_bits),
            ),
        });

        out.push(Check {
            name: "pattern_obfuscation",
            passed: p.app_runs.max_ascending_run == SAWTOOTH_RUN
                && at_least(p.app_autocorrelation, CORRELATED_R)
                && e.app_runs.max_run() <= MAX_MASKED_RUN
                && abs_at_most(e.app_autocorrelation, UNCORRELATED_ABS_R),
            detail: format!(
                "byte_1 plaintext max ascending run {} acf(lag {}) {} ; encrypted max run {} acf {}",
                p.app_runs.max_ascending_run,
                self.ids.lag,
                fmt_r(p.app_autocorrelation),
                e.app_runs.max_run(),
                fmt_r(e.app_autocorrelation),
            ),
        });

        let p13 = p.correlation(1, 3);
        let e13 = e.correlation(1, 3);
        out.push(Check {
            name: "inter_signal_decorrelation",
            passed: at_least(p13, CORRELATED_R) && abs_at_most(e13, UNCORRELATED_ABS_R),
            detail: format!(
                "r(byte_1, byte_3) plaintext {} ; encrypted {}",
                fmt_r(p13),
                fmt_r(e13)
            ),
        });

        out.push(Check {
            name: "external_decorrelation",
            passed: at_least(self.external_vs_plain_app, CORRELATED_R)
                && abs_at_most(self.external_vs_encrypted_app, UNCORRELATED_ABS_R),
            detail: format!(
                "r(measured shifted_data, byte_1) plaintext {} ; encrypted {}",
                fmt_r(self.external_vs_plain_app),
                fmt_r(self.external_vs_encrypted_app)
            ),
        });

        let overhead = self.host_overhead.as_ref().or(self.diagnostic_overhead.as_ref());
        out.push(Check {
            name: "computational_overhead",
            passed: overhead.is_some_and(|o| {
                o.combined_mean_us < MAX_MEAN_SEAL_US && o.fraction_of_period < MAX_PERIOD_FRACTION
            }),
            detail: overhead.map_or_else(
                || "no timing data".to_string(),
                |o| {
                    format!(
                        "{} freshness {:.3} us + encrypt {:.3} us = {:.3} us ({:.4}% of {:.0} us period)",
                        if self.host_overhead.is_some() { "host" } else { "diagnostic" },
                        o.freshness_us.mean,
                        o.encrypt_us.mean,
                        o.combined_mean_us,
                        o.percent_of_period(),
                        o.period_us
                    )
                },
            ),
        });
        out
    }

    pub fn deltas(&self) -> Vec<Delta> {
        let e = &self.encrypted;
        let p = &self.plaintext;
        let mut out = Vec::new();
        for (pe, pp) in e.byte_profiles.iter().zip(&p.byte_profiles) {
            out.push(Delta {
                name: format!("byte_{}.entropy_bits", pe.byte_index),
                value: Some(pe.shannon_entropy_bits - pp.shannon_entropy_bits),
            });
            out.push(Delta {
                name: format!("byte_{}.distinct", pe.byte_index),
                value: Some(pe.distinct_count as f64 - pp.distinct_count as f64),
            });
        }
        out.push(Delta {
            name: "pearson(byte_1,byte_3)".into(),
            value: delta_opt(e.correlation(1, 3), p.correlation(1, 3)),
        });
        out.push(Delta {
            name: format!("acf(byte_1, lag {})", self.ids.lag),
            value: delta_opt(e.app_autocorrelation, p.app_autocorrelation),
        });
        out.push(Delta {
            name: "byte_1.max_run".into(),
            value: Some(e.app_runs.max_run() as f64 - p.app_runs.max_run() as f64),
        });
        out.push(Delta {
            name: "repeated_payloads".into(),
            value: Some(e.repeated_payloads as f64 - p.repeated_payloads as f64),
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::RunMeta;
    use crate::node::{run_pair, RunConfig};

    fn capture_with(timestamps: &[u64]) -> Capture {
        let mut c = Capture::new(RunMeta {
            seed: 0,
            mode: Mode::Plaintext,
            duration_s: 1.0,
            rate_hz: 100.0,
        });
        for &t in timestamps {
            c.push(Frame::standard(0x100, &[0, 1], t)).unwrap();
        }
        c
    }

    #[test]
    fn intervals_in_seconds() {
        let c = capture_with(&[0, 10_000, 20_000]);
        assert_eq!(inter_message_intervals(&c, 0x100).unwrap(), vec![0.01, 0.01]);
        let c = capture_with(&[5]);
        assert!(inter_message_intervals(&c, 0x100).is_err());
    }

    #[test]
    fn profile_of_two_values() {
        let mut c = capture_with(&[]);
        c.push(Frame::standard(0x100, &[0], 0)).unwrap();
        c.push(Frame::standard(0x100, &[1], 1)).unwrap();
        let p = byte_column_profile(&c, 0x100, 0).unwrap();
        assert_eq!(p.shannon_entropy_bits, 1.0);
        assert_eq!((p.distinct_count, p.min, p.max, p.is_constant), (2, 0, 1, false));
        assert!(byte_column_profile(&c, 0x100, 8).is_err());
        assert!(byte_column_profile(&c, 0x200, 0).is_err());
    }

    fn diag_capture(fresh_us: u8, enc_us: u16, n: u64) -> Capture {
        let mut c = capture_with(&[]);
        let [a, b] = enc_us.to_le_bytes();
        for t in 0..n {
            c.push(Frame::standard(0x101, &[0, 0, 0, 0, fresh_us, a, b, 0], t))
                .unwrap();
        }
        c
    }

    #[test]
    fn overhead_of_reference_timings() {
        let r = overhead_report(&diag_capture(3, 20, 500), 0x101, 10_000.0).unwrap();
        assert_eq!(r.combined_mean_us, 23.0);
        assert_eq!(r.fraction_of_period, 0.0023);
        assert_eq!(r.percent_of_period(), 0.23);
        let z = overhead_report(&diag_capture(0, 0, 10), 0x101, 10_000.0).unwrap();
        assert_eq!(z.fraction_of_period, 0.0);
    }

    #[test]
    fn malformed_diagnostic_is_rejected() {
        let mut c = capture_with(&[]);
        c.push(Frame::standard(0x101, &[0, 0, 0], 0)).unwrap();
        assert!(matches!(
            overhead_report(&c, 0x101, 10_000.0),
            Err(AnalysisError::MalformedDiagnostic { .. })
        ));
    }

    #[test]
    fn cross_signal_examples() {
        let cfg = RunConfig {
            duration_s: 10,
            ..RunConfig::default()
        };
        let (enc, plain) = run_pair(&cfg).unwrap();
        let shifted = as_f64(&byte_column(&plain, 0x100, 3));
        assert_eq!(cross_signal_correlation(&shifted, &plain, 0x100, 1).unwrap(), Some(1.0));
        let constant = vec![3.0; shifted.len()];
        assert_eq!(cross_signal_correlation(&constant, &enc, 0x100, 1).unwrap(), None);
        assert!(cross_signal_correlation(&shifted[1..], &enc, 0x100, 1).is_err());
    }

    #[test]
    fn self_comparison_has_zero_deltas() {
        let cfg = RunConfig {
            duration_s: 10,
            ..RunConfig::default()
        };
        let (enc, _) = run_pair(&cfg).unwrap();
        let r = semantic_report(&enc, &enc, StreamIds::default()).unwrap();
        assert!(r.deltas().iter().all(|d| d.value == Some(0.0)));
        assert_eq!(r.encrypted, r.plaintext);
    }

    #[test]
    fn schedule_mismatch_is_reported() {
        let a = capture_with(&[0, 10_000, 20_000]);
        let b = capture_with(&[0, 10_000, 20_001]);
        assert!(matches!(
            semantic_report(&a, &b, StreamIds::default()),
            Err(AnalysisError::ScheduleMismatch { .. })
        ));
    }

    #[test]
    fn wrong_key_audit() {
        let cfg = RunConfig {
            duration_s: 5,
            ..RunConfig::default()
        };
        let (enc, _) = run_pair(&cfg).unwrap();
        let right = crate::speck::expand_key(&cfg.key);
        let wrong = crate::speck::expand_key(&crate::speck::Key128::from_u128(1));
        assert_eq!(open_audit(&enc, 0x100, &right).padding_violations, 0);
        let a = open_audit(&enc, 0x100, &wrong);
        assert_eq!(a.violation_rate(), 1.0);
    }
}
