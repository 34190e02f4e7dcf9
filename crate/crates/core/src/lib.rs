//! Lightweight encryption of CAN payloads and what it hides from a passive
//! observer.
//!
//! The crate is split along the data path:
//!
//! * [`speck`]: the Speck64/128 block cipher, one block per CAN data field.
//! * [`frame`] and [`capture`]: the CAN frame model, CSV and candump line
//!   formats, and the per-ID run directory.
//! * [`payload`]: freshness byte plus signal layout, sealing and opening.
//! * [`node`]: a virtual-time 100 Hz transmitting node producing encrypted or
//!   plaintext captures.
//! * [`stats`], [`analysis`] and [`report`]: observer-side statistics,
//!   the six experiment checks and their text/CSV output.

pub mod analysis;
pub mod capture;
pub mod frame;
pub mod node;
pub mod payload;
pub mod report;
pub mod speck;
pub mod stats;

pub use analysis::{semantic_report, AnalysisReport, Check, StreamIds};
pub use capture::{read_capture, write_capture, Capture, Mode, RunMeta};
pub use frame::Frame;
pub use node::{run, run_pair, RunConfig, TimingMode};
pub use payload::{open, seal, FreshnessSource, PlainSignals, SealedPayload, TimingSample};
pub use speck::{decrypt_block, encrypt_block, expand_key, Block64, Key128, RoundKeySchedule};
