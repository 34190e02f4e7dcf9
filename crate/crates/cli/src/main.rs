//! `canseal`: simulate, capture and analyze encrypted CAN traffic.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use canseal_core::analysis::{
    analyze_capture, host_overhead, open_audit, overhead_report, semantic_report, StreamIds,
    SAWTOOTH_PERIOD,
};
use canseal_core::capture::{read_capture, write_capture, Capture, CaptureError, Mode, RunMeta};
use canseal_core::frame::parse_candump;
use canseal_core::node::{run, run_pair};
use canseal_core::report::{render_capture, render_overhead, write_capture_tables, write_report};
use canseal_core::speck::{self, expand_key, kat, Block64, Key128, ROUNDS};
use canseal_core::decrypt_block;
use clap::{Parser, Subcommand};
use rand_free::SplitMix64;

use crate::config::{parse_id, RunFlags};

/// Exit code for invalid flags or configuration (clap uses the same).
const EXIT_VALIDATION: u8 = 2;
/// Exit code for unreadable, unwritable or corrupt files.
const EXIT_IO: u8 = 3;
/// Exit code when an experiment check or the known-answer test fails.
const EXIT_CHECK: u8 = 4;
/// Exit code when the data cannot be analyzed.
const EXIT_ANALYSIS: u8 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("analysis: {0}")]
    Analysis(String),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
            CliError::CheckFailed(_) => EXIT_CHECK,
            CliError::Analysis(_) => EXIT_ANALYSIS,
        }
    }
}

impl From<CaptureError> for CliError {
    fn from(e: CaptureError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<canseal_core::analysis::AnalysisError> for CliError {
    fn from(e: canseal_core::analysis::AnalysisError) -> Self {
        CliError::Analysis(e.to_string())
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "canseal", version, about = "Speck-encrypted CAN payload experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct IdFlags {
    #[arg(long, value_parser = parse_id, default_value = "0x100")]
    data_id: u32,
    #[arg(long, value_parser = parse_id, default_value = "0x101")]
    diag_id: u32,
    /// Lag, in frames, probed for periodicity
    #[arg(long, default_value_t = SAWTOOTH_PERIOD)]
    lag: usize,
}

impl IdFlags {
    fn ids(&self) -> StreamIds {
        StreamIds {
            data_id: self.data_id,
            diag_id: self.diag_id,
            lag: self.lag,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the virtual node and write a run directory
    Simulate {
        #[command(flatten)]
        run: RunFlags,
        /// Output run directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze a single run directory
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        /// Report directory (default: <in>/report)
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        ids: IdFlags,
    },
    /// Compare an encrypted run with its plaintext twin and run the six
    /// experiment checks
    Compare {
        /// Encrypted run directory
        #[arg(long, requires = "plaintext", conflicts_with = "seed")]
        encrypted: Option<PathBuf>,
        /// Plaintext run directory
        #[arg(long, requires = "encrypted")]
        plaintext: Option<PathBuf>,
        /// Skip the host seal-cost measurement and use diagnostic frames
        #[arg(long)]
        no_host_timing: bool,
        /// Report directory
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long, default_value_t = SAWTOOTH_PERIOD)]
        lag: usize,
    },
    /// Check the Speck64/128 known-answer vector and roundtrip suite
    Kat {
        #[arg(long, hide = true, default_value_t = ROUNDS)]
        rounds: usize,
    },
    /// Convert a candump log into a run directory
    Ingest {
        #[arg(long)]
        candump: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { run, out } => cmd_simulate(&run, &out),
        Command::Analyze { input, out, ids } => cmd_analyze(&input, out.as_deref(), ids.ids()),
        Command::Compare {
            encrypted,
            plaintext,
            no_host_timing,
            out,
            run,
            lag,
        } => cmd_compare(
            encrypted.as_deref().zip(plaintext.as_deref()),
            &run,
            lag,
            !no_host_timing,
            out.as_deref(),
        ),
        Command::Kat { rounds } => cmd_kat(rounds),
        Command::Ingest { candump, out } => cmd_ingest(&candump, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn print_counts(dir: &Path, c: &Capture) {
    println!("wrote {} ({} mode)", dir.display(), c.meta.mode);
    for (id, frames) in c.streams() {
        println!("  0x{id:03X}: {} frames", frames.len());
    }
}

fn cmd_simulate(flags: &RunFlags, out: &Path) -> Result<(), CliError> {
    let cfg = flags.resolve()?;
    let capture = run(&cfg).map_err(|e| CliError::Validation(e.to_string()))?;
    write_capture(&capture, out)?;
    print_counts(out, &capture);
    Ok(())
}

fn cmd_analyze(input: &Path, out: Option<&Path>, ids: StreamIds) -> Result<(), CliError> {
    let capture = read_capture(input)?;
    let analysis = analyze_capture(&capture, ids)?;
    let mut text = String::new();
    render_capture(&mut text, &capture.meta.mode.to_string(), &analysis);
    if !capture.frames(ids.diag_id).is_empty() && capture.meta.rate_hz > 0.0 {
        if let Ok(o) = overhead_report(&capture, ids.diag_id, 1e6 / capture.meta.rate_hz) {
            render_overhead(&mut text, "diagnostic", &o);
        }
    }
    print!("{text}");
    let out = out.map_or_else(|| input.join("report"), Path::to_path_buf);
    let label = capture.meta.mode.to_string();
    write_capture_tables(&out, &label, &capture, &analysis, ids).map_err(io(&out))?;
    fs::write(out.join("report.txt"), &text).map_err(io(&out))?;
    println!("report written to {}", out.display());
    Ok(())
}

fn cmd_compare(
    dirs: Option<(&Path, &Path)>,
    flags: &RunFlags,
    lag: usize,
    host_timing: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = flags.resolve()?;
    let (enc, plain) = match dirs {
        Some((e, p)) => (read_capture(e)?, read_capture(p)?),
        None => run_pair(&cfg).map_err(|e| CliError::Validation(e.to_string()))?,
    };
    let ids = StreamIds {
        data_id: cfg.data_id,
        diag_id: cfg.diag_id,
        lag,
    };
    let mut report = semantic_report(&enc, &plain, ids)?;
    if host_timing {
        report.host_overhead = Some(host_overhead(&cfg)?);
    }
    print!("{}", canseal_core::report::render_report(&report));

    if enc.meta.mode == Mode::Encrypted {
        let audit = open_audit(&enc, ids.data_id, &expand_key(&cfg.key));
        println!(
            "[open audit] {} of {} data frames fail the padding check ({:.2}%)",
            audit.padding_violations,
            audit.frames,
            100.0 * audit.violation_rate()
        );
    }
    if let Some(dir) = out {
        write_report(dir, &report, &enc, &plain).map_err(io(dir))?;
        println!("report written to {}", dir.display());
    }

    let checks = report.checks();
    let passed = checks.iter().filter(|c| c.passed).count();
    println!("{passed}/{} experiment checks passed", checks.len());
    if passed == checks.len() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "{} experiment check(s) failed",
            checks.len() - passed
        )))
    }
}

/// SplitMix64, for the seeded roundtrip cases.
mod rand_free {
    pub struct SplitMix64(pub u64);

    impl SplitMix64 {
        pub fn next(&mut self) -> u64 {
            self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        }
    }
}

fn cmd_kat(rounds: usize) -> Result<(), CliError> {
    let outcome = kat::check_with(
        |b, ks| speck::encrypt_reduced(b, ks, rounds),
        decrypt_block,
    );
    println!(
        "known answer: encrypt -> ({:08x}, {:08x}) expected ({:08x}, {:08x}); decrypt -> ({:08x}, {:08x})",
        outcome.encrypted.x,
        outcome.encrypted.y,
        kat::CIPHERTEXT.x,
        kat::CIPHERTEXT.y,
        outcome.decrypted.x,
        outcome.decrypted.y
    );
    let mut rng = SplitMix64(0x5eed);
    let mut roundtrip_failures = 0;
    const CASES: usize = 10_000;
    for _ in 0..CASES {
        let key = Key128::from_u128(u128::from(rng.next()) << 64 | u128::from(rng.next()));
        let ks = expand_key(&key);
        let b = Block64::from_u64(rng.next());
        if decrypt_block(speck::encrypt_reduced(b, &ks, rounds), &ks) != b {
            roundtrip_failures += 1;
        }
    }
    println!("roundtrip: {} of {CASES} failed", roundtrip_failures);
    if outcome.passed() && roundtrip_failures == 0 {
        println!("PASS");
        Ok(())
    } else {
        println!("FAIL");
        Err(CliError::CheckFailed("known-answer test failed".into()))
    }
}

fn cmd_ingest(candump: &Path, out: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(candump).map_err(io(candump))?;
    let frames = parse_candump(&text).map_err(|e| CliError::Validation(e.to_string()))?;
    let duration_us = frames.last().map_or(0, |f| f.timestamp_us);
    let busiest = {
        let mut counts = std::collections::HashMap::new();
        for f in &frames {
            *counts.entry(f.id).or_insert(0usize) += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    };
    let rate_hz = if duration_us > 0 && busiest > 1 {
        (busiest - 1) as f64 * 1e6 / duration_us as f64
    } else {
        0.0
    };
    let mut capture = Capture::new(RunMeta {
        seed: 0,
        mode: Mode::External,
        duration_s: duration_us as f64 / 1e6,
        rate_hz,
    });
    for (i, f) in frames.into_iter().enumerate() {
        capture
            .push(f)
            .map_err(|e| CliError::Validation(format!("record {}: {e}", i + 1)))?;
    }
    write_capture(&capture, out)?;
    print_counts(out, &capture);
    Ok(())
}
