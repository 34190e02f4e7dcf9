//! Run configuration from flags, optionally layered over a `key=value` file.

use std::fs;
use std::path::{Path, PathBuf};

use canseal_core::node::{RunConfig, TimingMode};
use canseal_core::{Key128, Mode};
use clap::Args;

use crate::CliError;

pub fn parse_id(s: &str) -> Result<u32, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u32::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid identifier `{s}`: {e}"))
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s.parse()? {
        Mode::External => Err("mode must be encrypted or plaintext".into()),
        m => Ok(m),
    }
}

fn parse_key(s: &str) -> Result<Key128, String> {
    Key128::from_hex(s).map_err(|e| e.to_string())
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("not a boolean: `{other}`")),
    }
}

/// Every node parameter as an optional flag. Unset flags fall back to the
/// config file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// encrypted or plaintext
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run length in seconds of virtual time
    #[arg(long)]
    pub duration: Option<u32>,
    /// Transmit rate in Hz
    #[arg(long)]
    pub rate: Option<u32>,
    /// 128-bit key as 32 hex digits
    #[arg(long, value_parser = parse_key)]
    pub key: Option<Key128>,
    #[arg(long, value_parser = parse_id)]
    pub data_id: Option<u32>,
    #[arg(long, value_parser = parse_id)]
    pub diag_id: Option<u32>,
    /// Offset added to app_data to form shifted_data
    #[arg(long)]
    pub shift: Option<u8>,
    /// Value of the constant reference byte
    #[arg(long, value_parser = parse_id)]
    pub constant: Option<u32>,
    /// virtual (reproducible, zero timing bytes) or host (measured)
    #[arg(long)]
    pub timing: Option<TimingMode>,
    /// Draw freshness bytes from the OS instead of the seeded generator
    #[arg(long)]
    pub os_entropy: bool,
    /// key=value file with the same keys as the flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl RunFlags {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            apply_file(&mut cfg, path)?;
        }
        if let Some(v) = self.mode {
            cfg.mode = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.duration {
            cfg.duration_s = v;
        }
        if let Some(v) = self.rate {
            cfg.rate_hz = v;
        }
        if let Some(v) = self.key {
            cfg.key = v;
        }
        if let Some(v) = self.data_id {
            cfg.data_id = v;
        }
        if let Some(v) = self.diag_id {
            cfg.diag_id = v;
        }
        if let Some(v) = self.shift {
            cfg.shift_offset = v;
        }
        if let Some(v) = self.constant {
            cfg.constant_value = byte(v)?;
        }
        if let Some(v) = self.timing {
            cfg.timing = v;
        }
        if self.os_entropy {
            cfg.os_entropy = true;
        }
        cfg.validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(cfg)
    }
}

fn byte(v: u32) -> Result<u8, CliError> {
    u8::try_from(v).map_err(|_| CliError::Validation(format!("constant {v} does not fit in a byte")))
}

fn apply_file(cfg: &mut RunConfig, path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| CliError::Validation(format!("{}:{}: {msg}", path.display(), n + 1));
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad("expected key=value".into()))?;
        let v = v.trim();
        let num = |v: &str| v.parse::<u64>().map_err(|e| bad(format!("{k}: {e}")));
        match k.trim().replace('_', "-").as_str() {
            "mode" => cfg.mode = parse_mode(v).map_err(bad)?,
            "seed" => cfg.seed = num(v)?,
            "duration" => cfg.duration_s = u32::try_from(num(v)?).map_err(|e| bad(e.to_string()))?,
            "rate" => cfg.rate_hz = u32::try_from(num(v)?).map_err(|e| bad(e.to_string()))?,
            "key" => cfg.key = parse_key(v).map_err(bad)?,
            "data-id" => cfg.data_id = parse_id(v).map_err(bad)?,
            "diag-id" => cfg.diag_id = parse_id(v).map_err(bad)?,
            "shift" => cfg.shift_offset = u8::try_from(num(v)?).map_err(|e| bad(e.to_string()))?,
            "constant" => cfg.constant_value = byte(parse_id(v).map_err(bad)?)?,
            "timing" => cfg.timing = v.parse().map_err(bad)?,
            "os-entropy" => cfg.os_entropy = parse_bool(v).map_err(bad)?,
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }
    Ok(())
}
