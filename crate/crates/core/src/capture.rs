//! Per-arbitration-ID capture storage and the on-disk run directory:
//! `<run>/meta.txt` plus one `<HEXID>.csv` per observed identifier.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::frame::{parse_csv_record, parse_hex_id, to_csv_record, Frame, HexId, CSV_HEADER};

pub const META_FILE: &str = "meta.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Encrypted,
    Plaintext,
    /// Traffic ingested from a foreign log; payload semantics unknown.
    External,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Encrypted => "encrypted",
            Mode::Plaintext => "plaintext",
            Mode::External => "external",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "encrypted" => Ok(Mode::Encrypted),
            "plaintext" => Ok(Mode::Plaintext),
            "external" => Ok(Mode::External),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub seed: u64,
    pub mode: Mode,
    pub duration_s: f64,
    pub rate_hz: f64,
}

/// Record alias: a capture stores frames exactly as received.
pub type CaptureRecord = Frame;

#[derive(Debug, Clone, PartialEq)]
pub struct Capture {
    pub meta: RunMeta,
    streams: BTreeMap<u32, Vec<Frame>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CaptureError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("schema mismatch in {path}: {reason}")]
    Schema { path: PathBuf, reason: String },
    #[error("frame on id 0x{got:X} does not belong to stream 0x{stream:X}")]
    WrongStream { stream: u32, got: u32 },
    #[error("timestamps on id 0x{id:X} go backwards at record {index}")]
    Unordered { id: u32, index: usize },
    #[error("invalid frame on id 0x{id:X}: {violation}")]
    InvalidFrame {
        id: u32,
        violation: crate::frame::FrameViolation,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CaptureError + '_ {
    move |source| CaptureError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn schema(path: &Path, reason: impl Into<String>) -> CaptureError {
    CaptureError::Schema {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

impl Capture {
    pub fn new(meta: RunMeta) -> Self {
        Self {
            meta,
            streams: BTreeMap::new(),
        }
    }

    /// Appends a frame to its identifier's stream.
    pub fn push(&mut self, frame: Frame) -> Result<(), CaptureError> {
        frame
            .validate()
            .map_err(|violation| CaptureError::InvalidFrame { id: frame.id, violation })?;
        let stream = self.streams.entry(frame.id).or_default();
        if let Some(last) = stream.last() {
            if frame.timestamp_us < last.timestamp_us {
                return Err(CaptureError::Unordered {
                    id: frame.id,
                    index: stream.len(),
                });
            }
        }
        stream.push(frame);
        Ok(())
    }

    pub fn frames(&self, id: u32) -> &[Frame] {
        self.streams.get(&id).map_or(&[], Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.streams.keys().copied()
    }

    pub fn streams(&self) -> impl Iterator<Item = (u32, &[Frame])> {
        self.streams.iter().map(|(id, v)| (*id, v.as_slice()))
    }

    pub fn total_frames(&self) -> usize {
        self.streams.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    /// Checks the per-stream invariants; used after reading foreign data.
    pub fn check(&self) -> Result<(), CaptureError> {
        for (&id, frames) in &self.streams {
            for (i, f) in frames.iter().enumerate() {
                if f.id != id {
                    return Err(CaptureError::WrongStream { stream: id, got: f.id });
                }
                f.validate()
                    .map_err(|violation| CaptureError::InvalidFrame { id, violation })?;
                if i > 0 && f.timestamp_us < frames[i - 1].timestamp_us {
                    return Err(CaptureError::Unordered { id, index: i });
                }
            }
        }
        Ok(())
    }
}

fn meta_text(meta: &RunMeta) -> String {
    format!(
        "seed={}\nmode={}\nduration_s={}\nrate_hz={}\n",
        meta.seed, meta.mode, meta.duration_s, meta.rate_hz
    )
}

fn parse_meta(path: &Path, text: &str) -> Result<RunMeta, CaptureError> {
    let mut seed = None;
    let mut mode = None;
    let mut duration_s = None;
    let mut rate_hz = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| schema(path, format!("not a key=value line: `{line}`")))?;
        let v = v.trim();
        let bad = |what: &str| schema(path, format!("bad {what} value `{v}`"));
        match k.trim() {
            "seed" => seed = Some(v.parse::<u64>().map_err(|_| bad("seed"))?),
            "mode" => mode = Some(v.parse::<Mode>().map_err(|_| bad("mode"))?),
            "duration_s" => duration_s = Some(v.parse::<f64>().map_err(|_| bad("duration_s"))?),
            "rate_hz" => rate_hz = Some(v.parse::<f64>().map_err(|_| bad("rate_hz"))?),
            other => return Err(schema(path, format!("unknown key `{other}`"))),
        }
    }
    let missing = |k: &str| schema(path, format!("missing key `{k}`"));
    Ok(RunMeta {
        seed: seed.ok_or_else(|| missing("seed"))?,
        mode: mode.ok_or_else(|| missing("mode"))?,
        duration_s: duration_s.ok_or_else(|| missing("duration_s"))?,
        rate_hz: rate_hz.ok_or_else(|| missing("rate_hz"))?,
    })
}

/// Writes `c` into `dir`, creating it if needed.
pub fn write_capture(c: &Capture, dir: &Path) -> Result<(), CaptureError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let meta_path = dir.join(META_FILE);
    fs::write(&meta_path, meta_text(&c.meta)).map_err(io_err(&meta_path))?;
    for (id, frames) in c.streams() {
        let extended = frames.first().is_some_and(|f| f.extended);
        let path = dir.join(format!("{}.csv", HexId { id, extended }));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> io::Result<()> {
            writeln!(w, "{CSV_HEADER}")?;
            for f in frames {
                writeln!(w, "{}", to_csv_record(f))?;
            }
            w.flush()
        };
        write().map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn read_capture(dir: &Path) -> Result<Capture, CaptureError> {
    let meta_path = dir.join(META_FILE);
    if !meta_path.is_file() {
        return Err(schema(dir, format!("no {META_FILE}; not a run directory")));
    }
    let meta_src = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let mut capture = Capture::new(parse_meta(&meta_path, &meta_src)?);

    let mut csvs: Vec<(u32, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let (id, _) = parse_hex_id(stem)
            .ok_or_else(|| schema(&path, "file name is not a hex arbitration id"))?;
        csvs.push((id, path));
    }
    csvs.sort();

    for (id, path) in csvs {
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(CSV_HEADER) {
            return Err(schema(&path, "missing or wrong header line"));
        }
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f = parse_csv_record(line)
                .map_err(|e| schema(&path, format!("record {}: {e}", n + 1)))?;
            if f.id != id {
                return Err(CaptureError::WrongStream { stream: id, got: f.id });
            }
            capture.push(f)?;
        }
    }
    Ok(capture)
}
