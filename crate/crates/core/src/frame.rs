//! CAN frame model and the two line formats it is read from and written to:
//! the run-directory CSV layout and `candump -L` text.

use std::fmt;

pub const STANDARD_ID_LIMIT: u32 = 1 << 11;
pub const EXTENDED_ID_LIMIT: u32 = 1 << 29;
pub const MAX_DLC: u8 = 8;

/// Header line of every per-ID capture file.
pub const CSV_HEADER: &str = "timestamp_us,arb_id_hex,dlc,b0,b1,b2,b3,b4,b5,b6,b7";

/// One CAN message as seen on the bus.
///
/// Only the identifier, DLC and data field are modelled; SOF, RTR, CRC and
/// ACK slots of the physical frame are out of scope.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub id: u32,
    pub extended: bool,
    pub dlc: u8,
    pub payload: Vec<u8>,
    /// Microseconds since the start of the capture.
    pub timestamp_us: u64,
}

/// The first bound a frame breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum FrameViolation {
    #[error("id exceeds 11 bits")]
    StandardIdRange,
    #[error("id exceeds 29 bits")]
    ExtendedIdRange,
    #[error("dlc exceeds 8")]
    DlcRange,
    #[error("payload length does not match dlc")]
    PayloadLength,
}

impl Frame {
    /// Builds a standard (11-bit) frame whose DLC is the payload length.
    pub fn standard(id: u32, payload: &[u8], timestamp_us: u64) -> Self {
        Self {
            id,
            extended: false,
            dlc: payload.len() as u8,
            payload: payload.to_vec(),
            timestamp_us,
        }
    }

    pub fn extended(id: u32, payload: &[u8], timestamp_us: u64) -> Self {
        Self {
            extended: true,
            ..Self::standard(id, payload, timestamp_us)
        }
    }

    pub fn validate(&self) -> Result<(), FrameViolation> {
        validate_frame(self)
    }

    pub fn byte(&self, index: usize) -> Option<u8> {
        self.payload.get(index).copied()
    }

    /// Full 8-byte data field, zero-filled past the DLC.
    pub fn data8(&self) -> [u8; 8] {
        let mut out = [0u8; 8];
        let n = self.payload.len().min(8);
        out[..n].copy_from_slice(&self.payload[..n]);
        out
    }
}

pub fn validate_frame(f: &Frame) -> Result<(), FrameViolation> {
    if !f.extended && f.id >= STANDARD_ID_LIMIT {
        return Err(FrameViolation::StandardIdRange);
    }
    if f.extended && f.id >= EXTENDED_ID_LIMIT {
        return Err(FrameViolation::ExtendedIdRange);
    }
    if f.dlc > MAX_DLC {
        return Err(FrameViolation::DlcRange);
    }
    if f.payload.len() != usize::from(f.dlc) {
        return Err(FrameViolation::PayloadLength);
    }
    Ok(())
}

/// Identifier as text: three hex digits for standard frames, eight for
/// extended ones. Parsers use the digit count to recover the width.
pub struct HexId {
    pub id: u32,
    pub extended: bool,
}

impl fmt::Display for HexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.extended {
            write!(f, "{:08X}", self.id)
        } else {
            write!(f, "{:03X}", self.id)
        }
    }
}

pub fn parse_hex_id(s: &str) -> Option<(u32, bool)> {
    if s.is_empty() || s.len() > 8 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    let id = u32::from_str_radix(s, 16).ok()?;
    Some((id, s.len() > 3))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("malformed line: column `{column}`: {reason}")]
    Malformed { column: &'static str, reason: String },
    #[error("field out of range: {0}")]
    OutOfRange(FrameViolation),
    #[error("odd number of hex digits in payload")]
    OddHexPayload,
}

fn malformed(column: &'static str, reason: impl Into<String>) -> ParseError {
    ParseError::Malformed {
        column,
        reason: reason.into(),
    }
}

/// Serializes a frame as `timestamp_us,0xID,dlc,b0,...,b7` with unused byte
/// columns left empty.
pub fn to_csv_record(f: &Frame) -> String {
    let mut line = format!(
        "{},0x{},{}",
        f.timestamp_us,
        HexId {
            id: f.id,
            extended: f.extended
        },
        f.dlc
    );
    for i in 0..8 {
        line.push(',');
        if let Some(b) = f.payload.get(i) {
            line.push_str(&format!("{b:02X}"));
        }
    }
    line
}

const BYTE_COLUMNS: [&str; 8] = ["b0", "b1", "b2", "b3", "b4", "b5", "b6", "b7"];

pub fn parse_csv_record(line: &str) -> Result<Frame, ParseError> {
    let cols: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').collect();
    if cols.len() != 11 {
        return Err(malformed(
            "line",
            format!("expected 11 columns, found {}", cols.len()),
        ));
    }
    let timestamp_us = cols[0]
        .trim()
        .parse::<u64>()
        .map_err(|e| malformed("timestamp_us", e.to_string()))?;
    let id_text = cols[1].trim();
    let id_hex = id_text
        .strip_prefix("0x")
        .or_else(|| id_text.strip_prefix("0X"))
        .ok_or_else(|| malformed("arb_id_hex", "missing 0x prefix"))?;
    let (id, extended) =
        parse_hex_id(id_hex).ok_or_else(|| malformed("arb_id_hex", "not a hex identifier"))?;
    let dlc = cols[2]
        .trim()
        .parse::<u8>()
        .map_err(|e| malformed("dlc", e.to_string()))?;
    if dlc > MAX_DLC {
        return Err(ParseError::OutOfRange(FrameViolation::DlcRange));
    }
    let mut payload = Vec::with_capacity(usize::from(dlc));
    for (i, col) in cols[3..].iter().enumerate() {
        let col = col.trim();
        if i < usize::from(dlc) {
            if col.len() != 2 {
                return Err(malformed(BYTE_COLUMNS[i], "expected two hex digits"));
            }
            let b = u8::from_str_radix(col, 16)
                .map_err(|e| malformed(BYTE_COLUMNS[i], e.to_string()))?;
            payload.push(b);
        } else if !col.is_empty() {
            return Err(malformed(BYTE_COLUMNS[i], "byte present beyond dlc"));
        }
    }
    let frame = Frame {
        id,
        extended,
        dlc,
        payload,
        timestamp_us,
    };
    validate_frame(&frame).map_err(ParseError::OutOfRange)?;
    Ok(frame)
}

/// Formats a frame as a `candump -L` line.
pub fn to_candump_line(f: &Frame, iface: &str) -> String {
    let hex: String = f.payload.iter().map(|b| format!("{b:02X}")).collect();
    format!(
        "({}.{:06}) {} {}#{}",
        f.timestamp_us / 1_000_000,
        f.timestamp_us % 1_000_000,
        iface,
        HexId {
            id: f.id,
            extended: f.extended
        },
        hex
    )
}

/// Parses `(<seconds.fraction>) <iface> <HEXID>#<HEXBYTES>`.
///
/// The returned timestamp is the absolute line time in microseconds;
/// [`parse_candump`] rebases a whole log onto its first record.
pub fn parse_candump_line(line: &str) -> Result<Frame, ParseError> {
    let line = line.trim();
    let rest = line
        .strip_prefix('(')
        .ok_or_else(|| malformed("timestamp", "missing '('"))?;
    let (ts, rest) = rest
        .split_once(')')
        .ok_or_else(|| malformed("timestamp", "missing ')'"))?;
    let timestamp_us = parse_seconds_us(ts)?;
    let mut fields = rest.split_whitespace();
    let _iface = fields
        .next()
        .ok_or_else(|| malformed("interface", "missing"))?;
    let body = fields.next().ok_or_else(|| malformed("frame", "missing"))?;
    if fields.next().is_some() {
        return Err(malformed("frame", "trailing fields"));
    }
    let (id_hex, data_hex) = body
        .split_once('#')
        .ok_or_else(|| malformed("frame", "missing '#'"))?;
    let (id, extended) =
        parse_hex_id(id_hex).ok_or_else(|| malformed("id", "not a hex identifier"))?;
    if !data_hex.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(malformed("data", "not hex"));
    }
    if data_hex.len() % 2 != 0 {
        return Err(ParseError::OddHexPayload);
    }
    let payload: Vec<u8> = (0..data_hex.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&data_hex[i..i + 2], 16).expect("checked hex"))
        .collect();
    if payload.len() > usize::from(MAX_DLC) {
        return Err(ParseError::OutOfRange(FrameViolation::DlcRange));
    }
    let frame = Frame {
        id,
        extended,
        dlc: payload.len() as u8,
        payload,
        timestamp_us,
    };
    validate_frame(&frame).map_err(ParseError::OutOfRange)?;
    Ok(frame)
}

fn parse_seconds_us(ts: &str) -> Result<u64, ParseError> {
    let (secs, frac) = ts.split_once('.').unwrap_or((ts, ""));
    if secs.is_empty() || !secs.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed("timestamp", "seconds are not decimal"));
    }
    if !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed("timestamp", "fraction is not decimal"));
    }
    let secs: u64 = secs
        .parse()
        .map_err(|_| malformed("timestamp", "seconds overflow"))?;
    // Sub-microsecond digits are truncated.
    let mut micros = 0u64;
    for i in 0..6 {
        let d = frac.as_bytes().get(i).map_or(0, |b| u64::from(b - b'0'));
        micros = micros * 10 + d;
    }
    secs.checked_mul(1_000_000)
        .and_then(|v| v.checked_add(micros))
        .ok_or_else(|| malformed("timestamp", "overflow"))
}

/// A candump parse failure tagged with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {source}")]
pub struct CandumpError {
    pub line: usize,
    pub source: ParseError,
}

/// Parses a whole candump log, skipping blank lines, and rebases timestamps
/// so the first record sits at 0.
pub fn parse_candump(text: &str) -> Result<Vec<Frame>, CandumpError> {
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f = parse_candump_line(line).map_err(|source| CandumpError {
            line: i + 1,
            source,
        })?;
        frames.push(f);
    }
    if let Some(origin) = frames.first().map(|f| f.timestamp_us) {
        for f in &mut frames {
            f.timestamp_us = f.timestamp_us.saturating_sub(origin);
        }
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validation_bounds() {
        assert_eq!(validate_frame(&Frame::standard(0x100, &[0; 8], 0)), Ok(()));
        assert_eq!(
            validate_frame(&Frame::standard(0x800, &[0; 8], 0)),
            Err(FrameViolation::StandardIdRange)
        );
        assert_eq!(
            FrameViolation::StandardIdRange.to_string(),
            "id exceeds 11 bits"
        );
        let mut f = Frame::standard(0x100, &[0; 9], 0);
        assert_eq!(validate_frame(&f), Err(FrameViolation::DlcRange));
        assert_eq!(FrameViolation::DlcRange.to_string(), "dlc exceeds 8");
        f.dlc = 4;
        assert_eq!(validate_frame(&f), Err(FrameViolation::PayloadLength));
        assert_eq!(
            validate_frame(&Frame::extended(0x1FFF_FFFF, &[], 0)),
            Ok(())
        );
        assert_eq!(
            validate_frame(&Frame::extended(0x2000_0000, &[], 0)),
            Err(FrameViolation::ExtendedIdRange)
        );
    }

    #[test]
    fn csv_layout() {
        let f = Frame::standard(0x100, &[0, 1, 2, 3, 4, 5, 6, 7], 10_000);
        assert_eq!(to_csv_record(&f), "10000,0x100,8,00,01,02,03,04,05,06,07");
        let short = Frame::standard(0x100, &[0xAA, 1, 2, 3], 5);
        assert_eq!(to_csv_record(&short), "5,0x100,4,AA,01,02,03,,,,");
        assert_eq!(parse_csv_record("5,0x100,4,AA,01,02,03,,,,").unwrap(), short);
    }

    #[test]
    fn csv_errors_name_the_column() {
        let err = parse_csv_record("x,0x100,1,00,,,,,,,").unwrap_err();
        assert!(matches!(err, ParseError::Malformed { column: "timestamp_us", .. }));
        let err = parse_csv_record("1,100,1,00,,,,,,,").unwrap_err();
        assert!(matches!(err, ParseError::Malformed { column: "arb_id_hex", .. }));
        let err = parse_csv_record("1,0x100,2,00,G1,,,,,,").unwrap_err();
        assert!(matches!(err, ParseError::Malformed { column: "b1", .. }));
        let err = parse_csv_record("1,0x100,9,00,,,,,,,").unwrap_err();
        assert_eq!(err, ParseError::OutOfRange(FrameViolation::DlcRange));
        let err = parse_csv_record("1,0x800,0,,,,,,,,").unwrap_err();
        assert_eq!(err, ParseError::OutOfRange(FrameViolation::StandardIdRange));
        let err = parse_csv_record("1,0x100,0").unwrap_err();
        assert!(matches!(err, ParseError::Malformed { column: "line", .. }));
    }

    #[test]
    fn candump_examples() {
        let f = parse_candump_line("(0.000000) vcan0 100#0001020304050607").unwrap();
        assert_eq!(f, Frame::standard(0x100, &[0, 1, 2, 3, 4, 5, 6, 7], 0));
        let f = parse_candump_line("(0.010000) vcan0 101#AABB").unwrap();
        assert_eq!((f.id, f.dlc, f.payload.clone()), (0x101, 2, vec![0xAA, 0xBB]));
        assert_eq!(f.timestamp_us, 10_000);
        let f = parse_candump_line("(0.0) vcan0 1FFFFFFF#00").unwrap();
        assert!(f.extended);
        assert_eq!(f.id, 0x1FFF_FFFF);
    }

    #[test]
    fn candump_errors() {
        assert_eq!(
            parse_candump_line("(0.0) vcan0 100#ABC"),
            Err(ParseError::OddHexPayload)
        );
        assert!(matches!(
            parse_candump_line("0.0 vcan0 100#AB"),
            Err(ParseError::Malformed { .. })
        ));
        assert!(matches!(
            parse_candump_line("(0.0) vcan0 100AB"),
            Err(ParseError::Malformed { .. })
        ));
        let err = parse_candump("(1.0) can0 100#00\n\n(1.5) can0 10x#00\n").unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn candump_log_is_rebased() {
        let frames = parse_candump("(100.250000) can0 100#00\n(100.260000) can0 101#01\n").unwrap();
        assert_eq!(frames[0].timestamp_us, 0);
        assert_eq!(frames[1].timestamp_us, 10_000);
    }

    fn arb_frame() -> impl Strategy<Value = Frame> {
        (
            any::<bool>(),
            any::<u32>(),
            proptest::collection::vec(any::<u8>(), 0..=8),
            0u64..1_000_000_000_000,
        )
            .prop_map(|(extended, raw, payload, ts)| {
                let id = if extended { raw % EXTENDED_ID_LIMIT } else { raw % STANDARD_ID_LIMIT };
                let mut f = Frame::standard(id, &payload, ts);
                f.extended = extended;
                f
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 1000, rng_seed: proptest::test_runner::RngSeed::Fixed(7), ..ProptestConfig::default() })]

        #[test]
        fn csv_roundtrip(f in arb_frame()) {
            prop_assert_eq!(parse_csv_record(&to_csv_record(&f)).unwrap(), f);
        }

        #[test]
        fn candump_roundtrip(f in arb_frame()) {
            prop_assert_eq!(parse_candump_line(&to_candump_line(&f, "vcan0")).unwrap(), f);
        }

        #[test]
        fn validation_matches_bounds(extended in any::<bool>(), id in any::<u32>(), dlc in 0u8..=12) {
            let f = Frame { id, extended, dlc, payload: vec![0; usize::from(dlc)], timestamp_us: 0 };
            let limit = if extended { EXTENDED_ID_LIMIT } else { STANDARD_ID_LIMIT };
            prop_assert_eq!(validate_frame(&f).is_ok(), id < limit && dlc <= 8);
        }
    }
}
