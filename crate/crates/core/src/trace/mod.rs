//! Per-instruction trace records, their text form, and the bounded channel
//! that carries them from the functional core to the timing model.
//!
//! A serialized record is one line of 11 space-separated fields:
//!
//! ```text
//! <instr_no> <pid> <osid> <pc:08x> <dva:08x> <rs1> <rs2> <rd> <v> <prv:02b> <flags:05b>
//! ```
//!
//! Flag bits are ordered load, store, conditional branch, taken branch or
//! jump, exit.

mod channel;

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

pub use channel::{channel, ChannelError, StreamError, TraceReceiver, TraceSender};

use crate::mode::{HartMode, Privilege};

bitflags::bitflags! {
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct TraceFlags: u8 {
        const LOAD = 0b10000;
        const STORE = 0b01000;
        const COND_BRANCH = 0b00100;
        /// Taken conditional branch, unconditional jump, or trap redirect.
        const TAKEN = 0b00010;
        const EXIT = 0b00001;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub instr_no: u64,
    pub pid: u32,
    pub osid: u32,
    pub pc: u32,
    /// Data virtual address; zero unless the record is a load or store.
    pub dva: u32,
    pub rs1: u8,
    pub rs2: u8,
    pub rd: u8,
    pub mode: HartMode,
    pub flags: TraceFlags,
}

impl TraceRecord {
    /// A record with no operands or flags, for building traces by hand.
    pub fn new(instr_no: u64, pc: u32, mode: HartMode) -> Self {
        TraceRecord { instr_no, pid: 0, osid: 0, pc, dva: 0, rs1: 0, rs2: 0, rd: 0, mode, flags: TraceFlags::empty() }
    }

    pub fn is_load(&self) -> bool {
        self.flags.contains(TraceFlags::LOAD)
    }

    pub fn is_store(&self) -> bool {
        self.flags.contains(TraceFlags::STORE)
    }

    pub fn is_exit(&self) -> bool {
        self.flags.contains(TraceFlags::EXIT)
    }

    pub fn is_memory(&self) -> bool {
        self.flags.intersects(TraceFlags::LOAD | TraceFlags::STORE)
    }

    /// Control-flow instructions resolve in ID and read their sources there.
    pub fn is_control(&self) -> bool {
        self.flags.intersects(TraceFlags::COND_BRANCH | TraceFlags::TAKEN)
    }

    pub fn redirects(&self) -> bool {
        self.flags.contains(TraceFlags::TAKEN)
    }

    pub fn check(&self) -> Result<(), TraceParseError> {
        if self.is_load() && self.is_store() {
            return Err(TraceParseError::Inconsistent("load and store flags both set"));
        }
        if self.dva != 0 && !self.is_memory() {
            return Err(TraceParseError::Inconsistent("data address set without load/store flag"));
        }
        if self.rs1 > 31 || self.rs2 > 31 || self.rd > 31 {
            return Err(TraceParseError::Inconsistent("register index out of range"));
        }
        Ok(())
    }

    /// The newline-terminated text form.
    pub fn serialize(&self) -> String {
        format!("{self}\n")
    }

    pub fn parse(line: &str) -> Result<TraceRecord, TraceParseError> {
        line.parse()
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {:08x} {:08x} {} {} {} {} {:02b} {:05b}",
            self.instr_no,
            self.pid,
            self.osid,
            self.pc,
            self.dva,
            self.rs1,
            self.rs2,
            self.rd,
            self.mode.virtualized() as u8,
            self.mode.privilege().bits(),
            self.flags.bits()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceParseError {
    #[error("expected 11 fields, found {0}")]
    FieldCount(usize),
    #[error("field {index} (`{text}`) is malformed")]
    BadField { index: usize, text: String },
    #[error("inconsistent record: {0}")]
    Inconsistent(&'static str),
}

fn bad(index: usize, text: &str) -> TraceParseError {
    TraceParseError::BadField { index, text: text.to_owned() }
}

fn dec<T: FromStr>(fields: &[&str], i: usize) -> Result<T, TraceParseError> {
    let s = fields[i];
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad(i, s));
    }
    s.parse().map_err(|_| bad(i, s))
}

fn radix(fields: &[&str], i: usize, radix: u32, width: usize) -> Result<u32, TraceParseError> {
    let s = fields[i];
    if s.len() != width || !s.chars().all(|c| c.is_digit(radix)) {
        return Err(bad(i, s));
    }
    u32::from_str_radix(s, radix).map_err(|_| bad(i, s))
}

impl FromStr for TraceRecord {
    type Err = TraceParseError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 11 {
            return Err(TraceParseError::FieldCount(fields.len()));
        }
        let reg = |i: usize| -> Result<u8, TraceParseError> {
            let r: u8 = dec(&fields, i)?;
            if r > 31 {
                return Err(bad(i, fields[i]));
            }
            Ok(r)
        };
        let v = match fields[8] {
            "0" => false,
            "1" => true,
            other => return Err(bad(8, other)),
        };
        let prv = Privilege::from_bits(radix(&fields, 9, 2, 2)? as u8).ok_or_else(|| bad(9, fields[9]))?;
        let mode = HartMode::new(v, prv).ok_or_else(|| bad(9, fields[9]))?;
        let flags = TraceFlags::from_bits(radix(&fields, 10, 2, 5)? as u8).ok_or_else(|| bad(10, fields[10]))?;
        let rec = TraceRecord {
            instr_no: dec(&fields, 0)?,
            pid: dec(&fields, 1)?,
            osid: dec(&fields, 2)?,
            pc: radix(&fields, 3, 16, 8)?,
            dva: radix(&fields, 4, 16, 8)?,
            rs1: reg(5)?,
            rs2: reg(6)?,
            rd: reg(7)?,
            mode,
            flags,
        };
        rec.check()?;
        Ok(rec)
    }
}

/// Writes records in `.trace` form, one per line.
pub fn write_trace<'a, W: Write>(mut out: W, records: impl IntoIterator<Item = &'a TraceRecord>) -> io::Result<()> {
    for r in records {
        writeln!(out, "{r}")?;
    }
    out.flush()
}

#[derive(Debug, thiserror::Error)]
pub enum TraceFileError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: TraceParseError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads a `.trace` file. Blank lines are skipped.
pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceRecord>, TraceFileError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(line.parse().map_err(|source| TraceFileError::Parse { line: i + 1, source })?);
    }
    Ok(out)
}
