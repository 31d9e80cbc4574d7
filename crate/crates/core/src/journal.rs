//! Plain-text journal of measurements.
//!
//! ```text
//! #noisyrank-journal v1 L=<L>
//! 1,<lesser>,<greater>
//! 2,<lesser>,<greater>
//! ```
//!
//! UTF-8, LF line endings, decimal integers. Transcript files for scripted
//! replay use the same format.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::model::{ElementId, Measurement, MeasurementLog};

pub const HEADER_PREFIX: &str = "#noisyrank-journal v1 L=";

pub fn format_header(size: usize) -> String {
    format!("{HEADER_PREFIX}{size}\n")
}

pub fn format_record(m: &Measurement) -> String {
    format!("{},{},{}\n", m.sequence_number, m.lesser, m.greater)
}

/// Serialises a whole log.
pub fn to_string(log: &MeasurementLog) -> String {
    let mut out = format_header(log.size());
    for m in log.records() {
        out.push_str(&format_record(m));
    }
    out
}

/// Parses a journal, validating ids and the gap-free sequence.
pub fn parse(reader: impl Read) -> Result<MeasurementLog> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| CoreError::Journal("empty journal".into()))??;
    let size: usize = header
        .strip_prefix(HEADER_PREFIX)
        .and_then(|s| s.trim_end_matches('\r').parse().ok())
        .ok_or_else(|| CoreError::Journal(format!("bad header line {header:?}")))?;
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parsed = match fields.as_slice() {
            [s, l, g] => s
                .parse::<u64>()
                .ok()
                .zip(l.parse::<u32>().ok())
                .zip(g.parse::<u32>().ok()),
            _ => None,
        };
        let ((seq, lesser), greater) =
            parsed.ok_or_else(|| CoreError::Journal(format!("line {}: malformed record {line:?}", k + 2)))?;
        records.push(Measurement {
            lesser: ElementId(lesser),
            greater: ElementId(greater),
            sequence_number: seq,
        });
    }
    MeasurementLog::from_records(size, records)
}

pub fn read(path: &Path) -> Result<MeasurementLog> {
    parse(File::open(path)?)
}

/// Append-only journal file. Every append is flushed and synced before it
/// returns.
#[derive(Debug)]
pub struct JournalWriter {
    file: File,
    next_seq: u64,
}

impl JournalWriter {
    /// Creates a new journal holding only the header. Fails if it exists.
    pub fn create(path: &Path, size: usize) -> Result<Self> {
        let mut file = OpenOptions::new().write(true).create_new(true).open(path)?;
        file.write_all(format_header(size).as_bytes())?;
        file.sync_all()?;
        Ok(JournalWriter { file, next_seq: 1 })
    }

    /// Opens an existing journal for appending; returns its current contents.
    pub fn open(path: &Path) -> Result<(Self, MeasurementLog)> {
        let log = read(path)?;
        let file = OpenOptions::new().append(true).open(path)?;
        let next_seq = log.len() as u64 + 1;
        Ok((JournalWriter { file, next_seq }, log))
    }

    pub fn append(&mut self, m: &Measurement) -> Result<()> {
        if m.sequence_number != self.next_seq {
            return Err(CoreError::SequenceGap {
                expected: self.next_seq,
                found: m.sequence_number,
            });
        }
        self.file.write_all(format_record(m).as_bytes())?;
        self.file.sync_data()?;
        self.next_seq += 1;
        Ok(())
    }

    pub fn next_sequence(&self) -> u64 {
        self.next_seq
    }
}
