//! JSON-lines schedule files: a header line, then one batch per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{BatchSpec, Schedule, ScheduleHeader};
use crate::error::{Error, Result};

pub(super) fn body(batches: &[BatchSpec]) -> String {
    let mut out = String::new();
    for b in batches {
        out.push_str(&serde_json::to_string(b).expect("plain data"));
        out.push('\n');
    }
    out
}

pub(super) fn checksum(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

impl Schedule {
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let body = body(&self.batches);
        let mut header = self.header.clone();
        header.checksum = checksum(&body);
        writeln!(w, "{}", serde_json::to_string(&header).expect("plain data"))?;
        w.write_all(body.as_bytes())?;
        w.flush()
    }

    pub fn emit(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }
}

/// Parses a schedule and verifies its checksum.
pub fn read_schedule<R: BufRead>(mut reader: R) -> Result<Schedule> {
    let io = |e| Error::io("<schedule>", e);
    let mut first = String::new();
    if reader.read_line(&mut first).map_err(io)? == 0 {
        return Err(Error::Schedule("missing header".into()));
    }
    let header: ScheduleHeader =
        serde_json::from_str(first.trim_end()).map_err(|e| Error::Schedule(format!("bad header: {e}")))?;
    let mut rest = String::new();
    reader.read_to_string(&mut rest).map_err(io)?;
    if checksum(&rest) != header.checksum {
        return Err(Error::Schedule("checksum mismatch (file truncated or modified)".into()));
    }
    let mut batches = Vec::new();
    for (i, line) in rest.lines().enumerate() {
        let batch: BatchSpec =
            serde_json::from_str(line).map_err(|e| Error::Schedule(format!("line {}: {e}", i + 2)))?;
        batches.push(batch);
    }
    Ok(Schedule { header, batches })
}

pub fn load_schedule(path: impl AsRef<Path>) -> Result<Schedule> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_schedule(BufReader::new(file))
}

/// Yields batches in file order; a batch from a shard that its phase has not
/// unlocked is returned as an error instead.
pub struct BatchIter<'a> {
    header: &'a ScheduleHeader,
    batches: std::slice::Iter<'a, BatchSpec>,
}

impl<'a> BatchIter<'a> {
    pub(super) fn new(schedule: &'a Schedule) -> Self {
        BatchIter {
            header: &schedule.header,
            batches: schedule.batches.iter(),
        }
    }
}

impl<'a> Iterator for BatchIter<'a> {
    type Item = Result<&'a BatchSpec>;

    fn next(&mut self) -> Option<Self::Item> {
        let b = self.batches.next()?;
        if b.phase == 0 || b.phase > self.header.num_phases || !self.header.is_available(b.phase, b.shard) {
            return Some(Err(Error::Schedule(format!(
                "batch from shard {} in phase {} violates availability",
                b.shard, b.phase
            ))));
        }
        Some(Ok(b))
    }
}
