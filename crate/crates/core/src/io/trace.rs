use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scheduler::EpochRecord;

/// One JSON object per line, one line per epoch.
pub fn write_trace(records: &[EpochRecord], mut out: impl Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Format(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace(input: impl BufRead) -> Result<Vec<EpochRecord>> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::Format(e.to_string()))?);
    }
    Ok(records)
}
