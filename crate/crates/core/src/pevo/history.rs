use std::io::{BufRead, Write};

use super::IterationRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["iteration", "kl", "js", "entropy_gap", "tv"];

pub fn write_history_jsonl(history: &[IterationRecord], mut out: impl Write) -> Result<()> {
    for r in history {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_history_jsonl(input: impl BufRead) -> Result<Vec<IterationRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Convergence curve: one row per iteration, js is the JS distance.
pub fn write_history_csv(history: &[IterationRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in history {
        w.write_record([
            r.iteration.to_string(),
            r.report.kl.to_string(),
            r.report.js_distance.to_string(),
            r.report.entropy_gap.to_string(),
            r.report.tv.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
