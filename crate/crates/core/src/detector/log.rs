use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};

use super::DetectionReport;
use crate::error::Result;
use crate::stats::CoincidenceEntry;

/// `<ISO-8601 UTC>\t<f with 4 decimals>\t<lowercase hex>\n`
pub fn format_suspect_line(at: &DateTime<Utc>, entry: &CoincidenceEntry) -> String {
    format!(
        "{}\t{:.4}\t{}\n",
        at.to_rfc3339_opts(SecondsFormat::Secs, true),
        entry.fraction,
        hex::encode(entry.pattern.bytes())
    )
}

/// Appends one line per suspect. The file is created if missing and only
/// ever appended to; all lines of a report go out in a single write.
pub fn append_suspects(report: &DetectionReport, log: &Path) -> Result<usize> {
    let lines: String = report
        .suspects
        .iter()
        .map(|entry| format_suspect_line(&report.finished_at, entry))
        .collect();
    let mut file = OpenOptions::new().create(true).append(true).open(log)?;
    file.write_all(lines.as_bytes())?;
    file.flush()?;
    Ok(report.suspects.len())
}
