//! CSV result tables and plot-ready series.
//!
//! Every file starts with the line `# schema=v1`, followed by a header row.
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! read back and written again is byte-identical.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use crate::adjudication::Posterior;
use crate::error::{ArenaError, Result};
use crate::study::{summarize, CellSummary, RecoveryRow};

pub const SCHEMA_LINE: &str = "# schema=v1";

pub const ROW_COLUMNS: [&str; 10] = [
    "truth",
    "epsilon",
    "replication",
    "seed",
    "winner",
    "recovered",
    "margin",
    "cycles_used",
    "final_posterior",
    "errors",
];

pub const SUMMARY_COLUMNS: [&str; 5] = ["truth", "epsilon", "runs", "recovery_rate", "mean_margin"];

fn io_err(path: &Path, e: impl Display) -> ArenaError {
    ArenaError::Io(format!("{}: {e}", path.display()))
}

fn to_csv(header: &[&str], records: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in records {
        w.write_record(&r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
    format!("{SCHEMA_LINE}\n{body}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn rows_csv(rows: &[RecoveryRow]) -> String {
    to_csv(
        &ROW_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.truth.clone(),
                r.epsilon.to_string(),
                r.replication.to_string(),
                r.seed.to_string(),
                r.winner.clone(),
                r.recovered.to_string(),
                r.margin.to_string(),
                r.cycles_used.to_string(),
                serde_json::to_string(&r.final_posterior).expect("posterior serializes"),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn summary_csv(cells: &[CellSummary]) -> String {
    to_csv(
        &SUMMARY_COLUMNS,
        cells.iter().map(|c| {
            vec![
                c.truth.clone(),
                c.epsilon.to_string(),
                c.runs.to_string(),
                c.recovery_rate.to_string(),
                c.mean_margin.to_string(),
            ]
        }),
    )
}

pub fn write_rows(path: &Path, rows: &[RecoveryRow]) -> Result<()> {
    write_file(path, &rows_csv(rows))
}

pub fn write_summary(path: &Path, cells: &[CellSummary]) -> Result<()> {
    write_file(path, &summary_csv(cells))
}

/// Splits off and checks the schema line, returning the CSV body.
fn strip_schema(text: &str) -> Result<&str> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let first = first.trim_end_matches('\r');
    match first.strip_prefix("# schema=") {
        Some("v1") => Ok(rest),
        Some(v) => Err(ArenaError::Schema(format!("unsupported schema version {v:?}"))),
        None => Err(ArenaError::Schema(format!("missing `{SCHEMA_LINE}` line"))),
    }
}

fn parse<T: std::str::FromStr>(value: &str, column: &str, line: u64) -> Result<T> {
    value
        .parse()
        .map_err(|_| ArenaError::Schema(format!("column `{column}`, line {line}: cannot parse {value:?}")))
}

pub fn parse_rows(text: &str) -> Result<Vec<RecoveryRow>> {
    let body = strip_schema(text)?;
    let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| ArenaError::Schema(format!("unreadable header: {e}")))?
        .clone();
    for (i, expected) in ROW_COLUMNS.iter().enumerate() {
        match header.get(i) {
            Some(h) if h == *expected => {}
            Some(h) => return Err(ArenaError::Schema(format!("column `{h}` found where `{expected}` was expected"))),
            None => return Err(ArenaError::Schema(format!("column `{expected}` is missing"))),
        }
    }
    if let Some(extra) = header.get(ROW_COLUMNS.len()) {
        return Err(ArenaError::Schema(format!("unexpected column `{extra}`")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ArenaError::Schema(format!("malformed row: {e}")))?;
        // schema line and header precede the first record
        let line = record.position().map_or(0, |p| p.line() + 1);
        let f = |i: usize| record.get(i).unwrap_or("");
        let final_posterior: Posterior = serde_json::from_str(f(8))
            .map_err(|_| ArenaError::Schema(format!("column `final_posterior`, line {line}: not a JSON object")))?;
        rows.push(RecoveryRow {
            truth: f(0).to_string(),
            epsilon: parse(f(1), "epsilon", line)?,
            replication: parse(f(2), "replication", line)?,
            seed: parse(f(3), "seed", line)?,
            winner: f(4).to_string(),
            recovered: parse(f(5), "recovered", line)?,
            margin: parse(f(6), "margin", line)?,
            cycles_used: parse(f(7), "cycles_used", line)?,
            final_posterior,
            error: Some(f(9)).filter(|s| !s.is_empty()).map(str::to_string),
        });
    }
    if rows.is_empty() {
        return Err(ArenaError::Schema("rows file has no data rows".into()));
    }
    Ok(rows)
}

pub fn read_rows(path: &Path) -> Result<Vec<RecoveryRow>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_rows(&text)
}

/// Writes `fig1a_<truth>.csv` (epsilon, recovery_rate) and
/// `fig1b_<truth>.csv` (epsilon, mean_margin) for every truth in `rows`.
pub fn write_series(out_dir: &Path, rows: &[RecoveryRow]) -> Result<Vec<PathBuf>> {
    let cells = summarize(rows);
    let mut truths: Vec<&str> = Vec::new();
    for c in &cells {
        if !truths.contains(&c.truth.as_str()) {
            truths.push(&c.truth);
        }
    }
    let mut written = Vec::new();
    for truth in truths {
        let mine: Vec<&CellSummary> = cells.iter().filter(|c| c.truth == truth).collect();
        let a = to_csv(
            &["epsilon", "recovery_rate"],
            mine.iter().map(|c| vec![c.epsilon.to_string(), c.recovery_rate.to_string()]),
        );
        let b = to_csv(
            &["epsilon", "mean_margin"],
            mine.iter().map(|c| vec![c.epsilon.to_string(), c.mean_margin.to_string()]),
        );
        for (name, text) in [(format!("fig1a_{truth}.csv"), a), (format!("fig1b_{truth}.csv"), b)] {
            let path = out_dir.join(name);
            write_file(&path, &text)?;
            written.push(path);
        }
    }
    Ok(written)
}
