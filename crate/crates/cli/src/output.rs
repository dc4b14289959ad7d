use std::io::Write;
use std::path::Path;

use crate::error::CliError;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parses CSV text, skipping `#` comment lines.
    pub fn parse(bytes: &[u8]) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
        let bad = |e: csv::Error| CliError::config(format!("malformed CSV: {e}"));
        let header = reader.headers().map_err(bad)?.iter().map(str::to_string).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()).map_err(bad))
            .collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }
}

/// 17 significant digits, enough to round-trip every f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn render(table: &Table, config_hash: &str) -> Result<Vec<u8>, CliError> {
    let mut buf = format!("# gyrad {} config_hash={config_hash}\n", env!("CARGO_PKG_VERSION")).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let fail = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&table.header).map_err(fail)?;
        for row in &table.rows {
            w.write_record(row).map_err(fail)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

/// Writes to a temporary file beside `path` and renames it into place, so
/// the path holds either nothing, the old file, or the complete new one.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

/// Sends a rendered table to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&str>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(Path::new(path), bytes),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}
