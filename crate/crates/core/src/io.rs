//! Small file helpers shared by the loaders and writers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub fn open_reader(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn create_writer(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Reads tab-separated rows, skipping blank lines and `#` comments.
/// Each row comes with its 1-based line number.
pub fn read_tsv(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let reader = open_reader(path)?;
    let mut rows = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') && !line.contains('\t') {
            continue;
        }
        rows.push((n + 1, line.split('\t').map(str::to_string).collect()));
    }
    Ok(rows)
}

/// One non-empty trimmed entry per line.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let reader = open_reader(path)?;
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if !line.is_empty() {
            out.push(line.to_string());
        }
    }
    Ok(out)
}

pub fn write_lines<I, S>(path: &Path, lines: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut w = create_writer(path)?;
    for line in lines {
        writeln!(w, "{}", line.as_ref()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn parse_f64(path: &Path, line: usize, field: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            Error::parse(
                path.display().to_string(),
                line,
                format!("invalid {field} `{value}`"),
            )
        })
}
