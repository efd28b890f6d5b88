//! File helpers shared by the product readers and writers.
//!
//! Every product is written through [`write_atomic`]: the bytes go to a
//! sibling temporary file which is then renamed over the destination.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

pub fn read_to_string(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| Error::file(path, e))
}

pub fn read_bytes(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    fs::read(path).map_err(|e| Error::file(path, e))
}

pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let tmp = temp_sibling(path);
    let result = (|| {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::file(path, e));
    }
    Ok(())
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}

pub fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

/// Deserialize every row of a headed CSV file.
pub fn read_csv<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let mut reader = csv_reader(path.as_ref())?;
    reader
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Deserialize rows from an in-memory CSV body; `has_headers` selects whether
/// the first line is a header.
pub fn parse_csv<T: DeserializeOwned>(text: &[u8], has_headers: bool) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .trim(csv::Trim::All)
        .from_reader(text);
    reader
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Serialize rows to CSV bytes, header first (also emitted when `rows` is empty).
pub fn csv_bytes<T: Serialize>(header: &[&str], rows: &[T], with_header: bool) -> Result<Vec<u8>> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    if with_header {
        writer.write_record(header)?;
    }
    for row in rows {
        writer.serialize(row)?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::Io(e.into_error()))
}

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, header: &[&str], rows: &[T]) -> Result<()> {
    write_atomic(path, &csv_bytes(header, rows, true)?)
}

/// Check that a CSV file's header line equals `expected` exactly.
pub fn check_header(text: &str, expected: &[&str]) -> Result<()> {
    let first = text.lines().next().unwrap_or("");
    let got: Vec<&str> = first.split(',').map(str::trim).collect();
    if got.len() >= expected.len() && got[..expected.len()] == *expected {
        Ok(())
    } else {
        Err(Error::Parse(format!(
            "unexpected header '{first}', expected '{}'",
            expected.join(",")
        )))
    }
}
