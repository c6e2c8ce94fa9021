//! CSV tables, checksums and atomic artifact writes.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// One CSV cell. Floats print in shortest round-trip form, `None` as empty.
pub fn cell<T: Display>(v: T) -> String {
    v.to_string()
}

pub fn opt<T: Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Header, rows, then `# sha256=<hex>` over everything before it.
    pub fn render(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::config("output", e.to_string());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| CliError::config("output", e.to_string()))?;
        Ok(checksummed(body))
    }
}

/// Appends `# sha256=<hex>` of `body` as the last line.
pub fn checksummed(mut body: Vec<u8>) -> Vec<u8> {
    let digest = sha256_hex(&body);
    body.extend_from_slice(format!("# sha256={digest}\n").as_bytes());
    body
}

/// Checks the trailing checksum line of a rendered CSV.
pub fn verify_checksum(bytes: &[u8]) -> bool {
    let text = match std::str::from_utf8(bytes) {
        Ok(t) => t,
        Err(_) => return false,
    };
    let body_end = match text.trim_end_matches('\n').rfind('\n') {
        Some(i) => i + 1,
        None => return false,
    };
    let (body, last) = text.split_at(body_end);
    last.trim_end() == format!("# sha256={}", hex::encode(Sha256::digest(body.as_bytes())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temp file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::config("output", e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Paths of the files one run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactPaths {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksum_line_covers_the_body() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![cell(1.5), opt::<f64>(None)]);
        let bytes = t.render().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("a,b\n1.5,\"\"\n") || text.starts_with("a,b\n1.5,\n"));
        assert!(text.lines().last().unwrap().starts_with("# sha256="));
        assert!(verify_checksum(&bytes));
        let mut tampered = bytes;
        tampered[4] = b'9';
        assert!(!verify_checksum(&tampered));
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
