//! Small helpers shared by the commands: atomic text/JSON output and digests.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use progspace_core::fsutil::write_atomic;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write_atomic(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        out.write_all(b"\n")
    })
    .with_context(|| format!("writing {}", path.display()))
}

/// Writes `header` and one line per row, all comma-separated.
pub fn write_csv<R>(path: &Path, header: &str, rows: R) -> Result<()>
where
    R: IntoIterator,
    R::Item: AsRef<str>,
{
    let mut text = String::new();
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row.as_ref());
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |out| out.write_all(text.as_bytes()))
        .with_context(|| format!("writing {}", path.display()))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}
