//! Command implementations: each module runs one operation against a
//! validated configuration and writes its reports under the output
//! directory.

pub mod cover;
pub mod cylinders;
pub mod exponents;
pub mod probe;
pub mod solution;
pub mod solve;
pub mod verify;

use std::path::Path;

use pmlab::error::{Error, Result};
use serde::Serialize;

/// Writes a pretty-printed JSON document (trailing newline included, so
/// the file is byte-stable and diff-friendly).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

/// Writes a text document (UTF-8, '\n' newlines).
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("cannot write '{}': {e}", path.display())))
}

/// One stdout summary line per verdict, shared across commands.
pub fn print_verdict(label: &str, pass: bool, detail: &str) {
    println!("[{}] {label}: {detail}", if pass { "pass" } else { "FAIL" });
}
