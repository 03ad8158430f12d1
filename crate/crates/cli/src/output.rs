//! Deterministic artifact writing: JSON with a fixed 17-significant-digit
//! float format and CSV tables using the same format, so identical runs
//! produce byte-identical files.

use std::io;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// Formats every float with 17 significant digits, independent of value.
struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{}", fmt_f64(value))
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{}", fmt_f64(value as f64))
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt_f64(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        "null".into()
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut buffer = Vec::new();
    let mut serializer = serde_json::Serializer::with_formatter(&mut buffer, FixedFloats);
    value
        .serialize(&mut serializer)
        .map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
    buffer.push(b'\n');
    std::fs::write(path, &buffer)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}
