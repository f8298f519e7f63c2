//! Deterministic machine-readable output: floats are always written with 17
//! significant digits so identical runs produce byte-identical files.

use serde::Serialize;
use std::io;
use std::path::Path;
use worldline_core::error::Error;

/// Fixed float formatting shared by JSON and CSV output.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct F17Formatter;

impl serde_json::ser::Formatter for F17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes with 17-significant-digit floats and alphabetically ordered
/// object keys (via the `Value` intermediate), so output is reproducible
/// byte for byte.
pub fn to_json_17<T: Serialize>(value: &T) -> Result<String, Error> {
    let tree = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, F17Formatter);
    tree.serialize(&mut ser)?;
    let mut text = String::from_utf8(buf).expect("serde_json emits utf-8");
    text.push('\n');
    Ok(text)
}

pub fn write_out(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
