//! Text output helpers shared by every dump format.
//!
//! Floating point values are always written with 17 significant digits in
//! scientific notation, which round-trips any `f64` exactly.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

/// Formats a float with 17 significant digits.
pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON formatter that writes every float through [`f17`].
#[derive(Debug, Default, Clone, Copy)]
pub struct F17Formatter;

impl Formatter for F17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            writer.write_all(f17(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes `value` as a single-line JSON document (trailing LF) with
/// 17-significant-digit floats.
pub fn to_json_f17<T: Serialize + ?Sized>(value: &T) -> crate::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, F17Formatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}
