use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};
use spinsense::numfmt::sig17;
use spinsense::CMatrix;

/// Compact JSON with every float printed to 17 significant digits.
struct Sig17Formatter;

impl Formatter for Sig17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(sig17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        writer.write_all(sig17(value as f64).as_bytes())
    }

    fn write_null<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        CompactFormatter.write_null(writer)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17Formatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Writes `text` plus a newline to `path`, or to stdout when `path` is absent.
pub fn emit(text: &str, path: Option<&Path>) -> io::Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            writeln!(w, "{text}")?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            writeln!(lock, "{text}")?;
            lock.flush()
        }
    }
}

#[derive(Serialize)]
pub struct ComplexOut {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexOut {
    fn from(z: Complex64) -> Self {
        ComplexOut { re: z.re, im: z.im }
    }
}

pub fn complex_rows(m: &CMatrix) -> Vec<Vec<ComplexOut>> {
    m.row_iter().map(|row| row.iter().map(|z| ComplexOut::from(*z)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        let text = to_json(&serde_json::json!({"a": 100.0, "b": 0.1, "c": [1e-7, -2.5], "n": 3})).unwrap();
        assert_eq!(text, r#"{"a":100,"b":0.10000000000000001,"c":[9.9999999999999995e-08,-2.5],"n":3}"#);
    }

    #[test]
    fn non_finite_becomes_null() {
        assert_eq!(to_json(&[f64::NAN]).unwrap(), "[null]");
    }
}
