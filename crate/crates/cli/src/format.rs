//! Fixed-precision text output: every float is written with 17 significant
//! digits so artifacts are byte-stable.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::CliError;

/// `{:.16e}` with negative zero folded into zero.
pub fn fmt_f64(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

/// Compact JSON whose floats go through [`fmt_f64`]; non-finite floats become `null`.
pub struct FixedFloat;

impl Formatter for FixedFloat {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            w.write_all(fmt_f64(v).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat);
    value.serialize(&mut ser).map_err(|e| CliError::Config(format!("serializing output: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// In-memory CSV body with a fixed header.
pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let names: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
        Self { columns: names.len(), text: names.join(",") + "\n" }
    }

    /// Leading integer fields followed by floats.
    pub fn row(&mut self, ints: &[u64], floats: &[f64]) -> Result<(), CliError> {
        debug_assert_eq!(ints.len() + floats.len(), self.columns);
        if let Some(bad) = floats.iter().find(|v| !v.is_finite()) {
            return Err(CliError::NonFiniteOutput(format!("value {bad} in output row")));
        }
        let mut first = true;
        for v in ints {
            if !first {
                self.text.push(',');
            }
            first = false;
            write!(self.text, "{v}").expect("writing to a String");
        }
        for v in floats {
            if !first {
                self.text.push(',');
            }
            first = false;
            self.text.push_str(&fmt_f64(*v));
        }
        self.text.push('\n');
        Ok(())
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Writes `contents` to `path`, creating missing parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.0), "0.0000000000000000e0");
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5e-300).parse::<f64>().unwrap(), -2.5e-300);
    }

    #[test]
    fn json_floats_are_fixed_and_parse_back() {
        let text = to_json(&serde_json::json!({"a": 0.5, "b": [1.0, -3.0e-7], "n": 3, "x": f64::NAN})).unwrap();
        assert_eq!(text, "{\"a\":5.0000000000000000e-1,\"b\":[1.0000000000000000e0,-2.9999999999999999e-7],\"n\":3,\"x\":null}\n");
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"][1].as_f64().unwrap(), -3.0e-7);
    }

    #[test]
    fn csv_rejects_non_finite_values() {
        let mut csv = Csv::new(&["n", "prob"]);
        csv.row(&[0], &[1.0]).unwrap();
        assert!(csv.row(&[1], &[f64::INFINITY]).is_err());
        assert_eq!(csv.into_string(), "n,prob\n0,1.0000000000000000e0\n");
    }
}
