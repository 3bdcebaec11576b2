//! Rendering of reports. Human-readable text uses three decimals; CSV and
//! JSON carry twelve significant digits.

use serde_json::{json, Value};

use crate::args::Format;
use crate::error::CliError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 3;

pub struct Table {
    pub schema: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Report {
    pub schema: &'static str,
    pub input: Value,
    pub result: Value,
    pub text: String,
    pub table: Table,
    pub exit_code: u8,
}

impl Report {
    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Text => Ok(self.text.clone()),
            Format::Json => {
                let doc = json!({
                    "schema": self.schema,
                    "input": self.input,
                    "result": self.result,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.table.columns)?;
                for row in &self.table.rows {
                    w.write_record(row)?;
                }
                let body = String::from_utf8(
                    w.into_inner()
                        .map_err(|e| csv::Error::from(e.into_error()))?,
                )
                .expect("CSV of UTF-8 fields is UTF-8");
                Ok(format!("# schema: {}\n{body}", self.table.schema))
            }
        }
    }
}

pub fn human(x: f64) -> String {
    format!("{x:.3}")
}

/// `x` rounded to twelve significant digits, written without an exponent.
pub fn machine(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    format!("{}", round12(x))
}

pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// JSON number at machine precision; `null` when not finite.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round12(x))
    } else {
        Value::Null
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

pub fn opt_machine(x: Option<f64>) -> String {
    x.map(machine).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(machine(0.323979591836734_7), "0.323979591837");
        assert_eq!(machine(10.0), "10");
        assert_eq!(machine(-1234567.891234567), "-1234567.89123");
        assert_eq!(machine(0.0), "0");
        assert_eq!(machine(f64::NAN), "");
    }

    #[test]
    fn three_decimals() {
        assert_eq!(human(0.10587), "0.106");
        assert_eq!(human(-0.0), "-0.000");
    }
}
