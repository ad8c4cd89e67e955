//! Float serialization with 17 significant digits, so that every output
//! file round-trips bit-exactly and diffs cleanly between runs.

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Formats like C's `%.17g`: positional for exponents in `[-4, 17)`,
/// scientific otherwise, trailing zeros removed. Non-finite values have no
/// JSON spelling and are rendered as `null`.
pub fn g17(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_owned();
    }
    if x == 0.0 {
        return "0".to_owned();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let sign = if negative { "-" } else { "" };

    if (-4..17).contains(&exp) {
        let (int_part, frac_part) = if exp >= 0 {
            let split = exp as usize + 1;
            (digits[..split].to_owned(), digits[split..].to_owned())
        } else {
            ("0".to_owned(), format!("{}{}", "0".repeat((-exp - 1) as usize), digits))
        };
        let frac = frac_part.trim_end_matches('0');
        if frac.is_empty() {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac}")
        }
    } else {
        let frac = digits[1..].trim_end_matches('0');
        let exp_sign = if exp < 0 { '-' } else { '+' };
        let body = if frac.is_empty() {
            digits[..1].to_owned()
        } else {
            format!("{}.{frac}", &digits[..1])
        };
        format!("{sign}{body}e{exp_sign}{:02}", exp.abs())
    }
}

/// A float that serializes through [`g17`] when written with serde_json.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F17(pub f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(g17(self.0)).map_err(S::Error::custom)?;
        raw.serialize(serializer)
    }
}

pub fn f17s(values: &[f64]) -> Vec<F17> {
    values.iter().copied().map(F17).collect()
}

pub fn f17_rows(rows: &[Vec<f64>]) -> Vec<Vec<F17>> {
    rows.iter().map(|r| f17s(r)).collect()
}
