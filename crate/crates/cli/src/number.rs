//! Text form of floating-point numbers.
//!
//! Every number is written with 17 significant digits in the style of C's
//! `%.17g`: plain decimal notation for moderate exponents, scientific
//! notation otherwise, trailing zeros removed. Seventeen digits identify any
//! double exactly, so parsing the text gives back the same value.

use std::io;

use serde_json::ser::Formatter;

const DIGITS: i32 = 17;

/// Formats `x` like `%.17g`.
pub fn g17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if exp < -4 || exp >= DIGITS {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        let dot = if tail.is_empty() { "" } else { "." };
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{head}{dot}{tail}e{esign}{:02}", exp.abs());
    }
    let (int, frac) = if exp >= 0 {
        let (i, f) = digits.split_at(exp as usize + 1);
        (i.to_string(), f.to_string())
    } else {
        ("0".to_string(), "0".repeat((-exp - 1) as usize) + &digits)
    };
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Compact JSON whose floating-point numbers use [`g17`].
pub struct G17Json;

impl Formatter for G17Json {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(g17(value).as_bytes())
    }
}
