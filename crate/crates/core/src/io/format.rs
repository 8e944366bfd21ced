//! `%g`-style number formatting shared by the CSV and JSON writers.

/// Significant digits of every emitted number.
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Formats like C's `%.9g`.
pub fn fmt_g(value: f64) -> String {
    format_general(value, SIGNIFICANT_DIGITS)
}

/// Formats like C's `%.{digits}g`: shortest of fixed or exponent notation,
/// trailing zeros removed. Negative zero prints as `0`.
pub fn format_general(value: f64, digits: usize) -> String {
    if value.is_nan() {
        return "nan".into();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf" } else { "-inf" }.into();
    }
    if value == 0.0 {
        return "0".into();
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, value);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent notation");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if exponent < -4 || exponent >= p as i32 {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exponent.abs())
    } else {
        let decimals = (p as i32 - 1 - exponent) as usize;
        trim_zeros(&format!("{value:.decimals$}")).to_string()
    }
}

/// `value` rounded to [`SIGNIFICANT_DIGITS`].
pub fn round_significant(value: f64) -> f64 {
    if value.is_finite() {
        fmt_g(value).parse().expect("formatted float parses")
    } else {
        value
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
