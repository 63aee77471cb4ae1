//! Deterministic number formatting.
//!
//! All numeric artifact output (JSON and CSV) goes through these helpers so
//! that repeated runs produce byte-identical files: values are rounded to 12
//! significant digits and printed in plain decimal notation with trailing
//! zeros trimmed.

/// Formats a finite float with 12 significant digits in plain decimal
/// notation. Trailing zeros (and a trailing decimal point) are trimmed, so
/// `0.5` stays `"0.5"` and `1.0` becomes `"1"`.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let neg = x < 0.0;
    // `{:.11e}` rounds to 12 significant digits, e.g. "3.33333333333e-1".
    let sci = format!("{:.11e}", x.abs());
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific notation always contains an exponent");
    let exp: i32 = exp.parse().expect("exponent is a valid integer");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    debug_assert_eq!(digits.len(), 12);

    // `point` is the position of the decimal point within `digits`.
    let point = exp + 1;
    let mut out = if point <= 0 {
        format!("0.{}{}", "0".repeat(-point as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        format!(
            "{}.{}",
            &digits[..point as usize],
            &digits[point as usize..]
        )
    };
    if out.contains('.') {
        out.truncate(out.trim_end_matches('0').len());
        out.truncate(out.trim_end_matches('.').len());
    }
    if neg {
        out.insert(0, '-');
    }
    out
}

/// Rounds a float to 12 significant digits. Used before serializing numbers
/// into JSON so serde's shortest-round-trip printing emits the rounded value.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format_sig12(x)
        .parse()
        .expect("formatted float parses back")
}
