//! Decibel conversion and the textual conventions shared by every report.

use std::f64::consts::LN_10;

/// Brackets at or below this value are reported as unbounded squeezing.
pub const UNBOUNDED_BRACKET: f64 = 1e-15;

/// Text used for the unbounded-squeezing sentinel (`R = -∞`).
pub const NEG_INF_TEXT: &str = "-inf";

/// `10·log10(linear)`.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Inverse of [`to_db`].
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10·log10(1 + x)` without cancellation for small `x`.
pub fn db_of_one_plus(x: f64) -> f64 {
    10.0 / LN_10 * x.ln_1p()
}

/// Converts a bound bracket to dB, mapping non-positive brackets to `-∞`.
pub fn bracket_to_db(bracket: f64) -> f64 {
    if bracket <= UNBOUNDED_BRACKET {
        f64::NEG_INFINITY
    } else {
        to_db(bracket)
    }
}

/// dB value with four decimals, or the sentinel. Values that round to zero
/// print as `0.0000`, never `-0.0000`.
pub fn format_db(db: f64) -> String {
    if db == f64::NEG_INFINITY {
        return NEG_INF_TEXT.to_string();
    }
    let text = format!("{db:.4}");
    if text == "-0.0000" {
        "0.0000".to_string()
    } else {
        text
    }
}

/// Parses the output of [`format_db`] (or any float literal).
pub fn parse_db(text: &str) -> Option<f64> {
    let text = text.trim();
    if text == NEG_INF_TEXT {
        Some(f64::NEG_INFINITY)
    } else {
        text.parse().ok()
    }
}

/// Rounds to `digits` significant digits. Non-finite values pass through.
pub fn round_sig(value: f64, digits: usize) -> f64 {
    if !value.is_finite() || value == 0.0 {
        return value;
    }
    format!("{:.*e}", digits.saturating_sub(1), value)
        .parse()
        .unwrap_or(value)
}
