//! Unit-suffixed quantities for the scenario format.
//!
//! Internal units are bits and seconds everywhere; rates are bits/second.
//! Byte prefixes are decimal (1 kB = 1000 B, 1 MB = 10^6 B), so
//! `3.6MB` is exactly 28_800_000 bits.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnitError {
    #[error("empty quantity")]
    Empty,
    #[error("malformed number in {0:?}")]
    BadNumber(String),
    #[error("unknown or mismatched unit suffix in {0:?} (expected {1})")]
    BadSuffix(String, &'static str),
}

/// Dimension of a scenario quantity. Decides which suffixes are accepted and
/// what the bare (suffix-free) unit is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Key amounts: bare bits, or B/kB/MB.
    Size,
    /// Key rates: bare bits/s, or bps/kbps/Mbps.
    Rate,
    /// Durations: bare seconds, or s/min/h.
    Time,
    /// Fractions written as `NN%`; the stored value is the percent figure.
    Percent,
}

impl Dimension {
    fn suffixes(self) -> &'static [(&'static str, f64)] {
        // Longest suffix first so "kbps" is not split as "bps".
        match self {
            Dimension::Size => &[("MB", 8e6), ("kB", 8e3), ("B", 8.0)],
            Dimension::Rate => &[("Mbps", 1e6), ("kbps", 1e3), ("bps", 1.0)],
            Dimension::Time => &[("min", 60.0), ("ms", 1e-3), ("s", 1.0), ("h", 3600.0)],
            Dimension::Percent => &[("%", 1.0)],
        }
    }

    fn expected(self) -> &'static str {
        match self {
            Dimension::Size => "B/kB/MB or bare bits",
            Dimension::Rate => "bps/kbps/Mbps or bare bits per second",
            Dimension::Time => "ms/s/min/h or bare seconds",
            Dimension::Percent => "a percentage like 50%",
        }
    }

    fn allows_bare(self) -> bool {
        !matches!(self, Dimension::Percent)
    }
}

/// Parses a quantity like `3.6MB`, `9.6kbps`, `600s` or `28800000` into the
/// internal unit of `dim`.
///
/// Decimal mantissas are evaluated as integer * unit / 10^k so every value
/// that is exactly representable comes out exact (`3.6MB` -> 28_800_000.0,
/// `3.49kbps` -> 3490.0).
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, UnitError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(UnitError::Empty);
    }
    let (number, factor) = match split_suffix(text, dim) {
        Some(pair) => pair,
        None => return Err(UnitError::BadSuffix(text.to_string(), dim.expected())),
    };
    let value = parse_decimal(number).ok_or_else(|| UnitError::BadNumber(text.to_string()))?;
    Ok(value * factor)
}

fn split_suffix(text: &str, dim: Dimension) -> Option<(&str, f64)> {
    for &(suffix, factor) in dim.suffixes() {
        if let Some(number) = text.strip_suffix(suffix) {
            let number = number.trim_end();
            if !number.is_empty() {
                return Some((number, factor));
            }
        }
    }
    if dim.allows_bare() && text.ends_with(|c: char| c.is_ascii_digit() || c == '.') {
        return Some((text, 1.0));
    }
    None
}

/// Parses a plain decimal with an exact integer-mantissa path.
fn parse_decimal(number: &str) -> Option<f64> {
    let unsigned = number.strip_prefix('+').unwrap_or(number);
    if unsigned.is_empty() || unsigned.starts_with('-') {
        return None;
    }
    let (int_part, frac_part) = match unsigned.split_once('.') {
        Some((i, f)) => (i, f),
        None => (unsigned, ""),
    };
    let digits_only =
        |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if (int_part.is_empty() && frac_part.is_empty())
        || (!int_part.is_empty() && !digits_only(int_part))
        || (!frac_part.is_empty() && !digits_only(frac_part))
    {
        // Fall back to the standard parser for scientific notation.
        return unsigned.parse::<f64>().ok().filter(|v| v.is_finite() && *v >= 0.0);
    }
    let total_digits = int_part.len() + frac_part.len();
    if total_digits <= 15 {
        // Mantissa fits f64 exactly; division by a power of ten rounds once.
        let mut mantissa: u64 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            mantissa = mantissa * 10 + u64::from(b - b'0');
        }
        Some(mantissa as f64 / 10f64.powi(frac_part.len() as i32))
    } else {
        unsigned.parse::<f64>().ok().filter(|v| v.is_finite())
    }
}

/// Formats `value` (in the internal unit of `dim`) with the largest suffix
/// that reparses to exactly `value`. The bare base unit always reparses
/// exactly, so the result is a value-level round trip by construction.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    debug_assert!(value.is_finite());
    if value == 0.0 {
        return match dim {
            Dimension::Size => "0B".to_string(),
            Dimension::Rate => "0bps".to_string(),
            Dimension::Time => "0s".to_string(),
            Dimension::Percent => "0%".to_string(),
        };
    }
    let mut candidates: Vec<(&str, f64)> = dim.suffixes().to_vec();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (suffix, factor) in candidates {
        let scaled = value / factor;
        if scaled < 1.0 {
            continue;
        }
        let text = format!("{scaled}{suffix}");
        if parse_quantity(&text, dim) == Ok(value) {
            return text;
        }
    }
    // Bare base unit; `{}` prints the shortest representation that reparses
    // to the same f64.
    let text = format!("{value}");
    debug_assert_eq!(parse_quantity(&text, dim), Ok(value));
    text
}
