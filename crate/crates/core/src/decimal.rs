//! Exact decimal rendering and parsing of rationals.

use std::fmt;

use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::enclosure::{ceil_int, floor_int};
use crate::error::{Error, Result};

/// Rounding direction for decimal output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    Down,
    Up,
    Nearest,
}

impl fmt::Display for Rounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rounding::Down => "down",
            Rounding::Up => "up",
            Rounding::Nearest => "nearest",
        })
    }
}

/// Render `q` with exactly `digits` fractional digits.
pub fn to_decimal(q: &Rational, digits: u32, dir: Rounding) -> String {
    let scale = Integer::from(10).pow(digits);
    let scaled = Rational::from(q * &scale);
    let m = match dir {
        Rounding::Down => floor_int(&scaled),
        Rounding::Up => ceil_int(&scaled),
        Rounding::Nearest => floor_int(&(scaled + Rational::from((1, 2)))),
    };
    render_scaled(&m, digits)
}

/// True if `q` has an exact representation with `digits` fractional digits.
pub fn is_exact_decimal(q: &Rational, digits: u32) -> bool {
    let scaled = Rational::from(q * Integer::from(10).pow(digits));
    *scaled.denom() == 1
}

fn render_scaled(m: &Integer, digits: u32) -> String {
    let neg = m.cmp0() == std::cmp::Ordering::Less;
    let mut s = Integer::from(m.abs_ref()).to_string();
    let d = digits as usize;
    if s.len() <= d {
        s = format!("{}{}", "0".repeat(d + 1 - s.len()), s);
    }
    let (int, frac) = s.split_at(s.len() - d);
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push_str(int);
    if d > 0 {
        out.push('.');
        out.push_str(frac);
    }
    out
}

/// Parse a plain decimal literal such as `-0.0010954222` exactly.
pub fn parse_decimal(s: &str) -> Result<Rational> {
    let t = s.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let valid = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if (int.is_empty() && frac.is_empty()) || !valid(int) || !valid(frac) {
        return Err(Error::domain(format!("not a decimal literal: {s:?}")));
    }
    let digits: String = [int, frac].concat();
    let num = Integer::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10)
        .map_err(|e| Error::domain(format!("{s:?}: {e}")))?;
    let den = Integer::from(10).pow(frac.len() as u32);
    let q = Rational::from((num, den));
    Ok(if neg { -q } else { q })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_directions() {
        let third = Rational::from((1, 3));
        assert_eq!(to_decimal(&third, 4, Rounding::Down), "0.3333");
        assert_eq!(to_decimal(&third, 4, Rounding::Up), "0.3334");
        assert_eq!(to_decimal(&-third, 2, Rounding::Down), "-0.34");
        assert_eq!(to_decimal(&Rational::from(1), 10, Rounding::Nearest), "1.0000000000");
        assert_eq!(to_decimal(&Rational::from((5, 2)), 0, Rounding::Nearest), "3");
    }

    #[test]
    fn parse_roundtrip() {
        let q = parse_decimal("0.0010954222").unwrap();
        assert_eq!(q, Rational::from((10954222, 10_000_000_000u64)));
        assert_eq!(to_decimal(&q, 10, Rounding::Down), "0.0010954222");
        assert_eq!(parse_decimal("-12").unwrap(), Rational::from(-12));
        assert!(parse_decimal("1e5").is_err());
        assert!(parse_decimal(".").is_err());
    }
}
