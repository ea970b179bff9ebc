//! Exact rational arithmetic shared by all pricing formulas.
//!
//! Every monetary quantity in this crate is a [`Rat`] (an arbitrary-precision
//! rational). The helpers here cover the two external representations the
//! tooling needs: decimal strings (`"2.4"`, `"-0.5"`) and plain fractions
//! (`"11/9"`) for values with no terminating decimal form.

use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number.
pub type Rat = BigRational;

/// Rational from a signed integer.
pub fn int(value: i64) -> Rat {
    Rat::from_integer(BigInt::from(value))
}

/// Rational from an unsigned count (user counts, byte sizes, ticks).
pub fn uint(value: u64) -> Rat {
    Rat::from_integer(BigInt::from(value))
}

/// Rational `numer / denom`. Panics if `denom == 0`; intended for literals.
pub fn ratio(numer: i64, denom: i64) -> Rat {
    assert!(denom != 0, "ratio denominator must be nonzero");
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

/// Nearest binary64 value; used only at reporting boundaries.
pub fn to_f64(value: &Rat) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Failure to read a number from its external string form.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid number {input:?}: {reason}")]
pub struct NumberParseError {
    pub input: String,
    pub reason: &'static str,
}

fn parse_err(input: &str, reason: &'static str) -> NumberParseError {
    NumberParseError {
        input: input.to_string(),
        reason,
    }
}

/// Parses a decimal string (`"1"`, `"-2.5"`) or a fraction (`"11/9"`).
///
/// No exponents, no thousands separators, `.` as the decimal separator.
pub fn parse_number(input: &str) -> Result<Rat, NumberParseError> {
    let s = input.trim();
    if s.is_empty() {
        return Err(parse_err(input, "empty"));
    }
    if let Some((numer, denom)) = s.split_once('/') {
        let n = BigInt::from_str(numer.trim())
            .map_err(|_| parse_err(input, "fraction numerator is not an integer"))?;
        let d = BigInt::from_str(denom.trim())
            .map_err(|_| parse_err(input, "fraction denominator is not an integer"))?;
        if d.is_zero() {
            return Err(parse_err(input, "fraction denominator is zero"));
        }
        return Ok(Rat::new(n, d));
    }
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(parse_err(input, "no digits"));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(parse_err(input, "expected only digits around the decimal point"));
    }
    let mantissa = format!("{}{}", int_part, frac_part);
    let mantissa = if mantissa.is_empty() { "0".into() } else { mantissa };
    let value = BigInt::from_str(&mantissa).map_err(|_| parse_err(input, "not a number"))?;
    let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(Rat::new(BigInt::from(sign) * value, scale))
}

/// Renders a rational in its canonical external form.
///
/// Values with a terminating decimal expansion print as a decimal string with
/// no trailing zeros (`6.1`, `0.25`, `-2`); everything else prints as a
/// reduced fraction (`11/9`).
pub fn format_number(value: &Rat) -> String {
    if value.denom().is_one() {
        return value.numer().to_string();
    }
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let mut rest = value.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&rest % &two).is_zero() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let places = twos.max(fives);
    let scaled = (value.numer() * BigInt::from(10u32).pow(places)) / value.denom();
    let negative = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let digits = if digits.len() <= places as usize {
        format!("{}{}", "0".repeat(places as usize + 1 - digits.len()), digits)
    } else {
        digits
    };
    let split = digits.len() - places as usize;
    let (int_part, frac_part) = digits.split_at(split);
    let frac_part = frac_part.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    if frac_part.is_empty() {
        format!("{}{}", sign, int_part)
    } else {
        format!("{}{}.{}", sign, int_part, frac_part)
    }
}
