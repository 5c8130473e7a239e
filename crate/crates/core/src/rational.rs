//! Small helpers around arbitrary-precision rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number (arbitrary precision, always in lowest terms).
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal {0:?}")]
pub struct RationalParseError(pub String);

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"p"`, `"p/q"` or an exact decimal such as `"-0.25"` or `"1e-3"`.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let err = || RationalParseError(text.to_string());
    let t = text.trim();
    if let Some((num, den)) = t.split_once('/') {
        let n = parse_decimal(num.trim()).ok_or_else(err)?;
        let d = parse_decimal(den.trim()).ok_or_else(err)?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(n / d);
    }
    parse_decimal(t).ok_or_else(err)
}

/// Exact value of a decimal literal with optional sign, fraction and exponent.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let (negative, body) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], body[pos + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(digits.parse::<BigInt>().ok()?);
    let shift = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if shift >= 0 {
        value *= num_traits::pow(ten, shift as usize);
    } else {
        value /= num_traits::pow(ten, (-shift) as usize);
    }
    Some(if negative { -value } else { value })
}

/// Closest rational with denominator at most `max_den`.
pub fn limit_denominator(value: &Rational, max_den: u64) -> Rational {
    let max_den = BigInt::from(max_den);
    if value.denom() <= &max_den {
        return value.clone();
    }
    let negative = value.is_negative();
    let x = value.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let (mut n, mut d) = (x.numer().clone(), x.denom().clone());
    loop {
        let a = n.div_floor(&d);
        let q2 = &q0 + &a * &q1;
        if q2 > max_den {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let r = &n - &a * &d;
        n = std::mem::replace(&mut d, r);
        if d.is_zero() {
            break;
        }
    }
    let k = (&max_den - &q0).div_floor(&q1);
    let lower = Rational::new(&p0 + &k * &p1, &q0 + &k * &q1);
    let upper = Rational::new(p1, q1);
    let best = if (&upper - &x).abs() <= (&lower - &x).abs() { upper } else { lower };
    if negative {
        -best
    } else {
        best
    }
}

/// Snaps a float to a rational with denominator `<= max_den` if one lies
/// within `tol` of it.
pub fn snap(value: f64, max_den: u64, tol: f64) -> Option<Rational> {
    let exact = Rational::from_float(value)?;
    let candidate = limit_denominator(&exact, max_den);
    ((to_f64(&candidate) - value).abs() <= tol).then_some(candidate)
}

/// Displays a rational as `p` or `p/q`.
pub fn format(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}
