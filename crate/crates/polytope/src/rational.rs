//! Rational scalars: parsing, formatting and a few small helpers.
//!
//! Every quantity in the solver (probabilities, thresholds, generator
//! coordinates) is an exact `BigRational`. Text input accepts `num/den`,
//! plain integers, and short decimals; output is always `num/den`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::PolytopeError;

pub type Rational = BigRational;

/// Longest decimal fraction accepted by [`parse_rational`].
pub const MAX_DECIMAL_DIGITS: usize = 12;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn half() -> Rational {
    rat(1, 2)
}

/// Parses `"3/4"`, `"-2"`, `"0.75"` (at most twelve fractional digits).
pub fn parse_rational(text: &str) -> Result<Rational, PolytopeError> {
    let s = text.trim();
    let bad = || PolytopeError::Parse(format!("not a rational: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(PolytopeError::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > MAX_DECIMAL_DIGITS {
            return Err(PolytopeError::Parse(format!(
                "decimal {text:?} must have 1..={MAX_DECIMAL_DIGITS} fractional digits"
            )));
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.trim_start().starts_with('-');
        let whole_digits = whole.trim().trim_start_matches(['-', '+']);
        let w: BigInt =
            if whole_digits.is_empty() { BigInt::zero() } else { whole_digits.parse().map_err(|_| bad())? };
        let f: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let magnitude = Rational::new(w * &scale + f, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Canonical `num/den` text, denominators always written (`"1/1"`).
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn in_unit_interval(q: &Rational) -> bool {
    !q.is_negative() && *q <= Rational::one()
}

/// Number of bits in numerator plus denominator; used for growth statistics.
pub fn bit_size(q: &Rational) -> u64 {
    q.numer().bits() + q.denom().bits()
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Serde adapter writing rationals as `"num/den"` strings.
pub mod serde_text {
    use super::*;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for q in v {
                seq.serialize_element(&format_rational(q))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let texts = Vec::<String>::deserialize(d)?;
            texts.iter().map(|t| parse_rational(t).map_err(D::Error::custom)).collect()
        }
    }
}
