//! Exact rational scalars.
//!
//! Backed by `num-rational`'s arbitrary precision ratio, which already keeps
//! values reduced with a positive denominator.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub type Rational = num_rational::BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Renders `p/q`, dropping the denominator when it is 1.
pub fn render(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn relu(r: &Rational) -> Rational {
    if r.is_negative() {
        Rational::zero()
    } else {
        r.clone()
    }
}

/// Parses `p` or `p/q`.
pub fn parse(text: &str) -> Option<Rational> {
    let (num, den) = match text.split_once('/') {
        Some((p, q)) => (
            p.trim().parse::<BigInt>().ok()?,
            q.trim().parse::<BigInt>().ok()?,
        ),
        None => (text.trim().parse::<BigInt>().ok()?, BigInt::one()),
    };
    if den.is_zero() {
        return None;
    }
    Some(Rational::new(num, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_reduced() {
        assert_eq!(render(&ratio(2, 4)), "1/2");
        assert_eq!(render(&ratio(6, 3)), "2");
        assert_eq!(render(&ratio(3, -6)), "-1/2");
        assert_eq!(render(&zero()), "0");
    }

    #[test]
    fn parse_round_trip() {
        for r in [ratio(-7, 3), int(5), zero(), ratio(1, 16)] {
            assert_eq!(parse(&render(&r)), Some(r));
        }
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("x"), None);
    }
}
