//! Exact arithmetic helpers: logarithms of big numbers and numbers of the
//! form `a + b·√r` with rational `a`, `b`, `r`.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Natural log of a positive big integer, accurate for arbitrarily many digits.
pub fn ln_bigint(n: &BigInt) -> f64 {
    debug_assert!(n.sign() == Sign::Plus);
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().expect("64-bit value").ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational; `-inf` for zero.
pub fn ln_rational(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    debug_assert!(r.is_positive());
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

/// Converts a rational to the nearest `f64`, also for huge numerators/denominators.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    match r.to_f64() {
        Some(v) if v.is_finite() && v != 0.0 => v,
        _ => {
            let sign = if r.is_negative() { -1.0 } else { 1.0 };
            sign * ln_rational(&r.abs()).exp()
        }
    }
}

/// `rational + coefficient·√radicand`; exact values of q-weighted sums when
/// area exponents are half-integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticSurd {
    pub rational: BigRational,
    pub coefficient: BigRational,
    pub radicand: BigRational,
}

impl QuadraticSurd {
    pub fn from_rational(value: BigRational, radicand: BigRational) -> Self {
        QuadraticSurd {
            rational: value,
            coefficient: BigRational::zero(),
            radicand,
        }
    }

    pub fn is_rational(&self) -> bool {
        self.coefficient.is_zero()
    }

    /// Natural log, valid when both parts are nonnegative.
    pub fn ln(&self) -> f64 {
        let a = ln_rational(&self.rational);
        if self.coefficient.is_zero() {
            return a;
        }
        let b = ln_rational(&self.coefficient) + 0.5 * ln_rational(&self.radicand);
        let m = a.max(b);
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

impl fmt::Display for QuadraticSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficient.is_zero() {
            write!(f, "{}", self.rational)
        } else if self.rational.is_zero() {
            write!(f, "{}*sqrt({})", self.coefficient, self.radicand)
        } else {
            write!(
                f,
                "{} + {}*sqrt({})",
                self.rational, self.coefficient, self.radicand
            )
        }
    }
}

/// `base^(halves/2)` as a surd over `radicand = base`.
pub fn half_power(base: &BigRational, halves: i64) -> QuadraticSurd {
    let whole = halves.div_euclid(2);
    let odd = halves.rem_euclid(2) == 1;
    let power = int_power(base, whole);
    if odd {
        QuadraticSurd {
            rational: BigRational::zero(),
            coefficient: power,
            radicand: base.clone(),
        }
    } else {
        QuadraticSurd::from_rational(power, base.clone())
    }
}

fn int_power(base: &BigRational, exponent: i64) -> BigRational {
    let mut result = BigRational::one();
    let mut b = if exponent < 0 {
        base.recip()
    } else {
        base.clone()
    };
    let mut e = exponent.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    result
}

/// Parses a decimal (`1.25`, `-3e-2`) or fraction (`7/3`) literal exactly.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i64>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(all_digits.parse::<BigInt>().ok()?);
    let scale = exponent - frac_part.len() as i64;
    let ten = BigRational::from_integer(BigInt::from(10));
    value *= int_power(&ten, scale);
    Some(if negative { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn ln_of_huge_integer() {
        let n = BigInt::from(3).pow(2000);
        let expected = 2000.0 * 3f64.ln();
        assert!((ln_bigint(&n) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn half_powers() {
        let two = rat(2, 1);
        assert_eq!(half_power(&two, 4).rational, rat(4, 1));
        let s = half_power(&two, 3);
        assert_eq!(s.coefficient, rat(2, 1));
        assert!((s.ln() - 1.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(half_power(&two, -2).rational, rat(1, 2));
        let neg_odd = half_power(&two, -1);
        assert_eq!(neg_odd.coefficient, rat(1, 2));
    }

    #[test]
    fn parses_literals() {
        assert_eq!(parse_rational("1.25"), Some(rat(5, 4)));
        assert_eq!(parse_rational("-0.5"), Some(rat(-1, 2)));
        assert_eq!(parse_rational("7/3"), Some(rat(7, 3)));
        assert_eq!(parse_rational("3e-2"), Some(rat(3, 100)));
        assert_eq!(parse_rational("2"), Some(rat(2, 1)));
        assert_eq!(parse_rational(".5"), Some(rat(1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational(""), None);
    }
}
