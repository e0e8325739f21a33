//! Exact rational numbers used for every numeric value in the engine.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational number.
///
/// Serialized as a decimal string when the expansion terminates (`"0.25"`,
/// `"-1000"`) and as `"p/q"` otherwise.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rat(Repr);

// Canonical: `Small` whenever numerator and denominator fit in i64, so the
// derived equality and hashing agree with numeric equality.
#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Small(i64, i64),
    Big(BigRational),
}

fn gcd128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rat {
    fn small(n: i128, d: i128) -> Rat {
        let (mut n, mut d) = (n, d);
        if d < 0 {
            n = -n;
            d = -d;
        }
        let g = gcd128(n, d);
        if g > 1 {
            n /= g;
            d /= g;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Rat(Repr::Small(n, d)),
            _ => Rat(Repr::Big(BigRational::new(BigInt::from(n), BigInt::from(d)))),
        }
    }

    fn from_big(r: BigRational) -> Rat {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Rat(Repr::Small(n, d)),
            _ => Rat(Repr::Big(r)),
        }
    }

    fn big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(r) => r.clone(),
        }
    }

    pub fn zero() -> Self {
        Rat(Repr::Small(0, 1))
    }

    pub fn one() -> Self {
        Rat(Repr::Small(1, 1))
    }

    pub fn from_int(n: i64) -> Self {
        Rat(Repr::Small(n, 1))
    }

    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rat::small(numer as i128, denom as i128)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n > 0,
            Repr::Big(r) => r.is_positive(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(r) => r.is_negative(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(r) => r.is_integer(),
        }
    }

    pub fn abs(&self) -> Self {
        match &self.0 {
            Repr::Small(n, d) => Rat::small((*n as i128).abs(), *d as i128),
            Repr::Big(r) => Rat::from_big(r.abs()),
        }
    }

    pub fn recip(&self) -> Self {
        match &self.0 {
            Repr::Small(n, d) => {
                assert!(*n != 0, "reciprocal of zero");
                Rat::small(*d as i128, *n as i128)
            }
            Repr::Big(r) => Rat::from_big(r.recip()),
        }
    }

    /// Integer value, if this is an integer that fits in `i64`.
    pub fn to_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small(n, 1) => Some(*n),
            Repr::Small(..) => None,
            Repr::Big(r) if r.is_integer() => r.to_integer().to_i64(),
            Repr::Big(_) => None,
        }
    }

    /// Lossy conversion, for display and heuristics only.
    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => *n as f64 / *d as f64,
            Repr::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn floor(&self) -> Self {
        match &self.0 {
            Repr::Small(n, d) => Rat(Repr::Small(n.div_euclid(*d), 1)),
            Repr::Big(r) => Rat::from_big(r.floor()),
        }
    }

    pub fn ceil(&self) -> Self {
        match &self.0 {
            Repr::Small(n, d) => Rat::small(-((-(*n as i128)).div_euclid(*d as i128)), 1),
            Repr::Big(r) => Rat::from_big(r.ceil()),
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Parses `-12`, `0.25`, `3/4` or `-1.5e0`-free decimal forms exactly.
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((n, d)) = text.split_once('/') {
            let n = Rat::parse_decimal(n)?;
            let d = Rat::parse_decimal(d)?;
            if d.is_zero() {
                return None;
            }
            return Some(n / d);
        }
        Rat::parse_decimal(text)
    }

    fn parse_decimal(text: &str) -> Option<Self> {
        let text = text.trim();
        let (negative, digits) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
            || (digits.contains('.') && frac_part.is_empty())
        {
            return None;
        }
        let mut all = String::with_capacity(int_part.len() + frac_part.len());
        all.push_str(if int_part.is_empty() { "0" } else { int_part });
        all.push_str(frac_part);
        let numer: BigInt = all.parse().ok()?;
        let denom = num_traits::pow(BigInt::from(10), frac_part.len());
        let mut value = BigRational::new(numer, denom);
        if negative {
            value = -value;
        }
        Some(Rat::from_big(value))
    }

    /// Exact decimal rendering, or `p/q` when the expansion does not terminate.
    pub fn to_decimal_string(&self) -> String {
        let big = self.big();
        let numer = big.numer();
        let denom = big.denom();
        if denom.is_one() {
            return numer.to_string();
        }
        let mut d = denom.clone();
        let two = BigInt::from(2);
        let five = BigInt::from(5);
        let (mut twos, mut fives) = (0usize, 0usize);
        while d.is_even() {
            d /= &two;
            twos += 1;
        }
        while (&d % &five).is_zero() {
            d /= &five;
            fives += 1;
        }
        if !d.is_one() {
            return format!("{}/{}", numer, denom);
        }
        let places = twos.max(fives);
        let scaled = numer * num_traits::pow(BigInt::from(10), places) / denom;
        let negative = scaled.is_negative();
        let digits = scaled.abs().to_string();
        let digits = if digits.len() <= places {
            format!("{}{}", "0".repeat(places - digits.len() + 1), digits)
        } else {
            digits
        };
        let (int_part, frac_part) = digits.split_at(digits.len() - places);
        format!("{}{}.{}", if negative { "-" } else { "" }, int_part, frac_part)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl FromStr for Rat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rat::parse(s).ok_or_else(|| format!("not a rational number: `{s}`"))
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::from_int(n)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_decimal_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Rat::parse(&text).ok_or_else(|| serde::de::Error::custom(format!("bad rational `{text}`")))
    }
}

impl Default for Rat {
    fn default() -> Self {
        Rat::zero()
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128)),
            _ => self.big().cmp(&other.big()),
        }
    }
}

fn add(x: &Rat, y: &Rat) -> Rat {
    match (&x.0, &y.0) {
        (Repr::Small(a, b), Repr::Small(c, d)) => {
            if *b == 1 && *d == 1 {
                Rat::small(*a as i128 + *c as i128, 1)
            } else {
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                Rat::small(a * d + c * b, b * d)
            }
        }
        _ => Rat::from_big(x.big() + y.big()),
    }
}

fn sub(x: &Rat, y: &Rat) -> Rat {
    add(x, &-y)
}

fn mul(x: &Rat, y: &Rat) -> Rat {
    match (&x.0, &y.0) {
        (Repr::Small(a, b), Repr::Small(c, d)) => Rat::small(*a as i128 * *c as i128, *b as i128 * *d as i128),
        _ => Rat::from_big(x.big() * y.big()),
    }
}

fn div(x: &Rat, y: &Rat) -> Rat {
    match (&x.0, &y.0) {
        (Repr::Small(a, b), Repr::Small(c, d)) => {
            assert!(*c != 0, "division by zero");
            Rat::small(*a as i128 * *d as i128, *b as i128 * *c as i128)
        }
        _ => Rat::from_big(x.big() / y.big()),
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                $method(&self, &rhs)
            }
        }
        impl<'a> $trait<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                $method(&self, rhs)
            }
        }
        impl<'a> $trait<Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                $method(self, &rhs)
            }
        }
        impl<'a, 'b> $trait<&'b Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'b Rat) -> Rat {
                $method(self, rhs)
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        -&self
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match &self.0 {
            Repr::Small(n, d) => Rat::small(-(*n as i128), *d as i128),
            Repr::Big(r) => Rat::from_big(-r),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_round_trip() {
        for text in ["0", "2", "-1000", "0.2", "0.05", "-3.125", "1/3", "-2/7"] {
            let r = Rat::parse(text).unwrap();
            assert_eq!(r.to_decimal_string(), text);
        }
    }

    #[test]
    fn parses_exactly() {
        assert_eq!(Rat::parse("0.1").unwrap() * Rat::from_int(3), Rat::new(3, 10));
        assert_eq!(Rat::parse("0.2").unwrap() / Rat::parse("0.1").unwrap(), Rat::from_int(2));
        assert_eq!(Rat::parse("6/4").unwrap(), Rat::new(3, 2));
    }

    #[test]
    fn rejects_garbage() {
        for text in ["", "-", "1.", ".", "1..2", "a", "1/0", "1e5"] {
            assert!(Rat::parse(text).is_none(), "{text}");
        }
        assert_eq!(Rat::parse(".5").unwrap(), Rat::new(1, 2));
    }

    #[test]
    fn small_and_big_agree() {
        let big = Rat::from_int(i64::MAX) * Rat::from_int(4);
        assert!(big > Rat::from_int(i64::MAX));
        let back = &big / Rat::from_int(4);
        assert_eq!(back, Rat::from_int(i64::MAX));
        assert_eq!(Rat::new(-7, 2).floor(), Rat::from_int(-4));
        assert_eq!(Rat::new(-7, 2).ceil(), Rat::from_int(-3));
        assert_eq!(Rat::new(7, 2).ceil(), Rat::from_int(4));
        assert_eq!(Rat::new(1, 3) + Rat::new(1, 6), Rat::new(1, 2));
        assert!(Rat::new(-1, 3) < Rat::new(-1, 4));
    }
}
