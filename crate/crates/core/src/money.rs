//! Exact monetary amounts.
//!
//! Bids, prices and payments are arbitrary-precision rationals so that every
//! comparison the mechanisms make is exact and ties are never float artifacts.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A signed exact rational amount of money.
///
/// Bids are validated to be non-negative at the profile boundary; payments
/// and revenue may be negative (a negative payment is a reward).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Money(BigRational);

impl Money {
    pub fn zero() -> Self {
        Money(BigRational::zero())
    }

    pub fn from_integer(v: i64) -> Self {
        Money(BigRational::from_integer(BigInt::from(v)))
    }

    /// `numer / denom`; panics if `denom == 0`.
    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        Money(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Money(r)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Money {
        Money(self.0.abs())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact quotient; `None` when `other` is zero.
    pub fn checked_div(&self, other: &Money) -> Option<Money> {
        if other.is_zero() {
            None
        } else {
            Some(Money(&self.0 / &other.0))
        }
    }

    pub fn mul_ratio(&self, numer: i64, denom: i64) -> Money {
        Money(&self.0 * BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn mul(&self, other: &Money) -> Money {
        Money(&self.0 * &other.0)
    }

    /// True when the value has a finite decimal expansion.
    pub fn is_terminating(&self) -> bool {
        let mut d = self.0.denom().clone();
        let two = BigInt::from(2);
        let five = BigInt::from(5);
        while (&d % &two).is_zero() {
            d /= &two;
        }
        while (&d % &five).is_zero() {
            d /= &five;
        }
        d.is_one()
    }

    /// Decimal expansion rounded half away from zero to `places` digits,
    /// with trailing zeros trimmed.
    pub fn to_decimal_rounded(&self, places: u32) -> String {
        let scale = BigInt::from(10).pow(places);
        let scaled = &self.0 * BigRational::from_integer(scale.clone());
        let rounded = scaled.round().to_integer();
        format_scaled(&rounded, places)
    }
}

fn format_scaled(value: &BigInt, places: u32) -> String {
    let negative = value.is_negative();
    let digits = value.abs().to_string();
    let places = places as usize;
    let (int_part, frac_part) = if digits.len() > places {
        let cut = digits.len() - places;
        (digits[..cut].to_string(), digits[cut..].to_string())
    } else {
        ("0".to_string(), format!("{}{}", "0".repeat(places - digits.len()), digits))
    };
    let frac = frac_part.trim_end_matches('0');
    let mut out = String::new();
    if negative && (int_part != "0" || !frac.is_empty()) {
        out.push('-');
    }
    out.push_str(&int_part);
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    out
}

impl fmt::Display for Money {
    /// Terminating values print as exact decimals, others as `p/q`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            return write!(f, "{}", self.0.numer());
        }
        if self.is_terminating() {
            // the denominator is 2^a 5^b, so max(a, b) decimal places are exact
            let mut places = 0u32;
            let mut d = self.0.denom().clone();
            let ten = BigInt::from(10);
            while !(BigInt::from(10).pow(places) % &d).is_zero() {
                places += 1;
                if places > 4096 {
                    break;
                }
            }
            d = ten.pow(places) / d;
            let scaled = self.0.numer() * d;
            return write!(f, "{}", format_scaled(&scaled, places));
        }
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Money({self})")
    }
}

impl FromStr for Money {
    type Err = Error;

    /// Accepts `[-+]digits[.digits]` or `[-+]p/q`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::InvalidMoney(s.to_string());
        let t = s.trim();
        if t.is_empty() {
            return Err(bad());
        }
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Money(BigRational::new(n, d)));
        }
        let (negative, body) = match t.as_bytes()[0] {
            b'-' => (true, &t[1..]),
            b'+' => (false, &t[1..]),
            _ => (false, t),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
        let denom = BigInt::from(10).pow(frac_part.len() as u32);
        let mut r = BigRational::new(numer, denom);
        if negative {
            r = -r;
        }
        Ok(Money(r))
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Money> for &'a Money {
    type Output = Money;
    fn add(self, rhs: &Money) -> Money {
        Money(&self.0 + &rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl<'a> Sub<&'a Money> for &'a Money {
    type Output = Money;
    fn sub(self, rhs: &Money) -> Money {
        Money(&self.0 - &rhs.0)
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl AddAssign<&Money> for Money {
    fn add_assign(&mut self, rhs: &Money) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Money> for Money {
    fn sub_assign(&mut self, rhs: &Money) {
        self.0 -= &rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::zero(), |acc, m| acc + m)
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        let mut acc = Money::zero();
        for m in iter {
            acc += m;
        }
        acc
    }
}

impl From<i64> for Money {
    fn from(v: i64) -> Self {
        Money::from_integer(v)
    }
}

/// The arithmetic the mechanisms need from an amount type.
///
/// Mechanism pricing only takes maxima and differences of bids, so any
/// exact ordered group works. [`Money`] is the general case; `i128` is used
/// when every bid in a batch shares a small common denominator and has been
/// scaled to an integer.
pub trait Amount: Clone + Ord + fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
}

impl Amount for Money {
    fn zero() -> Self {
        Money::zero()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
}

impl Amount for i128 {
    fn zero() -> Self {
        0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
}

/// Scales a batch of amounts to integers by their common denominator.
///
/// Returns the integers and the scale, or `None` if the scaled values do not
/// fit in `i128` with headroom for sums. Scaling by a positive constant
/// preserves every comparison and every difference up to the same factor.
pub fn scale_to_integers(values: &[Money]) -> Option<(Vec<i128>, BigInt)> {
    let mut scale = BigInt::one();
    for v in values {
        scale = scale.lcm(v.0.denom());
    }
    let limit = BigInt::from(i128::MAX >> 16);
    let mut out = Vec::with_capacity(values.len());
    for v in values {
        let scaled = (v.0.numer() * &scale) / v.0.denom();
        if scaled.abs() > limit {
            return None;
        }
        out.push(scaled.to_i128()?);
    }
    Some((out, scale))
}

impl Money {
    /// Inverse of [`scale_to_integers`] for a single value.
    pub fn from_scaled(value: i128, scale: &BigInt) -> Money {
        Money(BigRational::new(BigInt::from(value), scale.clone()))
    }
}
