//! Exact rationals, decimal rendering and the scalar abstraction shared by
//! the exact and floating-point evaluation paths.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always stored normalized (positive
/// denominator, coprime parts).
pub type Rational = num_rational::BigRational;

/// Extra decimal digits carried by transcendental evaluations so that
/// rounding to the requested number of digits is exact.
pub const GUARD_DIGITS: u32 = 10;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"a/b"` or `"a"` (optional sign, surrounding whitespace ignored).
pub fn rat_parse(text: &str) -> Result<Rational> {
    let malformed = |reason: &str| Error::Parse {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let parse_int = |part: &str| -> Result<BigInt> {
        let part = part.trim();
        let digits = part.strip_prefix(['-', '+']).unwrap_or(part);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed("expected an integer or a fraction a/b"));
        }
        part.parse::<BigInt>()
            .map_err(|e| malformed(&e.to_string()))
    };
    let (num, den) = match text.trim().split_once('/') {
        Some((n, d)) => (parse_int(n)?, parse_int(d)?),
        None => (parse_int(text)?, BigInt::one()),
    };
    if den.is_zero() {
        return Err(Error::ZeroDenominator(text.to_string()));
    }
    Ok(Rational::new(num, den))
}

/// Canonical `num/den` form, denominator omitted when it is 1.
pub fn rat_to_string(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Rounding rule for decimal rendering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Rounding {
    #[default]
    HalfEven,
    /// Toward negative infinity; used for lower bounds.
    Floor,
}

/// Decimal expansion with exactly `digits` fractional digits, rounded
/// half-to-even.
pub fn rat_to_decimal(x: &Rational, digits: u32) -> String {
    rat_to_decimal_with(x, digits, Rounding::HalfEven)
}

pub fn rat_to_decimal_with(x: &Rational, digits: u32, rounding: Rounding) -> String {
    let negative = x.is_negative();
    let magnitude = x.abs();
    let scaled = magnitude.numer() * BigInt::from(10u32).pow(digits);
    let (mut q, r) = scaled.div_rem(magnitude.denom());
    match rounding {
        Rounding::HalfEven => match (&r * 2u32).cmp(magnitude.denom()) {
            Ordering::Greater => q += 1u32,
            Ordering::Equal if q.is_odd() => q += 1u32,
            _ => {}
        },
        Rounding::Floor => {
            if negative && !r.is_zero() {
                q += 1u32;
            }
        }
    }
    let mut body = q.to_string();
    let width = digits as usize + 1;
    if body.len() < width {
        body = format!("{}{}", "0".repeat(width - body.len()), body);
    }
    if digits > 0 {
        body.insert(body.len() - digits as usize, '.');
    }
    if negative && !q.is_zero() {
        body.insert(0, '-');
    }
    body
}

/// `exp(-x)` for `x >= 0` as a rational with absolute error below
/// `10^-(digits + GUARD_DIGITS)`.
///
/// The argument is halved `j` times until it is at most 1/2, the alternating
/// Taylor series is summed in fixed point, and the result is squared `j`
/// times. Each squaring at most doubles the absolute error, so the working
/// precision carries `ceil(j·log10 2) + 6` digits on top of the guard digits
/// (enough to absorb the per-term truncations for any precision below 10^4
/// digits).
///
/// # Panics
///
/// If `x` is negative.
pub fn exp_neg(x: &Rational, digits: u32) -> Rational {
    assert!(!x.is_negative(), "exp_neg requires x >= 0");
    if x.is_zero() {
        return Rational::one();
    }
    let half = rat(1, 2);
    let mut y = x.clone();
    let mut halvings = 0u32;
    while y > half {
        y /= BigInt::from(2);
        halvings += 1;
    }
    let precision = digits + GUARD_DIGITS + (halvings * 30_103).div_ceil(100_000) + 6;
    let unit = BigInt::from(10u32).pow(precision);
    let y_fixed = (y * Rational::from_integer(unit.clone())).round().to_integer();

    let mut sum = unit.clone();
    let mut term = unit.clone();
    let mut n = 1u32;
    loop {
        term = &term * &y_fixed / (&unit * n);
        if term.is_zero() {
            break;
        }
        if n % 2 == 1 {
            sum -= &term;
        } else {
            sum += &term;
        }
        n += 1;
    }
    for _ in 0..halvings {
        sum = &sum * &sum / &unit;
    }
    Rational::new(sum, unit)
}

/// Arithmetic needed by the generic solvers and evaluators. Implemented for
/// exact [`Rational`], `f64` (fast path for large instances) and
/// [`Fixed`] (high-precision fixed point).
pub trait Scalar:
    Clone
    + PartialOrd
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Zero
    + One
{
    fn from_rational(x: &Rational) -> Self;
    fn from_usize(n: usize) -> Self;
    fn to_rational(&self) -> Rational;
    fn as_f64(&self) -> f64;

    /// Adds `x` into a running sum. `carry` collects rounding compensation
    /// for inexact types; finish with [`Scalar::settle`].
    fn accumulate(sum: &mut Self, carry: &mut Self, x: Self) {
        let _ = carry;
        let s = std::mem::replace(sum, Self::zero());
        *sum = s + x;
    }

    fn settle(sum: Self, carry: Self) -> Self {
        sum + carry
    }
}

impl Scalar for Rational {
    fn from_rational(x: &Rational) -> Self {
        x.clone()
    }
    fn from_usize(n: usize) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn from_rational(x: &Rational) -> Self {
        ToPrimitive::to_f64(x).unwrap_or(f64::NAN)
    }
    fn from_usize(n: usize) -> Self {
        n as f64
    }
    fn to_rational(&self) -> Rational {
        Rational::from_float(*self).unwrap_or_else(<Rational as Zero>::zero)
    }
    fn as_f64(&self) -> f64 {
        *self
    }

    // Neumaier summation.
    fn accumulate(sum: &mut Self, carry: &mut Self, x: Self) {
        let t = *sum + x;
        if sum.abs() >= x.abs() {
            *carry += (*sum - t) + x;
        } else {
            *carry += (x - t) + *sum;
        }
        *sum = t;
    }
}

/// Fixed-point decimal with `DIGITS` fractional digits: the value is
/// `mantissa / 10^DIGITS`. Multiplication and division truncate toward
/// zero, so each operation loses at most one unit in the last place.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed<const DIGITS: u32> {
    mantissa: BigInt,
}

impl<const DIGITS: u32> Fixed<DIGITS> {
    fn unit() -> BigInt {
        BigInt::from(10u32).pow(DIGITS)
    }

    pub fn from_mantissa(mantissa: BigInt) -> Self {
        Fixed { mantissa }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    /// One unit in the last place.
    pub fn ulp() -> Self {
        Fixed {
            mantissa: BigInt::one(),
        }
    }
}

impl<const DIGITS: u32> fmt::Debug for Fixed<DIGITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&rat_to_decimal(&self.to_rational(), DIGITS))
    }
}

impl<const DIGITS: u32> Add for Fixed<DIGITS> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Fixed {
            mantissa: self.mantissa + rhs.mantissa,
        }
    }
}

impl<const DIGITS: u32> Sub for Fixed<DIGITS> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Fixed {
            mantissa: self.mantissa - rhs.mantissa,
        }
    }
}

impl<const DIGITS: u32> Mul for Fixed<DIGITS> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Fixed {
            mantissa: self.mantissa * rhs.mantissa / Self::unit(),
        }
    }
}

impl<const DIGITS: u32> Div for Fixed<DIGITS> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        Fixed {
            mantissa: self.mantissa * Self::unit() / rhs.mantissa,
        }
    }
}

impl<const DIGITS: u32> Zero for Fixed<DIGITS> {
    fn zero() -> Self {
        Fixed {
            mantissa: BigInt::zero(),
        }
    }
    fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }
}

impl<const DIGITS: u32> One for Fixed<DIGITS> {
    fn one() -> Self {
        Fixed {
            mantissa: Self::unit(),
        }
    }
}

impl<const DIGITS: u32> Scalar for Fixed<DIGITS> {
    fn from_rational(x: &Rational) -> Self {
        Fixed {
            mantissa: (x * Rational::from_integer(Self::unit())).to_integer(),
        }
    }
    fn from_usize(n: usize) -> Self {
        Fixed {
            mantissa: BigInt::from(n) * Self::unit(),
        }
    }
    fn to_rational(&self) -> Rational {
        Rational::new(self.mantissa.clone(), Self::unit())
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(&self.to_rational()).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_examples() {
        assert_eq!(rat_parse("505/1152").unwrap(), rat(505, 1152));
        assert_eq!(rat_parse("2/4").unwrap(), rat(1, 2));
        assert_eq!(rat_parse("-3/6").unwrap(), rat(-1, 2));
        assert_eq!(rat_parse(" 7 ").unwrap(), rat_int(7));
        assert_eq!(rat_to_string(&rat_parse("2/4").unwrap()), "1/2");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(rat_parse("1/0"), Err(Error::ZeroDenominator(_))));
        for bad in ["", "abc", "1/", "/2", "1.5", "1/2/3", "--1"] {
            assert!(
                matches!(rat_parse(bad), Err(Error::Parse { .. })),
                "{bad:?} should not parse"
            );
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(rat_to_decimal(&rat(11, 24), 6), "0.458333");
        assert_eq!(rat_to_decimal(&rat(1, 2), 3), "0.500");
        assert_eq!(rat_to_decimal(&rat(2761, 1152), 6), "2.396701");
        assert_eq!(rat_to_decimal(&rat(-1, 3), 2), "-0.33");
        assert_eq!(rat_to_decimal(&rat(-1, 1000), 2), "0.00");
        assert_eq!(rat_to_decimal(&rat(7, 2), 0), "4");
    }

    #[test]
    fn decimal_rounds_half_to_even() {
        assert_eq!(rat_to_decimal(&rat(1, 8), 2), "0.12");
        assert_eq!(rat_to_decimal(&rat(3, 8), 2), "0.38");
        assert_eq!(rat_to_decimal(&rat(5, 2), 0), "2");
        assert_eq!(rat_to_decimal(&rat(-5, 2), 0), "-2");
        assert_eq!(rat_to_decimal(&rat(1, 2), 0), "0");
    }

    #[test]
    fn floor_rendering() {
        assert_eq!(rat_to_decimal_with(&rat(2, 3), 3, Rounding::Floor), "0.666");
        assert_eq!(rat_to_decimal_with(&rat(-2, 3), 3, Rounding::Floor), "-0.667");
        assert_eq!(rat_to_decimal_with(&rat(1, 2), 1, Rounding::Floor), "0.5");
        assert_eq!(rat_to_decimal_with(&rat(-1, 2000), 3, Rounding::Floor), "-0.001");
    }

    #[test]
    fn exp_neg_known_values() {
        assert_eq!(rat_to_decimal(&exp_neg(&rat_int(1), 10), 10), "0.3678794412");
        assert_eq!(exp_neg(&rat_int(0), 5), rat_int(1));
        let sum = exp_neg(&rat_int(1), 20) + exp_neg(&rat(3, 2), 20);
        assert_eq!(rat_to_decimal(&sum, 10), "0.5910096013");
        // e^-1 truncated (not rounded) to ten places, as printed in the
        // lower-bound table: 0.36787944117...
        assert!(rat_to_decimal(&exp_neg(&rat_int(1), 12), 12).starts_with("0.3678794411"));
    }

    #[test]
    fn exp_neg_large_argument() {
        // e^-20 = 2.061153622438557827965...e-9
        let v = exp_neg(&rat_int(20), 25);
        assert_eq!(rat_to_decimal(&v, 25), "0.0000000020611536224385578");
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-1000i64..1000, 1i64..200).prop_map(|(n, d)| rat(n, d))
    }

    proptest! {
        #[test]
        fn addition_is_associative(a in small_rational(), b in small_rational(), c in small_rational()) {
            prop_assert_eq!((&a + &b) + &c, &a + (&b + &c));
        }

        #[test]
        fn reciprocal_multiplies_to_one(a in small_rational()) {
            prop_assume!(!Zero::is_zero(&a));
            prop_assert_eq!(&a * (Rational::one() / &a), Rational::one());
        }

        #[test]
        fn string_round_trip(a in small_rational()) {
            prop_assert_eq!(rat_parse(&rat_to_string(&a)).unwrap(), a);
        }

        #[test]
        fn exp_neg_is_multiplicative(x in 0i64..400, y in 0i64..400, d in 1i64..50) {
            let (x, y) = (rat(x, d), rat(y, d));
            let digits = 15;
            let lhs = exp_neg(&x, digits) * exp_neg(&y, digits);
            let rhs = exp_neg(&(&x + &y), digits);
            let tolerance = rat(2, 1) / Rational::from_integer(BigInt::from(10).pow(digits));
            prop_assert!((lhs - rhs).abs() < tolerance);
        }
    }

    #[test]
    fn fixed_point_arithmetic() {
        type F = Fixed<30>;
        let third = F::from_rational(&rat(1, 3));
        let x = third.clone() * F::from_usize(3);
        assert!((F::one() - x).mantissa() <= &BigInt::from(3));
        assert_eq!(F::from_usize(6) / F::from_usize(4), F::from_rational(&rat(3, 2)));
        assert!(third < F::from_rational(&rat(1, 2)));
    }

    #[test]
    fn neumaier_summation_beats_naive() {
        let mut sum = 0.0f64;
        let mut carry = 0.0f64;
        for x in [1e16, 1.0, -1e16] {
            f64::accumulate(&mut sum, &mut carry, x);
        }
        assert_eq!(f64::settle(sum, carry), 1.0);
    }
}
