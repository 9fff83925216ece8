//! Exact rational numbers extended with a single positive infinity.
//!
//! Every load, speed, size, price and cost in the crate is a [`Scalar`]. The
//! finite part is an arbitrary-precision [`BigRational`] kept in lowest terms,
//! so equality is structural and the knife-edge comparisons made by the
//! pricing scheme and the consistency checker are decided exactly.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("undefined operation: infinity minus infinity")]
    InfMinusInf,
    #[error("undefined operation: {0} minus infinity")]
    FiniteMinusInf(String),
    #[error("undefined operation: division involving infinity ({0})")]
    DivInfinity(String),
    #[error("division by zero")]
    DivByZero,
    #[error("undefined operation: infinity times {0}")]
    InfTimes(String),
    #[error("cannot parse scalar {0:?}")]
    Parse(String),
}

/// A rational number or `+inf`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Finite(BigRational),
    Infinity,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Finite(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Finite(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::Finite(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num/den`, reduced. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Scalar::Finite(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Scalar::Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Scalar::Infinity)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Scalar::Finite(r) if r.is_zero())
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Scalar::Finite(r) => r.is_positive(),
            Scalar::Infinity => true,
        }
    }

    pub fn is_negative(&self) -> bool {
        matches!(self, Scalar::Finite(r) if r.is_negative())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Finite(r) => Some(r),
            Scalar::Infinity => None,
        }
    }

    pub fn try_sub(&self, rhs: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, rhs) {
            (Scalar::Finite(a), Scalar::Finite(b)) => Ok(Scalar::Finite(a - b)),
            (Scalar::Infinity, Scalar::Finite(_)) => Ok(Scalar::Infinity),
            (Scalar::Infinity, Scalar::Infinity) => Err(ScalarError::InfMinusInf),
            (Scalar::Finite(a), Scalar::Infinity) => Err(ScalarError::FiniteMinusInf(a.to_string())),
        }
    }

    /// Division. `inf / positive` is `inf`; anything divided by `inf` is an error.
    pub fn try_div(&self, rhs: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, rhs) {
            (_, Scalar::Infinity) => Err(ScalarError::DivInfinity(format!("{self} / inf"))),
            (_, Scalar::Finite(b)) if b.is_zero() => Err(ScalarError::DivByZero),
            (Scalar::Finite(a), Scalar::Finite(b)) => Ok(Scalar::Finite(a / b)),
            (Scalar::Infinity, Scalar::Finite(b)) if b.is_positive() => Ok(Scalar::Infinity),
            (Scalar::Infinity, Scalar::Finite(b)) => {
                Err(ScalarError::DivInfinity(format!("inf / {b}")))
            }
        }
    }

    /// Multiplication. `inf * positive` is `inf`; `inf * 0` and `inf * negative` are errors.
    pub fn try_mul(&self, rhs: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, rhs) {
            (Scalar::Finite(a), Scalar::Finite(b)) => Ok(Scalar::Finite(a * b)),
            (Scalar::Infinity, Scalar::Infinity) => Ok(Scalar::Infinity),
            (Scalar::Infinity, Scalar::Finite(x)) | (Scalar::Finite(x), Scalar::Infinity) => {
                if x.is_positive() {
                    Ok(Scalar::Infinity)
                } else {
                    Err(ScalarError::InfTimes(x.to_string()))
                }
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Finite(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Infinity => f64::INFINITY,
        }
    }

    /// Smallest integer `e` with `2^e >= self`. Requires a positive finite value.
    pub fn ceil_log2(&self) -> Option<i64> {
        let r = match self {
            Scalar::Finite(r) if r.is_positive() => r,
            _ => return None,
        };
        let num = r.numer();
        let den = r.denom();
        // bits(n) - bits(d) is within one of log2(n/d).
        let mut e = num.bits() as i64 - den.bits() as i64;
        // Move e so that 2^(e-1) < r <= 2^e.
        while !pow2_ge(num, den, e) {
            e += 1;
        }
        while pow2_ge(num, den, e - 1) {
            e -= 1;
        }
        Some(e)
    }

    /// `2^e` as an exact scalar.
    pub fn pow2(e: i64) -> Scalar {
        let one = BigInt::one();
        if e >= 0 {
            Scalar::Finite(BigRational::from_integer(one << (e as usize)))
        } else {
            Scalar::Finite(BigRational::new(one.clone(), one << ((-e) as usize)))
        }
    }

    pub fn max_of<'a, I: IntoIterator<Item = &'a Scalar>>(it: I) -> Option<Scalar> {
        it.into_iter().max().cloned()
    }
}

/// `2^e >= num/den` for positive `num`, `den`.
fn pow2_ge(num: &BigInt, den: &BigInt, e: i64) -> bool {
    if e >= 0 {
        (den << (e as usize)) >= *num
    } else {
        *den >= (num << ((-e) as usize))
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Finite(a), Scalar::Finite(b)) => a.cmp(b),
            (Scalar::Finite(_), Scalar::Infinity) => Ordering::Less,
            (Scalar::Infinity, Scalar::Finite(_)) => Ordering::Greater,
            (Scalar::Infinity, Scalar::Infinity) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar::Finite(r)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_int(n)
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &'a Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Finite(a), Scalar::Finite(b)) => Scalar::Finite(a + b),
            _ => Scalar::Infinity,
        }
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Finite(a), Scalar::Finite(b)) => Scalar::Finite(a + b),
            _ => Scalar::Infinity,
        }
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        match (&mut *self, rhs) {
            (Scalar::Finite(a), Scalar::Finite(b)) => *a += b,
            _ => *self = Scalar::Infinity,
        }
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| &acc + x)
    }
}

/// Traps on `inf - inf` and `finite - inf`; use [`Scalar::try_sub`] to recover.
impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &'a Scalar) -> Scalar {
        self.try_sub(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        &self - &rhs
    }
}

/// Traps on undefined products; use [`Scalar::try_mul`] to recover.
impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &'a Scalar) -> Scalar {
        self.try_mul(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        &self * &rhs
    }
}

/// Traps on division by zero or by infinity; use [`Scalar::try_div`] to recover.
impl<'a> Div<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn div(self, rhs: &'a Scalar) -> Scalar {
        self.try_div(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        &self / &rhs
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Finite(a) => Scalar::Finite(-a),
            Scalar::Infinity => panic!("negative infinity is not representable"),
        }
    }
}

/// Always `num/den` (integers included, e.g. `7/1`) or `inf`.
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Scalar::Infinity => f.write_str("inf"),
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Scalar {
    type Err = ScalarError;

    /// Accepts `inf`, `num/den` and plain integers.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t == "∞" {
            return Ok(Scalar::Infinity);
        }
        let err = || ScalarError::Parse(s.to_string());
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| err())?;
        let d: BigInt = d.parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        Ok(Scalar::Finite(BigRational::new(n, d)))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Int(n) => Ok(Scalar::from_int(n)),
        }
    }
}

/// Joins scalars with `;` as used by the trace and price logs.
pub fn join(values: &[Scalar]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Inverse of [`join`]. The empty string yields an empty vector.
pub fn split(field: &str) -> Result<Vec<Scalar>, ScalarError> {
    if field.trim().is_empty() {
        return Ok(Vec::new());
    }
    field.split(';').map(str::parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    #[test]
    fn canonical_form() {
        assert_eq!(s("2/4"), s("1/2"));
        assert_eq!(s("3/-6").to_string(), "-1/2");
        assert_eq!(s("7").to_string(), "7/1");
        assert_eq!(s("inf"), Scalar::Infinity);
        assert!("1/0".parse::<Scalar>().is_err());
        assert!("x".parse::<Scalar>().is_err());
    }

    #[test]
    fn infinity_rules() {
        let inf = Scalar::Infinity;
        let one = Scalar::one();
        assert_eq!(&inf + &one, inf);
        assert_eq!(inf.try_sub(&one).unwrap(), inf);
        assert!(inf > s("1000000000000/1"));
        assert_eq!(inf.try_sub(&inf), Err(ScalarError::InfMinusInf));
        assert!(one.try_div(&inf).is_err());
        assert!(one.try_sub(&inf).is_err());
        assert!(inf.try_mul(&Scalar::zero()).is_err());
        assert_eq!(inf.try_div(&s("2")).unwrap(), inf);
    }

    #[test]
    #[should_panic(expected = "infinity minus infinity")]
    fn inf_minus_inf_traps() {
        let _ = &Scalar::Infinity - &Scalar::Infinity;
    }

    #[test]
    fn ceil_log2_exact() {
        assert_eq!(s("5").ceil_log2(), Some(3));
        assert_eq!(s("4").ceil_log2(), Some(2));
        assert_eq!(s("3/2").ceil_log2(), Some(1));
        assert_eq!(s("1").ceil_log2(), Some(0));
        assert_eq!(s("1/8").ceil_log2(), Some(-3));
        assert_eq!(s("1/7").ceil_log2(), Some(-2));
        assert_eq!(s("1/9").ceil_log2(), Some(-3));
        assert_eq!(Scalar::zero().ceil_log2(), None);
        assert_eq!(Scalar::pow2(-3), s("1/8"));
    }

    fn arb_scalar() -> impl Strategy<Value = Scalar> {
        (-1000i64..1000, 1i64..200).prop_map(|(n, d)| Scalar::ratio(n, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn add_mul_associative_commutative(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }

        #[test]
        fn text_round_trip(a in arb_scalar()) {
            prop_assert_eq!(a.to_string().parse::<Scalar>().unwrap(), a);
        }

        #[test]
        fn ceil_log2_brackets(n in 1i64..100_000, d in 1i64..100_000) {
            let a = Scalar::ratio(n, d);
            let e = a.ceil_log2().unwrap();
            prop_assert!(Scalar::pow2(e) >= a);
            prop_assert!(Scalar::pow2(e - 1) < a);
        }
    }
}
