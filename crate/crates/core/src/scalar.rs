//! Scalar modes shared by every function representation.
//!
//! Two families implement [`Scalar`]: exact big rationals, where comparison is
//! exact, and IEEE floats (`f64`, `f32`), where every comparison goes through a
//! tolerance. Functions are generic over the scalar, so a single computation can
//! never mix the two modes.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Largest root degree for which fractional powers are compared exactly.
pub const MAX_EXACT_ROOT: u32 = 64;

/// Default float comparison tolerance.
pub const EPS_CMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    Rational,
    F64,
    F32,
}

impl ScalarMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalarMode::Rational => "rational",
            ScalarMode::F64 => "f64",
            ScalarMode::F32 => "f32",
        }
    }
}

impl Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalarMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(ScalarMode::Rational),
            "f64" => Ok(ScalarMode::F64),
            "f32" => Ok(ScalarMode::F32),
            other => Err(Error::InvalidParameter(format!("unknown scalar mode {other:?}"))),
        }
    }
}

/// A real number in one of the supported arithmetic modes.
pub trait Scalar:
    Clone + Debug + Display + PartialEq + PartialOrd + Signed + FromPrimitive + Send + Sync + 'static
{
    const MODE: ScalarMode;
    /// Relative comparison tolerance; `0.0` for exact types.
    const EPS: f64;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn to_f64(&self) -> f64;

    fn parse(s: &str) -> Result<Self>;

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self>;

    fn floor_i64(&self) -> i64;

    fn ceil_i64(&self) -> i64;

    fn is_exact() -> bool {
        Self::EPS == 0.0
    }

    /// Compare under the mode's tolerance. Exact for rationals.
    fn cmp_tol(&self, other: &Self) -> Ordering {
        if Self::is_exact() {
            return self.partial_cmp(other).unwrap_or(Ordering::Equal);
        }
        let (a, b) = (self.to_f64(), other.to_f64());
        let scale = 1.0f64.max(a.abs()).max(b.abs());
        if (a - b).abs() <= Self::EPS * scale {
            Ordering::Equal
        } else {
            a.partial_cmp(&b).unwrap_or(Ordering::Equal)
        }
    }

    fn eq_tol(&self, other: &Self) -> bool {
        self.cmp_tol(other) == Ordering::Equal
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for Rational {
    const MODE: ScalarMode = ScalarMode::Rational;
    const EPS: f64 = 0.0;

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // numerator/denominator too large for a direct conversion
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }

    fn parse(s: &str) -> Result<Self> {
        parse_rational(s)
    }

    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) if n.is_i64() => Ok(Self::int(n.as_i64().unwrap_or_default())),
            other => Err(Error::ModeMismatch {
                expected: "rational string \"p/q\"".into(),
                found: other.to_string(),
            }),
        }
    }

    fn floor_i64(&self) -> i64 {
        self.floor().to_integer().to_i64().unwrap_or(i64::MIN)
    }

    fn ceil_i64(&self) -> i64 {
        self.ceil().to_integer().to_i64().unwrap_or(i64::MAX)
    }
}

macro_rules! impl_float_scalar {
    ($t:ty, $mode:expr, $eps:expr) => {
        impl Scalar for $t {
            const MODE: ScalarMode = $mode;
            const EPS: f64 = $eps;

            fn from_ratio(num: i64, den: i64) -> Self {
                (num as f64 / den as f64) as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn parse(s: &str) -> Result<Self> {
                let s = s.trim();
                if s.contains('/') {
                    Ok(<Rational as Scalar>::to_f64(&parse_rational(s)?) as $t)
                } else {
                    s.parse::<$t>().map_err(|_| Error::ParseScalar(s.to_string()))
                }
            }

            fn to_json(&self) -> Value {
                serde_json::Number::from_f64(*self as f64)
                    .map(Value::Number)
                    .unwrap_or(Value::Null)
            }

            fn from_json(v: &Value) -> Result<Self> {
                match v {
                    Value::Number(n) => n
                        .as_f64()
                        .map(|x| x as $t)
                        .ok_or_else(|| Error::ParseScalar(n.to_string())),
                    other => Err(Error::ModeMismatch {
                        expected: "JSON number".into(),
                        found: other.to_string(),
                    }),
                }
            }

            fn floor_i64(&self) -> i64 {
                self.floor() as i64
            }

            fn ceil_i64(&self) -> i64 {
                self.ceil() as i64
            }
        }
    };
}

impl_float_scalar!(f64, ScalarMode::F64, EPS_CMP);
impl_float_scalar!(f32, ScalarMode::F32, 1e-5);

/// Parses `"p/q"`, an integer, or a finite decimal (`"-0.125"`, `"2.5e-3"`) exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let err = || Error::ParseScalar(s.to_string());
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err())?;
        let q: BigInt = q.trim().parse().map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all: BigInt = format!("{int_part}{frac_part}").parse().map_err(|_| err())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = Rational::from_integer(all);
    if scale >= 0 {
        r *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

/// Fractional order `β ∈ [0, 1)`, always held as a reduced fraction `p/u`.
///
/// Decimal input is converted exactly (`0.25` is `1/4`), which is what makes the
/// cross-multiplied power comparisons in [`Average`] possible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Beta {
    num: u64,
    den: u64,
}

impl Beta {
    pub const ZERO: Beta = Beta { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num >= den {
            return Err(Error::InvalidParameter(format!(
                "beta must satisfy 0 <= beta < 1, got {num}/{den}"
            )));
        }
        let g = num_integer::gcd(num, den);
        Ok(Beta { num: num / g, den: den / g })
    }

    pub fn from_rational(r: &Rational) -> Result<Self> {
        let (n, d) = (r.numer().to_u64(), r.denom().to_u64());
        match (n, d) {
            (Some(n), Some(d)) => Beta::new(n, d),
            _ => Err(Error::InvalidParameter(format!(
                "beta must satisfy 0 <= beta < 1, got {r}"
            ))),
        }
    }

    pub fn numer(self) -> u64 {
        self.num
    }

    pub fn denom(self) -> u64 {
        self.den
    }

    pub fn is_classical(self) -> bool {
        self.num == 0
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn as_rational(self) -> Rational {
        Rational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    /// `q = 1/(1-β)`.
    pub fn q(self) -> Rational {
        Rational::new(BigInt::from(self.den), BigInt::from(self.den - self.num))
    }

    pub fn q_f64(self) -> f64 {
        self.den as f64 / (self.den - self.num) as f64
    }

    /// Root degree used for exact comparisons, if small enough.
    pub fn exact_degree(self) -> Option<u32> {
        (self.den <= MAX_EXACT_ROOT as u64).then_some(self.den as u32)
    }
}

impl Default for Beta {
    fn default() -> Self {
        Beta::ZERO
    }
}

impl Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Beta {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Beta::from_rational(&parse_rational(s)?)
    }
}

impl Serialize for Beta {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A fractional average `length^(β-1) · mass`.
///
/// Masses are integrals (or sums) of `|f|` and therefore nonnegative. A zero
/// length stands for the degenerate window, whose value is zero.
#[derive(Clone, Debug)]
pub struct Average<S> {
    pub mass: S,
    pub length: S,
    pub beta: Beta,
}

impl<S: Scalar> Average<S> {
    pub fn new(mass: S, length: S, beta: Beta) -> Self {
        debug_assert!(!mass.is_negative(), "average mass must be nonnegative");
        debug_assert!(!length.is_negative(), "average length must be nonnegative");
        Average { mass, length, beta }
    }

    /// An average whose value is exactly `v`, for any order.
    pub fn of_value(v: S, beta: Beta) -> Self {
        Average::new(v, S::one(), beta)
    }

    pub fn zero(beta: Beta) -> Self {
        Average::new(S::zero(), S::one(), beta)
    }

    fn is_zero_value(&self) -> bool {
        self.length.is_zero() || self.mass.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero_value() {
            return 0.0;
        }
        if self.beta.is_classical() {
            return self.mass.to_f64() / self.length.to_f64();
        }
        self.length.to_f64().powf(self.beta.as_f64() - 1.0) * self.mass.to_f64()
    }

    /// The value in the scalar's own arithmetic, when it is representable there.
    pub fn exact_value(&self) -> Option<S> {
        if self.is_zero_value() {
            return Some(S::zero());
        }
        if self.beta.is_classical() {
            return Some(self.mass.clone() / self.length.clone());
        }
        if self.length.is_one() {
            return Some(self.mass.clone());
        }
        None
    }

    /// The value in the scalar type: exact when representable, otherwise through `f64`.
    pub fn value(&self) -> S
    where
        S: FromPrimitive,
    {
        self.exact_value()
            .or_else(|| S::from_f64(self.to_f64()))
            .unwrap_or_else(S::zero)
    }

    /// Total order on values: exact for rationals (cross-multiplied integer powers),
    /// toleranced for floats.
    pub fn compare(&self, other: &Self) -> Ordering {
        debug_assert_eq!(self.beta, other.beta);
        match (self.is_zero_value(), other.is_zero_value()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        if self.beta.is_classical() && S::is_exact() {
            let lhs = self.mass.clone() * other.length.clone();
            let rhs = other.mass.clone() * self.length.clone();
            return lhs.partial_cmp(&rhs).unwrap_or(Ordering::Equal);
        }
        if S::is_exact() {
            if let Some(u) = self.beta.exact_degree() {
                let u = u as usize;
                let k = u - self.beta.numer() as usize;
                let lhs = num_traits::pow(self.mass.clone(), u) * num_traits::pow(other.length.clone(), k);
                let rhs = num_traits::pow(other.mass.clone(), u) * num_traits::pow(self.length.clone(), k);
                return lhs.partial_cmp(&rhs).unwrap_or(Ordering::Equal);
            }
        }
        let (a, b) = (self.to_f64(), other.to_f64());
        let eps = if S::is_exact() { EPS_CMP } else { S::EPS };
        let scale = 1.0f64.max(a.abs()).max(b.abs());
        if (a - b).abs() <= eps * scale {
            Ordering::Equal
        } else {
            a.partial_cmp(&b).unwrap_or(Ordering::Equal)
        }
    }

    pub fn same_value(&self, other: &Self) -> bool {
        self.compare(other) == Ordering::Equal
    }
}

impl<S: Scalar> Display for Average<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact_value() {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "{}", self.to_f64()),
        }
    }
}

/// Converts between scalar modes through the decimal or `p/q` text form.
pub fn convert<A: Scalar, B: Scalar>(x: &A) -> B {
    B::parse(&x.to_string()).unwrap_or_else(|_| B::from_f64(x.to_f64()).unwrap_or_else(B::zero))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn parses_rationals_and_decimals() {
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational("-0.125").unwrap(), q(-1, 8));
        assert_eq!(parse_rational("2.5e-1").unwrap(), q(1, 4));
        assert_eq!(parse_rational("7").unwrap(), q(7, 1));
        assert_eq!(parse_rational("1e2").unwrap(), q(100, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn beta_accepts_decimal_and_fraction() {
        let b: Beta = "0.5".parse().unwrap();
        assert_eq!(b, Beta::new(1, 2).unwrap());
        assert_eq!("1/4".parse::<Beta>().unwrap().to_string(), "1/4");
        assert!("1".parse::<Beta>().is_err());
        assert!("-1/2".parse::<Beta>().is_err());
        assert_eq!(Beta::new(1, 2).unwrap().q(), q(2, 1));
        assert_eq!(Beta::new(3, 4).unwrap().q_f64(), 4.0);
    }

    #[test]
    fn float_comparison_uses_tolerance() {
        assert_eq!(1.0f64.cmp_tol(&(1.0 + 1e-14)), Ordering::Equal);
        assert_eq!(1.0f64.cmp_tol(&(1.0 + 1e-9)), Ordering::Less);
        assert_eq!(q(1, 3).cmp_tol(&q(1, 3)), Ordering::Equal);
        assert_eq!(q(1, 3).cmp_tol(&q(333333333333, 1000000000000)), Ordering::Greater);
    }

    #[test]
    fn tiny_float_windows_compare_by_average() {
        let a = Average::new(1.75e-6f64, 1e-6, Beta::ZERO);
        let b = Average::new(1.7499993e-6f64, 1e-6, Beta::ZERO);
        assert_eq!(a.compare(&b), Ordering::Greater);
    }

    #[test]
    fn exact_power_comparison_detects_ties() {
        // L(s) = (s+1)^(-1/2) ((s+1)/2 + 1) with s = 0 and s = 3: both equal 3/2.
        let beta = Beta::new(1, 2).unwrap();
        let a = Average::new(q(3, 2), q(1, 1), beta);
        let b = Average::new(q(3, 1), q(4, 1), beta);
        assert_eq!(a.compare(&b), Ordering::Equal);
        let c = Average::new(q(7, 2), q(5, 1), beta);
        assert_eq!(c.compare(&a), Ordering::Greater);
        assert!((c.to_f64() - 3.5 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_length_average_is_zero() {
        let beta = Beta::new(1, 3).unwrap();
        let z = Average::new(0.0f64, 0.0, beta);
        let p = Average::new(1e-9f64, 2.0, beta);
        assert_eq!(z.compare(&p), Ordering::Less);
        assert_eq!(z.to_f64(), 0.0);
    }

    #[test]
    fn json_roundtrip_per_mode() {
        let r = q(-7, 3);
        assert_eq!(Rational::from_json(&r.to_json()).unwrap(), r);
        assert_eq!(f64::from_json(&0.25f64.to_json()).unwrap(), 0.25);
        assert!(f64::from_json(&Value::String("1/2".into())).is_err());
        assert!(Rational::from_json(&serde_json::json!(0.5)).is_err());
    }
}
