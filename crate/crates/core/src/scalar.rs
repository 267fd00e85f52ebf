//! Numeric policy shared by every module.
//!
//! Masses are either `f64` or exact [`BigRational`]. Comparisons go through
//! [`Scalar::le_tol`] and friends so that float code paths absorb rounding
//! while rational code paths compare exactly. Entropies are always `f64`.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};

use num::traits::{Num, Signed, ToPrimitive};
use num::{BigInt, BigRational};

/// Float residuals below this are treated as exhausted.
pub const SNAP_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumericMode {
    Float64,
    ExactRational,
}

impl NumericMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NumericMode::Float64 => "float64",
            NumericMode::ExactRational => "exact-rational",
        }
    }
}

impl Display for NumericMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tolerances used for float-mode checks. Exact mode ignores them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Allowed deviation of a mass sum or marginal from its target.
    pub mass: f64,
    /// Slack granted to bound inequalities.
    pub compare: f64,
}

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance {
        mass: 1e-9,
        compare: 1e-9,
    };

    /// Same value for both tolerances.
    pub fn uniform(tol: f64) -> Self {
        Tolerance {
            mass: tol,
            compare: tol,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub trait Scalar:
    Num + Signed + Clone + Debug + Display + PartialOrd + Send + Sync + 'static
{
    const MODE: NumericMode;

    fn to_f64(&self) -> f64;

    /// `num / den` in this representation.
    fn ratio(num: i64, den: i64) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::ratio(n as i64, 1)
    }

    /// `self <= other`, with `tol` slack in float mode.
    fn le_tol(&self, other: &Self, tol: f64) -> bool;

    /// `|self - other| <= tol` in float mode, equality in exact mode.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;

    /// Float residuals below [`SNAP_THRESHOLD`] become zero.
    fn snap(self) -> Self {
        self
    }

    /// Strictly greater than zero. `Signed::is_positive` counts `+0.0` as
    /// positive for floats, which is never what mass bookkeeping wants.
    fn gt_zero(&self) -> bool {
        *self > Self::zero()
    }

    /// Strictly less than zero (`-0.0` is not negative).
    fn lt_zero(&self) -> bool {
        *self < Self::zero()
    }

    fn is_exact() -> bool {
        Self::MODE == NumericMode::ExactRational
    }

    /// Exact value; floats are rounded to a multiple of `1e-12`.
    fn to_rational(&self) -> BigRational;

    /// Nearest value in this representation.
    fn from_rational(value: &BigRational) -> Self;
}

impl Scalar for f64 {
    const MODE: NumericMode = NumericMode::Float64;

    fn to_f64(&self) -> f64 {
        *self
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn le_tol(&self, other: &Self, tol: f64) -> bool {
        *self <= *other + tol
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (*self - *other).abs() <= tol
    }

    fn to_rational(&self) -> BigRational {
        rationalize(*self)
    }

    fn from_rational(value: &BigRational) -> Self {
        ToPrimitive::to_f64(value).unwrap_or(f64::NAN)
    }

    fn snap(self) -> Self {
        if self.abs() < SNAP_THRESHOLD {
            0.0
        } else {
            self
        }
    }
}

impl Scalar for BigRational {
    const MODE: NumericMode = NumericMode::ExactRational;

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn le_tol(&self, other: &Self, _tol: f64) -> bool {
        self <= other
    }

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn to_rational(&self) -> BigRational {
        self.clone()
    }

    fn from_rational(value: &BigRational) -> Self {
        value.clone()
    }
}

/// Total order over masses; inputs are never NaN.
pub fn cmp_mass<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

pub fn sum<'a, T: Scalar>(values: impl IntoIterator<Item = &'a T>) -> T {
    values.into_iter().fold(T::zero(), |acc, v| acc + v.clone())
}

/// Nearest rational with denominator `10^12` to a float.
pub fn rationalize(x: f64) -> BigRational {
    const SCALE: i64 = 1_000_000_000_000;
    let scaled = (x * SCALE as f64).round();
    BigRational::new(BigInt::from(scaled as i64), BigInt::from(SCALE))
}

const MAX_EXPONENT: u32 = 4096;

/// Parses `"3/8"`, `"0.375"` or `"1e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    // keeps "1e999999999" from allocating a gigantic power of ten
    if exponent.unsigned_abs() > MAX_EXPONENT {
        return None;
    }
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(digits * num::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}
