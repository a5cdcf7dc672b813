//! Exact rational numbers.
//!
//! Every amount of data (bits) and every instant (seconds) handled by the
//! curve algebra is a [`Rat`]. The representation is a reduced fraction over
//! `i128`; arithmetic is checked and overflow aborts loudly instead of
//! wrapping, so a result is either exact or absent.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};

use crate::error::Error;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Rat(Ratio<i128>);

impl Rat {
    pub const ZERO: Rat = Rat(Ratio::new_raw(0, 1));
    pub const ONE: Rat = Rat(Ratio::new_raw(1, 1));

    /// Builds `num/den` in reduced form. Panics if `den == 0`.
    pub fn new(num: i128, den: i128) -> Rat {
        assert!(den != 0, "zero denominator");
        Rat(Ratio::new(num, den))
    }

    pub fn int(v: i128) -> Rat {
        Rat(Ratio::from_integer(v))
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(self) -> Rat {
        Rat(self.0.abs())
    }

    pub fn floor(self) -> Rat {
        Rat(self.0.floor())
    }

    pub fn ceil(self) -> Rat {
        Rat(self.0.ceil())
    }

    /// `floor(self)` as an integer.
    pub fn floor_int(self) -> i128 {
        Integer::div_floor(&self.numer(), &self.denom())
    }

    pub fn ceil_int(self) -> i128 {
        Integer::div_ceil(&self.numer(), &self.denom())
    }

    /// `[self]^+`
    pub fn pos(self) -> Rat {
        if self.is_negative() {
            Rat::ZERO
        } else {
            self
        }
    }

    pub fn recip(self) -> Rat {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rat(self.0.recip())
    }

    pub fn min(self, other: Rat) -> Rat {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Rat) -> Rat {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact conversion of a finite float (every finite `f64` is a dyadic
    /// rational); `None` if it does not fit.
    pub fn from_f64(v: f64) -> Option<Rat> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(Rat::ZERO);
        }
        let bits = v.to_bits();
        let sign: i128 = if bits >> 63 == 0 { 1 } else { -1 };
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = (bits & ((1u64 << 52) - 1)) as i128;
        let (mantissa, exp) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1 << 52), exp - 1075)
        };
        let m = sign * mantissa;
        if exp >= 0 {
            let scale = 1i128.checked_shl(exp as u32).filter(|_| exp < 126)?;
            m.checked_mul(scale).map(Rat::int)
        } else {
            let shift = -exp;
            let tz = (mantissa.trailing_zeros() as i32).min(shift);
            let (m, shift) = (m >> tz, shift - tz);
            if shift >= 127 {
                return None;
            }
            Some(Rat::new(m, 1i128 << shift))
        }
    }

    /// Least common multiple of two positive rationals: the smallest positive
    /// rational that is an integer multiple of both.
    pub fn lcm(self, other: Rat) -> Rat {
        assert!(
            self.is_positive() && other.is_positive(),
            "lcm of non-positive rationals"
        );
        let num = self.numer().lcm(&other.numer());
        let den = self.denom().gcd(&other.denom());
        Rat::new(num, den)
    }

    /// Midpoint of `self` and `other`.
    pub fn mid(self, other: Rat) -> Rat {
        (self + other) / Rat::int(2)
    }

    /// Float rendering with 12 significant digits, as used in CSV exports.
    pub fn sig12(self) -> String {
        format!("{:.12e}", self.to_f64())
            .parse::<f64>()
            .map(|v| format!("{}", v))
            .unwrap_or_else(|_| "nan".to_string())
    }
}

fn overflow(op: &str) -> ! {
    panic!("rational overflow in {op}")
}

impl Add for Rat {
    type Output = Rat;
    fn add(self, rhs: Rat) -> Rat {
        Rat(self.0.checked_add(&rhs.0).unwrap_or_else(|| overflow("add")))
    }
}

impl Sub for Rat {
    type Output = Rat;
    fn sub(self, rhs: Rat) -> Rat {
        Rat(self.0.checked_sub(&rhs.0).unwrap_or_else(|| overflow("sub")))
    }
}

impl Mul for Rat {
    type Output = Rat;
    fn mul(self, rhs: Rat) -> Rat {
        Rat(self.0.checked_mul(&rhs.0).unwrap_or_else(|| overflow("mul")))
    }
}

impl Div for Rat {
    type Output = Rat;
    fn div(self, rhs: Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        Rat(self.0.checked_div(&rhs.0).unwrap_or_else(|| overflow("div")))
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl AddAssign for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        *self = *self + rhs;
    }
}

impl SubAssign for Rat {
    fn sub_assign(&mut self, rhs: Rat) {
        *self = *self - rhs;
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::ZERO, |a, b| a + b)
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Rat) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Rat) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl From<i128> for Rat {
    fn from(v: i128) -> Rat {
        Rat::int(v)
    }
}

impl From<i64> for Rat {
    fn from(v: i64) -> Rat {
        Rat::int(v as i128)
    }
}

impl From<u32> for Rat {
    fn from(v: u32) -> Rat {
        Rat::int(v as i128)
    }
}

impl From<u64> for Rat {
    fn from(v: u64) -> Rat {
        Rat::int(v as i128)
    }
}

impl From<usize> for Rat {
    fn from(v: usize) -> Rat {
        Rat::int(v as i128)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parses `"p/q"`, integers, and decimals such as `"-12.0625"` or `"1e-3"`
/// exactly (a decimal is read as a scaled integer, never through a float).
impl FromStr for Rat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Rat, Error> {
        let bad = || Error::Parse(format!("not a rational number: {s:?}"));
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: i128 = p.trim().parse().map_err(|_| bad())?;
            let q: i128 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            return Ok(Rat::new(p, q));
        }
        let (mantissa, exp) = match s.find(['e', 'E']) {
            Some(idx) => {
                let e: i32 = s[idx + 1..].parse().map_err(|_| bad())?;
                (&s[..idx], e)
            }
            None => (s, 0),
        };
        let (neg, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let joined = format!("{int_part}{frac_part}");
        let mut num: i128 = joined.parse().map_err(|_| bad())?;
        if neg {
            num = -num;
        }
        let scale = exp - frac_part.len() as i32;
        let ten = |k: u32| 10i128.checked_pow(k).ok_or_else(bad);
        Ok(if scale >= 0 {
            Rat::int(num.checked_mul(ten(scale as u32)?).ok_or_else(bad)?)
        } else {
            Rat::new(num, ten((-scale) as u32)?)
        })
    }
}

impl serde::Serialize for Rat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Accepts a JSON number (read from its decimal text, never through a
/// float) or a string such as `"3/7"` or `"0.125"`.
impl<'de> serde::Deserialize<'de> for Rat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        use serde::de::Error as _;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => n.to_string().parse().map_err(D::Error::custom),
            serde_json::Value::String(s) => s.parse().map_err(D::Error::custom),
            other => Err(D::Error::custom(format!(
                "expected a number or a \"p/q\" string, got {other}"
            ))),
        }
    }
}

/// Shorthand for `Rat::new(num, den)`.
pub fn rat(num: i128, den: i128) -> Rat {
    Rat::new(num, den)
}
