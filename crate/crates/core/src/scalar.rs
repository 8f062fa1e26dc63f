//! Arithmetic shared by exact rationals and [`Real`].
//!
//! Transition rows, chain iteration and eigenvector recurrences are written
//! once against [`Scalar`]. Rational parameters run exactly; irrational ones
//! (a non-integer exponent `m` in `q^-m`) run in `Real`.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::real::{Precision, Real};

pub trait Scalar:
    Clone
    + Debug
    + Send
    + Sync
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    fn from_ratio(r: &BigRational, prec: Precision) -> Self;
    fn to_real(&self, prec: Precision) -> Real;
    fn is_zero_value(&self) -> bool;
    /// `None` for exact scalars, which cannot hold an irrational value.
    fn from_real(r: &Real) -> Option<Self>;
    /// `"exact"` or `"real"`, recorded in serialized output.
    fn mode() -> &'static str;
    fn to_plain_string(&self) -> String;

    fn from_i64(v: i64, prec: Precision) -> Self {
        Self::from_ratio(&BigRational::from_integer(BigInt::from(v)), prec)
    }

    fn abs_value(&self) -> Self {
        let zero = Self::from_i64(0, Precision::default());
        if *self < zero {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Integer power, negative exponents allowed for nonzero bases.
    fn powi(&self, n: i64, prec: Precision) -> Self {
        let mut base = if n < 0 {
            Self::from_i64(1, prec) / self.clone()
        } else {
            self.clone()
        };
        let mut acc = Self::from_i64(1, prec);
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * &base;
            }
        }
        acc
    }
}

impl Scalar for BigRational {
    fn from_ratio(r: &BigRational, _prec: Precision) -> Self {
        r.clone()
    }
    fn to_real(&self, prec: Precision) -> Real {
        Real::from_ratio(self, prec)
    }
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }
    fn from_real(_r: &Real) -> Option<Self> {
        None
    }
    fn mode() -> &'static str {
        "exact"
    }
    fn to_plain_string(&self) -> String {
        self.to_string()
    }
    fn abs_value(&self) -> Self {
        self.abs()
    }
    fn powi(&self, n: i64, _prec: Precision) -> Self {
        if n >= 0 {
            num_traits::pow(self.clone(), n as usize)
        } else {
            num_traits::pow(BigRational::one() / self, n.unsigned_abs() as usize)
        }
    }
}

impl Scalar for Real {
    fn from_ratio(r: &BigRational, prec: Precision) -> Self {
        Real::from_ratio(r, prec)
    }
    fn to_real(&self, prec: Precision) -> Real {
        self.with_precision(prec)
    }
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }
    fn from_real(r: &Real) -> Option<Self> {
        Some(r.clone())
    }
    fn mode() -> &'static str {
        "real"
    }
    fn to_plain_string(&self) -> String {
        let digits = (self.precision().bits() as f64 * std::f64::consts::LOG10_2) as usize;
        self.to_sci_string(digits.max(17))
    }
    fn abs_value(&self) -> Self {
        self.abs()
    }
    fn powi(&self, n: i64, prec: Precision) -> Self {
        self.with_precision(prec.max(self.precision())).powi(n)
    }
}

/// Parse `"5/2"`, `"3"` or `"-1/2"` into a rational.
pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => {
            if let Ok(i) = s.parse::<BigInt>() {
                return Some(BigRational::from_integer(i));
            }
            // short decimals such as "2.5"
            let (int, frac) = s.split_once('.')?;
            if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let neg = int.starts_with('-');
            let int: BigInt = if int.is_empty() || int == "-" {
                BigInt::zero()
            } else {
                int.parse().ok()?
            };
            let den = BigInt::from(10u64.pow(frac.len() as u32));
            let f: BigInt = frac.parse().ok()?;
            let num = int.abs() * &den + f;
            Some(BigRational::new(if neg { -num } else { num }, den))
        }
    }
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}
