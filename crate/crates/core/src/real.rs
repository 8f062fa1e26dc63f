//! Binary floating point with a per-value mantissa precision.
//!
//! A [`Real`] is `mant * 2^exp` with `|mant| < 2^prec`. Arithmetic rounds to
//! nearest at the larger of the two operand precisions. There is no
//! directed rounding; the certified bounds elsewhere in the crate cover
//! series truncation, and the per-operation rounding (relative `2^-prec`)
//! sits far below every tolerance those bounds are compared with.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary precision used for real-valued evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Precision(u32);

impl Precision {
    pub const MIN_BITS: u32 = 64;
    pub const DEFAULT_BITS: u32 = 256;

    pub fn new(bits: u32) -> Result<Self> {
        if bits < Self::MIN_BITS {
            return Err(Error::domain(format!(
                "precision must be at least {} bits, got {bits}",
                Self::MIN_BITS
            )));
        }
        Ok(Precision(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// `2^-bits` as a real, the usual target for truncation errors.
    pub fn epsilon(self) -> Real {
        Real::pow2(-(self.0 as i64), self)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision(Self::DEFAULT_BITS)
    }
}

#[derive(Clone)]
pub struct Real {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

impl Real {
    fn from_parts(mant: BigInt, exp: i64, prec: u32) -> Self {
        let mut r = Real { mant, exp, prec };
        r.normalize();
        r
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        let bits = self.mant.bits();
        if bits > self.prec as u64 {
            let shift = bits - self.prec as u64;
            let neg = self.mant.is_negative();
            let mag = self.mant.magnitude().clone();
            let half = num_bigint::BigUint::one() << (shift - 1);
            let rounded = (mag + half) >> shift;
            self.mant = BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, rounded);
            self.exp += shift as i64;
            // rounding may carry into one extra bit
            if self.mant.bits() > self.prec as u64 {
                self.mant >>= 1;
                self.exp += 1;
            }
        }
        // strip trailing zero bits so equal values share a representation
        if let Some(tz) = self.mant.trailing_zeros() {
            if tz > 0 {
                self.mant >>= tz;
                self.exp += tz as i64;
            }
        }
    }

    pub fn zero(prec: Precision) -> Self {
        Real {
            mant: BigInt::zero(),
            exp: 0,
            prec: prec.0,
        }
    }

    pub fn one(prec: Precision) -> Self {
        Real::from_i64(1, prec)
    }

    pub fn from_i64(v: i64, prec: Precision) -> Self {
        Real::from_parts(BigInt::from(v), 0, prec.0)
    }

    pub fn from_bigint(v: &BigInt, prec: Precision) -> Self {
        Real::from_parts(v.clone(), 0, prec.0)
    }

    /// `2^e`.
    pub fn pow2(e: i64, prec: Precision) -> Self {
        Real {
            mant: BigInt::one(),
            exp: e,
            prec: prec.0,
        }
    }

    pub fn from_ratio(r: &BigRational, prec: Precision) -> Self {
        let num = Real::from_bigint(r.numer(), prec);
        let den = Real::from_bigint(r.denom(), prec);
        &num / &den
    }

    /// Exact conversion of a finite `f64`, rounded to `prec`.
    pub fn from_f64(v: f64, prec: Precision) -> Self {
        assert!(v.is_finite(), "non-finite f64 {v}");
        if v == 0.0 {
            return Real::zero(prec);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if raw_exp == 0 {
            (frac as i64, -1074)
        } else {
            ((frac | (1u64 << 52)) as i64, raw_exp - 1075)
        };
        Real::from_parts(BigInt::from(sign * mant), exp, prec.0)
    }

    pub fn precision(&self) -> Precision {
        Precision(self.prec)
    }

    /// Same value carried at a different precision.
    pub fn with_precision(&self, prec: Precision) -> Self {
        Real::from_parts(self.mant.clone(), self.exp, prec.0)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        Real {
            mant: self.mant.abs(),
            exp: self.exp,
            prec: self.prec,
        }
    }

    /// `floor(log2 |x|)`, or `None` for zero.
    pub fn ilog2(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.mant.bits() as i64 - 1 + self.exp)
        }
    }

    pub fn mul_pow2(&self, e: i64) -> Self {
        Real {
            mant: self.mant.clone(),
            exp: self.exp + e,
            prec: self.prec,
        }
    }

    pub fn powi(&self, n: i64) -> Self {
        if n < 0 {
            return &Real::one(self.precision()) / &self.powi(-n);
        }
        let mut base = self.clone();
        let mut acc = Real::one(self.precision());
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Principal `n`-th root of a non-negative value.
    pub fn nth_root(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("zeroth root"));
        }
        if self.is_negative() {
            return Err(Error::domain("root of a negative number"));
        }
        if self.is_zero() || n == 1 {
            return Ok(self.clone());
        }
        let target_bits = (self.prec as i64 + 8) * n as i64;
        let mut shift = (target_bits - self.mant.bits() as i64).max(0);
        // exponent after shifting must be divisible by n
        shift += (self.exp - shift).rem_euclid(n as i64);
        let m = &self.mant << shift as usize;
        let root = m.nth_root(n);
        Ok(Real::from_parts(
            root,
            (self.exp - shift) / n as i64,
            self.prec,
        ))
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.nth_root(2)
    }

    /// `q^e` for rational `q > 0` and rational exponent `e`.
    pub fn pow_ratio(base: &BigRational, e: &BigRational, prec: Precision) -> Result<Self> {
        if !base.is_positive() {
            return Err(Error::domain("pow_ratio needs a positive base"));
        }
        let den = e
            .denom()
            .to_u32()
            .ok_or_else(|| Error::domain("exponent denominator too large"))?;
        let num = e
            .numer()
            .to_i64()
            .ok_or_else(|| Error::domain("exponent numerator too large"))?;
        let work = Precision(prec.0 + 32);
        let powered = Real::from_ratio(base, work).powi(num);
        Ok(powered.nth_root(den)?.with_precision(prec))
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits() as i64;
        let (top, e) = if bits > 64 {
            (&self.mant >> (bits - 64) as usize, self.exp + bits - 64)
        } else {
            (self.mant.clone(), self.exp)
        };
        ldexp(top.to_f64().unwrap_or(f64::NAN), e)
    }

    /// Natural log of `|x|` as an `f64`; finite even when `to_f64` underflows.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.mant.bits() as i64;
        let shift = bits - 60;
        let top = if shift > 0 {
            &self.mant >> shift as usize
        } else {
            self.mant.clone()
        };
        let top = top.abs().to_f64().unwrap();
        top.ln() + ((self.exp + shift.max(0)) as f64) * std::f64::consts::LN_2
    }

    /// Scientific notation with `digits` significant decimal digits.
    pub fn to_sci_string(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let digits = digits.max(1);
        let work = Precision(self.prec.max((digits as f64 * 3.33) as u32 + 16));
        let x = self.abs().with_precision(work);
        let mut e10 = (x.ln_abs() / std::f64::consts::LN_10).floor() as i64;
        let ten = Real::from_i64(10, work);
        let mut scaled;
        loop {
            // scaled = x * 10^(digits-1-e10), want it in [10^(digits-1), 10^digits)
            let k = digits as i64 - 1 - e10;
            scaled = &x * &ten.powi(k);
            let lo = ten.powi(digits as i64 - 1);
            let hi = ten.powi(digits as i64);
            if scaled < lo {
                e10 -= 1;
            } else if scaled >= hi {
                e10 += 1;
            } else {
                break;
            }
        }
        let mut int = scaled.round_to_bigint();
        if int == BigInt::from(10u32).pow(digits as u32) {
            int /= 10;
            e10 += 1;
        }
        let s = int.to_string();
        let (head, tail) = s.split_at(1);
        let sign = if self.is_negative() { "-" } else { "" };
        if tail.is_empty() {
            format!("{sign}{head}e{e10}")
        } else {
            format!("{sign}{head}.{tail}e{e10}")
        }
    }

    pub fn round_to_bigint(&self) -> BigInt {
        if self.exp >= 0 {
            return &self.mant << self.exp as usize;
        }
        let shift = (-self.exp) as usize;
        let half = BigInt::one() << (shift - 1);
        let neg = self.mant.is_negative();
        let mag = (self.mant.abs() + half) >> shift;
        if neg {
            -mag
        } else {
            mag
        }
    }

    /// Exact rational value of this float.
    pub fn to_ratio(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << self.exp as usize)
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }
}

fn ldexp(x: f64, e: i64) -> f64 {
    let mut x = x;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

fn add_impl(a: &Real, b: &Real, negate_b: bool) -> Real {
    let prec = a.prec.max(b.prec);
    if b.is_zero() {
        return a.with_precision(Precision(prec));
    }
    let bm = if negate_b {
        -b.mant.clone()
    } else {
        b.mant.clone()
    };
    if a.is_zero() {
        return Real::from_parts(bm, b.exp, prec);
    }
    let top_a = a.mant.bits() as i64 + a.exp;
    let top_b = b.mant.bits() as i64 + b.exp;
    // an operand entirely below the rounding unit of the other is dropped,
    // except for its sticky effect, which a two-bit guard captures
    let guard = prec as i64 + 4;
    if top_a - top_b > guard {
        let e = top_a - guard;
        let sticky = if bm.is_negative() {
            -BigInt::one()
        } else {
            BigInt::one()
        };
        let am = if a.exp > e {
            &a.mant << (a.exp - e) as usize
        } else {
            a.mant.clone()
        };
        let ae = a.exp.min(e);
        let mut m = am << 2usize;
        m += sticky;
        return Real::from_parts(m, ae - 2, prec);
    }
    if top_b - top_a > guard {
        let e = top_b - guard;
        let sticky = if a.mant.is_negative() {
            -BigInt::one()
        } else {
            BigInt::one()
        };
        let bmm = if b.exp > e {
            &bm << (b.exp - e) as usize
        } else {
            bm
        };
        let be = b.exp.min(e);
        let mut m = bmm << 2usize;
        m += sticky;
        return Real::from_parts(m, be - 2, prec);
    }
    let e = a.exp.min(b.exp);
    let am = &a.mant << (a.exp - e) as usize;
    let bmm = bm << (b.exp - e) as usize;
    Real::from_parts(am + bmm, e, prec)
}

fn mul_impl(a: &Real, b: &Real) -> Real {
    Real::from_parts(&a.mant * &b.mant, a.exp + b.exp, a.prec.max(b.prec))
}

fn div_impl(a: &Real, b: &Real) -> Real {
    assert!(!b.is_zero(), "division by zero");
    let prec = a.prec.max(b.prec);
    if a.is_zero() {
        return Real::zero(Precision(prec));
    }
    let shift = (prec as i64 + 4 + b.mant.bits() as i64 - a.mant.bits() as i64).max(0);
    let num = &a.mant << shift as usize;
    let (q, r) = num.div_rem(&b.mant);
    // sticky bit keeps round-to-nearest honest on exact halves
    let q = (q << 1usize)
        + if r.is_zero() {
            BigInt::zero()
        } else {
            BigInt::from(q_sign(&a.mant, &b.mant))
        };
    Real::from_parts(q, a.exp - shift - b.exp - 1, prec)
}

fn q_sign(a: &BigInt, b: &BigInt) -> i32 {
    if a.is_negative() == b.is_negative() {
        1
    } else {
        -1
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                $body(self, rhs)
            }
        }
        impl $tr<Real> for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                $body(&self, &rhs)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                $body(&self, rhs)
            }
        }
        impl $tr<Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                $body(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| add_impl(a, b, false));
binop!(Sub, sub, |a, b| add_impl(a, b, true));
binop!(Mul, mul, mul_impl);
binop!(Div, div, div_impl);

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real {
            mant: -self.mant,
            exp: self.exp,
            prec: self.prec,
        }
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real {
            mant: -self.mant.clone(),
            exp: self.exp,
            prec: self.prec,
        }
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_value(other))
    }
}

impl Real {
    fn cmp_value(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &other.mant << (other.exp - e) as usize;
        a.cmp(&b)
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({})", self.to_sci_string(24))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        f.write_str(&self.to_sci_string(digits))
    }
}

/// A value together with an upper bound on its absolute error.
#[derive(Debug, Clone)]
pub struct Approx {
    pub value: Real,
    pub err: Real,
}

impl Approx {
    pub fn exact(value: Real) -> Self {
        let err = Real::zero(value.precision());
        Approx { value, err }
    }

    pub fn contains(&self, x: &Real) -> bool {
        (&self.value - x).abs() <= self.err
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }
}
