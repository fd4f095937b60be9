use alloc::string::String;
use core::fmt;
use core::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{from_f64, Rational};

/// Working precision (fractional bits) used when a caller does not need more.
pub const DEFAULT_PRECISION: u32 = 128;

/// Largest supported precision; keeps `2^-prec` representable as an `f64`.
pub(crate) const MAX_PRECISION: u32 = 1000;

/// A real number known to lie in `[value − err, value + err]`.
///
/// The value is a dyadic fixed-point number `mant · 2^-prec`; the radius is an
/// `f64` that is only ever rounded upwards. Every operation adds its own
/// rounding error to the radius, so the enclosure is rigorous.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedReal {
    mant: BigInt,
    prec: u32,
    err: f64,
}

pub(crate) fn ulp(prec: u32) -> f64 {
    libm::ldexp(1.0, -(prec as i32))
}

/// Rounds a non-negative radius computation upwards.
pub(crate) fn up(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.next_up().next_up()
    }
}

pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    up(a + b)
}

pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    up(a * b)
}

/// Upper bound on `|m| · 2^-prec`.
pub(crate) fn fixed_abs_upper(m: &BigInt, prec: u32) -> f64 {
    let v = m.abs().to_f64().unwrap_or(f64::INFINITY);
    up(libm::ldexp(v, -(prec as i32)))
}

/// Lower bound on `|m| · 2^-prec`.
fn fixed_abs_lower(m: &BigInt, prec: u32) -> f64 {
    let v = m.abs().to_f64().unwrap_or(f64::INFINITY);
    libm::ldexp(v, -(prec as i32)).next_down().next_down().max(0.0)
}

/// Upper bound on `|r|`.
pub(crate) fn rational_abs_upper(r: &Rational) -> f64 {
    up(super::to_f64(r).abs()).next_up()
}

impl BoundedReal {
    pub(crate) fn from_parts(mant: BigInt, prec: u32, err: f64) -> Self {
        debug_assert!(err >= 0.0);
        BoundedReal { mant, prec, err }
    }

    /// Exact zero.
    pub fn zero() -> Self {
        BoundedReal { mant: BigInt::zero(), prec: 0, err: 0.0 }
    }

    /// Rounds `r` to `prec` fractional bits (floor); the radius is one unit in
    /// the last place when the rounding is inexact.
    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        let (mant, rem) = (r.numer() << prec as usize).div_mod_floor(r.denom());
        let err = if rem.is_zero() { 0.0 } else { ulp(prec) };
        BoundedReal { mant, prec, err }
    }

    pub fn from_integer(n: &BigInt) -> Self {
        BoundedReal { mant: n.clone(), prec: 0, err: 0.0 }
    }

    pub fn err(&self) -> f64 {
        self.err
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.err == 0.0
    }

    /// The centre of the enclosure, exactly.
    pub fn midpoint(&self) -> Rational {
        Rational::new(self.mant.clone(), BigInt::one() << self.prec as usize)
    }

    pub fn lower(&self) -> Rational {
        self.midpoint() - from_f64(self.err).expect("finite radius")
    }

    pub fn upper(&self) -> Rational {
        self.midpoint() + from_f64(self.err).expect("finite radius")
    }

    pub fn value_f64(&self) -> f64 {
        let v = self.mant.to_f64().unwrap_or(f64::NAN);
        libm::ldexp(v, -(self.prec as i32))
    }

    /// Upper bound on `|value|` (centre only).
    pub fn abs_upper(&self) -> f64 {
        fixed_abs_upper(&self.mant, self.prec)
    }

    /// Widens the radius by `extra`.
    pub fn inflate(mut self, extra: f64) -> Self {
        self.err = add_up(self.err, extra);
        self
    }

    fn mant_at(&self, prec: u32) -> BigInt {
        debug_assert!(prec >= self.prec);
        &self.mant << (prec - self.prec) as usize
    }

    /// Re-expresses the value with `prec` fractional bits.
    pub fn with_precision(&self, prec: u32) -> Self {
        if prec >= self.prec {
            BoundedReal { mant: self.mant_at(prec), prec, err: self.err }
        } else {
            let shift = (self.prec - prec) as usize;
            let mant = &self.mant >> shift;
            let exact = (&mant << shift) == self.mant;
            let err = if exact { self.err } else { add_up(self.err, ulp(prec)) };
            BoundedReal { mant, prec, err }
        }
    }

    /// `|exact − r| ≤ err` holds for `r`: the enclosure contains `r`.
    pub fn contains(&self, r: &Rational) -> bool {
        let diff = (r - self.midpoint()).abs();
        diff <= from_f64(self.err).expect("finite radius")
    }

    /// The two enclosures intersect.
    pub fn overlaps(&self, other: &BoundedReal) -> bool {
        let diff = (self.midpoint() - other.midpoint()).abs();
        diff <= from_f64(add_up(self.err, other.err)).expect("finite radius")
    }

    /// The whole enclosure lies in `[lo, hi]`.
    pub fn within(&self, lo: &Rational, hi: &Rational) -> bool {
        &self.lower() >= lo && &self.upper() <= hi
    }

    pub fn mul_rational(&self, r: &Rational) -> Self {
        let (mant, rem) = (&self.mant * r.numer()).div_mod_floor(r.denom());
        let mut err = mul_up(self.err, rational_abs_upper(r));
        if !rem.is_zero() {
            err = add_up(err, ulp(self.prec));
        }
        BoundedReal { mant, prec: self.prec, err }
    }

    pub fn mul(&self, other: &BoundedReal) -> Self {
        let prec = self.prec.max(other.prec);
        let product = self.mant_at(prec) * other.mant_at(prec);
        let mant = &product >> prec as usize;
        let exact = (&mant << prec as usize) == product;
        let (va, vb) = (self.abs_upper(), other.abs_upper());
        let mut err = add_up(
            add_up(mul_up(va, other.err), mul_up(vb, self.err)),
            mul_up(self.err, other.err),
        );
        if !exact {
            err = add_up(err, ulp(prec));
        }
        BoundedReal { mant, prec, err }
    }

    /// Quotient enclosure; `None` when the divisor enclosure contains zero.
    pub fn div(&self, other: &BoundedReal) -> Option<Self> {
        let prec = self.prec.max(other.prec);
        let den_low = fixed_abs_lower(&other.mant, other.prec) - other.err;
        if den_low.is_nan() || den_low <= 0.0 {
            return None;
        }
        let num = self.mant_at(prec) << prec as usize;
        let den = other.mant_at(prec);
        let (mant, rem) = num.div_mod_floor(&den);
        let q = fixed_abs_upper(&mant, prec);
        let mut err = up(add_up(self.err, mul_up(q, other.err)) / den_low);
        if !rem.is_zero() {
            err = add_up(err, ulp(prec));
        }
        Some(BoundedReal { mant, prec, err })
    }

    /// Decimal rendering of the centre rounded to `digits` places.
    pub fn to_decimal(&self, digits: usize) -> String {
        let scaled = &self.mant * num_traits::pow(BigInt::from(10u8), digits);
        // round half up: ⌊(2·s + 2^p) / 2^(p+1)⌋
        let rounded = ((scaled << 1usize) + (BigInt::one() << self.prec as usize))
            >> (self.prec as usize + 1);
        let negative = rounded.is_negative();
        let s = rounded.abs().to_str_radix(10);
        let mut out = String::new();
        if negative {
            out.push('-');
        }
        if digits == 0 {
            out.push_str(&s);
            return out;
        }
        if s.len() <= digits {
            out.push_str("0.");
            for _ in 0..digits - s.len() {
                out.push('0');
            }
            out.push_str(&s);
        } else {
            let (w, f) = s.split_at(s.len() - digits);
            out.push_str(w);
            out.push('.');
            out.push_str(f);
        }
        out
    }
}

impl Add for &BoundedReal {
    type Output = BoundedReal;

    fn add(self, other: &BoundedReal) -> BoundedReal {
        let prec = self.prec.max(other.prec);
        BoundedReal {
            mant: self.mant_at(prec) + other.mant_at(prec),
            prec,
            err: add_up(self.err, other.err),
        }
    }
}

impl Sub for &BoundedReal {
    type Output = BoundedReal;

    fn sub(self, other: &BoundedReal) -> BoundedReal {
        let prec = self.prec.max(other.prec);
        BoundedReal {
            mant: self.mant_at(prec) - other.mant_at(prec),
            prec,
            err: add_up(self.err, other.err),
        }
    }
}

impl Add for BoundedReal {
    type Output = BoundedReal;

    fn add(self, other: BoundedReal) -> BoundedReal {
        &self + &other
    }
}

impl Sub for BoundedReal {
    type Output = BoundedReal;

    fn sub(self, other: BoundedReal) -> BoundedReal {
        &self - &other
    }
}

impl Neg for BoundedReal {
    type Output = BoundedReal;

    fn neg(self) -> BoundedReal {
        BoundedReal { mant: -self.mant, prec: self.prec, err: self.err }
    }
}

impl fmt::Display for BoundedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        write!(f, "{} ± {:e}", self.to_decimal(digits), self.err)
    }
}
