//! Exact rational scalars, integer-constrained square roots and rigorous
//! enclosures of the few transcendental quantities the sums need.

mod bounded;
mod series;

use alloc::format;
use alloc::vec::Vec;
use core::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use bounded::{BoundedReal, DEFAULT_PRECISION};
pub use series::{pi, sqrt_rational, tail_sum, zeta_three_halves};
pub(crate) use series::{
    bits_for, pi_fixed, sqrt_fixed, ulps, zeta_three_halves_fixed, HarmonicTail,
};

use crate::{Error, Result};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

/// A rational number or `+∞`, used for interval endpoints and the argument of
/// the tail series (`x/0 = ∞`, `F(∞) = 0`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Finite(Rational),
    Infinity,
}

impl Endpoint {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Endpoint::Finite(r) => Some(r),
            Endpoint::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Endpoint::Infinity)
    }
}

impl From<Rational> for Endpoint {
    fn from(r: Rational) -> Self {
        Endpoint::Finite(r)
    }
}

impl PartialOrd for Endpoint {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        use core::cmp::Ordering::*;
        Some(match (self, other) {
            (Endpoint::Infinity, Endpoint::Infinity) => Equal,
            (Endpoint::Infinity, _) => Greater,
            (_, Endpoint::Infinity) => Less,
            (Endpoint::Finite(a), Endpoint::Finite(b)) => a.cmp(b),
        })
    }
}

impl core::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Endpoint::Finite(r) => write!(f, "{r}"),
            Endpoint::Infinity => f.write_str("inf"),
        }
    }
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn floor(t: &Rational) -> BigInt {
    t.numer().div_floor(t.denom())
}

pub fn ceil(t: &Rational) -> BigInt {
    -((-t.numer()).div_floor(t.denom()))
}

/// `{t} = t − ⌊t⌋ ∈ [0, 1)`, using the floor convention for negative `t`.
pub fn frac(t: &Rational) -> Rational {
    Rational::new(t.numer().mod_floor(t.denom()), t.denom().clone())
}

/// `⌊√t⌋` for `t ≥ 0`.
pub fn isqrt_floor(t: &Rational) -> BigInt {
    debug_assert!(!t.is_negative());
    floor(t).sqrt()
}

/// Largest integer `k ≥ 0` with `k(k + shift) ≤ t`, for `t ≥ 0`.
///
/// `k(k+s) ≤ t` is `(2k+s)² ≤ 4t + s²`; since `2k+s` is an integer this is
/// `2k + s ≤ ⌊√(4t+s²)⌋`, so no search is needed.
pub fn floor_sqrt_le(t: &Rational, shift: &BigInt) -> BigInt {
    assert!(!t.is_negative(), "floor_sqrt_le requires t >= 0");
    let disc = t * Rational::from_integer(BigInt::from(4u8))
        + Rational::from_integer(shift * shift);
    let r = isqrt_floor(&disc);
    let k = (r - shift).div_floor(&BigInt::from(2u8));
    debug_assert!(!k.is_negative());
    k
}

/// Exact sum by pairwise reduction, which keeps intermediate denominators near
/// the size of the final one.
pub fn sum_exact(mut terms: Vec<Rational>) -> Rational {
    if terms.is_empty() {
        return Rational::zero();
    }
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut it = terms.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        terms = next;
    }
    terms.pop().unwrap()
}

/// Parses `"p/q"`, integers, decimals (`"3.7"`) and scientific notation
/// (`"1e6"`, `"2.5e-3"`) into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("{s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (whole, fraction) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && fraction.is_empty() {
        return Err(bad());
    }
    if !whole.bytes().chain(fraction.bytes()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let mut all = alloc::string::String::with_capacity(whole.len() + fraction.len());
    all.push_str(whole);
    all.push_str(fraction);
    let num = BigInt::from_str(&all).map_err(|_| bad())?;
    let scale = exponent - fraction.len() as i32;
    let ten = BigInt::from(10u8);
    let mut r = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        r = -r;
    }
    Ok(r)
}

/// `f64` approximation of a rational (within a couple of ulps); used only
/// for reporting and float cutoffs, never for exact decisions.
pub fn to_f64(r: &Rational) -> f64 {
    let (n, d) = (r.numer(), r.denom());
    if n.is_zero() {
        return 0.0;
    }
    // Scale so the integer quotient carries about 64 significant bits.
    let shift = 64 - (n.bits() as i64 - d.bits() as i64);
    let q = if shift >= 0 {
        (n.abs() << shift as usize) / d
    } else {
        n.abs() / (d << (-shift) as usize)
    };
    let v = q.to_f64().unwrap_or(f64::INFINITY);
    let v = if shift > i32::MAX as i64 {
        0.0
    } else if shift < i32::MIN as i64 {
        f64::INFINITY
    } else {
        libm::ldexp(v, -(shift as i32))
    };
    if n.is_negative() {
        -v
    } else {
        v
    }
}

/// Exact rational value of a finite `f64`.
pub fn from_f64(v: f64) -> Option<Rational> {
    if !v.is_finite() {
        return None;
    }
    if v == 0.0 {
        return Some(Rational::zero());
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac_bits = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac_bits, -1074)
    } else {
        (frac_bits | (1u64 << 52), exp - 1075)
    };
    let m = BigInt::from(mant) * sign;
    Some(if e >= 0 {
        Rational::from_integer(m << e as usize)
    } else {
        Rational::new(m, BigInt::one() << (-e) as usize)
    })
}
