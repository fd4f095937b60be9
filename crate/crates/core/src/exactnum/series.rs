//! Rigorous fixed-point evaluation of the series the sums depend on.
//!
//! All infinite tails are handled by Euler–Maclaurin summation with the
//! remainder bounded through the periodic Bernoulli function:
//! after the terms `s = 1..m−1`,
//! `|R_m| ≤ 2·|B_2m|/(2m)! · ∫|f^(2m)|`.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::bounded::{add_up, fixed_abs_upper, mul_up, rational_abs_upper, up, MAX_PRECISION};
use super::{floor, BoundedReal, Endpoint, Rational, DEFAULT_PRECISION};
use crate::{Error, Result};

/// `B_2, B_4, …, B_58`.
const BERNOULLI: [(i128, i128); 29] = [
    (1, 6),
    (-1, 30),
    (1, 42),
    (-1, 30),
    (5, 66),
    (-691, 2730),
    (7, 6),
    (-3617, 510),
    (43867, 798),
    (-174611, 330),
    (854513, 138),
    (-236364091, 2730),
    (8553103, 6),
    (-23749461029, 870),
    (8615841276005, 14322),
    (-7709321041217, 510),
    (2577687858367, 6),
    (-26315271553053477373, 1919190),
    (2929993913841559, 6),
    (-261082718496449122051, 13530),
    (1520097643918070802691, 1806),
    (-27833269579301024235023, 690),
    (596451111593912163277961, 282),
    (-5609403368997817686249127547, 46410),
    (495057205241079648212477525, 66),
    (-801165718135489957347924991853, 1590),
    (29149963634884862421418123812691, 798),
    (-2479392929313226753685415739663229, 870),
    (84483613348880041862046775994036021, 354),
];

const MAX_EM_TERMS: usize = BERNOULLI.len();

/// `B_{2s}` for `1 ≤ s ≤ 29`.
pub(crate) fn bernoulli(s: usize) -> Rational {
    let (n, d) = BERNOULLI[s - 1];
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Fractional bits needed so that `2^-bits` is well below `eps / scale`.
pub(crate) fn bits_for(eps: f64, scale: f64) -> u32 {
    let need = libm::ceil(libm::log2(scale.max(1.0) / eps));
    let need = if need.is_finite() { need.max(0.0) as u32 } else { MAX_PRECISION };
    (need + 24).clamp(DEFAULT_PRECISION, MAX_PRECISION)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidEps)
    }
}

pub(crate) fn ulps(n: f64, bits: u32) -> f64 {
    mul_up(n, libm::ldexp(1.0, -(bits as i32)))
}

/// `⌊2^bits · p/q⌋` for `q > 0`.
fn fixed_div(p: &BigInt, q: &BigInt, bits: u32) -> BigInt {
    (p << bits as usize).div_floor(q)
}

/// `⌊m · r⌋` for a fixed-point mantissa and exact rational `r`.
fn fixed_mul_rational(m: &BigInt, r: &Rational) -> BigInt {
    (m * r.numer()).div_floor(r.denom())
}

/// `atanh(p/q)` for `0 < p/q ≤ 1/3`, as a mantissa at `bits` plus an error in
/// units of `2^-bits`.
fn atanh_fixed(p: &BigInt, q: &BigInt, bits: u32) -> (BigInt, f64) {
    let shift = bits as usize;
    let v = fixed_div(p, q, bits);
    let v2 = (&v * &v) >> shift;
    let mut power = v;
    let mut e_power = 1.0f64;
    let mut sum = BigInt::zero();
    let mut e_sum = 0.0f64;
    let mut i = 0u32;
    loop {
        let odd = BigInt::from(2 * i + 1);
        sum += power.div_floor(&odd);
        e_sum = add_up(e_sum, up(e_power / f64::from(2 * i + 1)) + 1.0);
        power = (&power * &v2) >> shift;
        e_power += 4.0;
        i += 1;
        if power <= BigInt::one() {
            // Remaining terms sum to at most 2·v^(2i+1) since v² ≤ 1/4.
            let p_up = power.to_f64().unwrap_or(0.0) + e_power;
            e_sum = add_up(e_sum, up(2.0 * p_up));
            break;
        }
    }
    (sum, e_sum)
}

#[derive(Clone, Debug)]
struct Shifted {
    weight: Rational,
    weight_abs: f64,
    num: BigInt,
    den: BigInt,
}

/// `Σ_{n ≥ N} Σ_i w_i / (n + α_i)` for weights summing to zero and positive
/// shifts `α_i`.
///
/// Both `F(t)` (weights `±1/c`, shifts `a, b`) and the grouped Dirichlet
/// series of a mean-zero periodic function are of this form.
#[derive(Clone, Debug)]
pub(crate) struct HarmonicTail {
    terms: Vec<Shifted>,
    weight_abs_sum: f64,
    /// Smallest `L` used for the integral split; at least every shift, so
    /// that the `atanh` arguments stay below 1/3.
    min_base: BigInt,
    /// `B_{2s} / (2s)` for `s = 1..`.
    em_coef: Vec<Rational>,
    em_coef_abs: Vec<f64>,
}

impl HarmonicTail {
    pub(crate) fn new(terms: impl IntoIterator<Item = (Rational, Rational)>) -> Self {
        let terms: Vec<Shifted> = terms
            .into_iter()
            .filter(|(w, _)| !w.is_zero())
            .map(|(weight, shift)| {
                assert!(shift.is_positive(), "shifts must be positive");
                Shifted {
                    weight_abs: rational_abs_upper(&weight),
                    weight,
                    num: shift.numer().clone(),
                    den: shift.denom().clone(),
                }
            })
            .collect();
        debug_assert!(terms.iter().map(|t| t.weight.clone()).sum::<Rational>().is_zero());
        let em_coef: Vec<Rational> = (1..=MAX_EM_TERMS)
            .map(|s| bernoulli(s) / Rational::from_integer(BigInt::from(2 * s)))
            .collect();
        let em_coef_abs = em_coef.iter().map(rational_abs_upper).collect();
        let weight_abs_sum = terms.iter().fold(0.0, |acc, t| add_up(acc, t.weight_abs));
        let max_shift = terms
            .iter()
            .map(|t| t.num.div_ceil(&t.den))
            .max()
            .unwrap_or_else(BigInt::zero);
        let min_base = max_shift + 64u32;
        HarmonicTail { terms, weight_abs_sum, min_base, em_coef, em_coef_abs }
    }

    /// The tail for the weights `(1/c, −1/c)` and shifts `(a, b)`:
    /// `Σ_{n≥N} 1/((n+a)(n+b))`.
    pub(crate) fn for_pair(a: &Rational, b: &Rational) -> Self {
        let inv_c = (b - a).recip();
        HarmonicTail::new([(inv_c.clone(), a.clone()), (-inv_c, b.clone())])
    }

    pub(crate) fn term_at(&self, n: &BigInt) -> Rational {
        let n = Rational::from_integer(n.clone());
        self.terms
            .iter()
            .map(|t| &t.weight / (&n + Rational::new(t.num.clone(), t.den.clone())))
            .sum()
    }

    /// Enclosure of the tail starting at index `first ≥ 0`, computed with
    /// `bits` fractional bits. The radius is at most `target` unless `bits`
    /// is too small; callers that need a guarantee use [`Self::sum_from_within`].
    pub(crate) fn sum_from(&self, first: &BigInt, bits: u32, target: f64) -> BoundedReal {
        let mut base = self.min_base.clone();
        loop {
            if let Some(r) = self.attempt(first, &base, bits, target / 4.0) {
                return r;
            }
            base <<= 1usize;
        }
    }

    /// Retries with more bits until the radius is at most `target`.
    pub(crate) fn sum_from_within(&self, first: &BigInt, target: f64) -> BoundedReal {
        let mut bits = bits_for(target, 1.0 + self.weight_abs_sum) + 16;
        loop {
            let r = self.sum_from(first, bits, target);
            if r.err() <= target || bits >= MAX_PRECISION {
                return r;
            }
            bits = (bits + 32).min(MAX_PRECISION);
        }
    }

    fn attempt(
        &self,
        first: &BigInt,
        base: &BigInt,
        bits: u32,
        remainder_target: f64,
    ) -> Option<BoundedReal> {
        if self.terms.is_empty() {
            return Some(BoundedReal::zero());
        }
        let shift = bits as usize;
        let big_l = if first > base { first.clone() } else { base.clone() };

        // Explicit terms n = first .. L−1.
        let mut mant = BigInt::zero();
        let mut e_ulps = 0.0f64;
        let mut n = first.clone();
        while n < big_l {
            let t = self.term_at(&n);
            mant += fixed_div(t.numer(), t.denom(), bits);
            e_ulps += 1.0;
            n += 1u32;
        }
        let mut err = ulps(e_ulps, bits);

        // ∫_L^∞ Σ w_i/(u+α_i) du = −Σ w_i ln(1 + α_i/L) = −2 Σ w_i atanh(α_i/(2L+α_i)).
        for t in &self.terms {
            let q = ((&big_l * &t.den) << 1usize) + &t.num;
            let (at, e_at) = atanh_fixed(&t.num, &q, bits);
            let coef = -(&t.weight) * Rational::from_integer(BigInt::from(2u8));
            mant += fixed_mul_rational(&at, &coef);
            err = add_up(err, ulps(up(mul_up(e_at, 2.0 * t.weight_abs) + 1.0), bits));
        }

        // h(L)/2, exact rational.
        let half = self.term_at(&big_l) / Rational::from_integer(BigInt::from(2u8));
        mant += fixed_div(half.numer(), half.denom(), bits);
        err = add_up(err, ulps(1.0, bits));

        // Correction terms B_2s/(2s) · Σ w_i (L+α_i)^(-2s) with the remainder
        // bounded by 2·|B_2m|/(2m) · Σ |w_i| (L+α_i)^(-2m).
        let mut inv_sq: Vec<BigInt> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let u = fixed_div(&t.den, &(&big_l * &t.den + &t.num), bits);
            inv_sq.push((&u * &u) >> shift);
        }
        let mut powers = inv_sq.clone();
        let mut e_pow = 3.0f64;
        let mut s = 1usize;
        loop {
            let mut magnitude = 0.0f64;
            for (t, p) in self.terms.iter().zip(&powers) {
                let p_up = add_up(fixed_abs_upper(p, bits), ulps(e_pow, bits));
                magnitude = add_up(magnitude, mul_up(t.weight_abs, p_up));
            }
            let bound = mul_up(2.0 * self.em_coef_abs[s - 1], magnitude);
            if bound <= remainder_target {
                err = add_up(err, bound);
                break;
            }
            if s == MAX_EM_TERMS {
                return None;
            }
            let mut acc = BigInt::zero();
            for (t, p) in self.terms.iter().zip(&powers) {
                acc += fixed_mul_rational(p, &t.weight);
            }
            mant += fixed_mul_rational(&acc, &self.em_coef[s - 1]);
            let acc_err = up(mul_up(self.weight_abs_sum, e_pow) + self.terms.len() as f64);
            err = add_up(err, ulps(up(mul_up(acc_err, self.em_coef_abs[s - 1]) + 1.0), bits));
            for (p, q) in powers.iter_mut().zip(&inv_sq) {
                *p = (&*p * q) >> shift;
            }
            e_pow += 4.0;
            s += 1;
        }
        Some(BoundedReal::from_parts(mant, bits, err))
    }
}

/// Enclosure of `F(t) = Σ_{n>t} 1/((n+a)(n+b))` with radius at most `eps`.
///
/// `F(+∞) = 0` exactly and `F(t) = F(0⁻) = Σ_{n≥0}` for `t < 0`.
pub fn tail_sum(t: &Endpoint, a: &Rational, b: &Rational, eps: f64) -> Result<BoundedReal> {
    check_eps(eps)?;
    if !a.is_positive() || a >= b {
        return Err(Error::InvalidParams("requires 0 < a < b"));
    }
    let Endpoint::Finite(t) = t else {
        return Ok(BoundedReal::zero());
    };
    let first = first_index_after(t);
    Ok(HarmonicTail::for_pair(a, b).sum_from_within(&first, eps))
}

/// Smallest integer `n ≥ 0` with `n > t`.
pub(crate) fn first_index_after(t: &Rational) -> BigInt {
    if t.is_negative() {
        BigInt::zero()
    } else {
        floor(t) + 1u32
    }
}

/// `π` by Machin's formula with the truncation error of both alternating
/// series included in the radius.
pub(crate) fn pi_fixed(bits: u32) -> BoundedReal {
    fn atan_inv(m: u32, bits: u32) -> (BigInt, f64) {
        let m2 = BigInt::from(m * m);
        let mut p = (BigInt::one() << bits as usize) / BigInt::from(m);
        let mut sum = BigInt::zero();
        let mut e = 0.0;
        let mut i = 0u32;
        while !p.is_zero() {
            let term = &p / BigInt::from(2 * i + 1);
            if i.is_multiple_of(2) {
                sum += term;
            } else {
                sum -= term;
            }
            e += 2.0;
            p = &p / &m2;
            i += 1;
        }
        (sum, e + 1.0)
    }
    let (a5, e5) = atan_inv(5, bits);
    let (a239, e239) = atan_inv(239, bits);
    let mant = a5 * 16u32 - a239 * 4u32;
    let err = ulps(up(16.0 * e5 + 4.0 * e239), bits);
    BoundedReal::from_parts(mant, bits, err)
}

/// Enclosure of `π` with radius at most `eps`.
pub fn pi(eps: f64) -> Result<BoundedReal> {
    check_eps(eps)?;
    Ok(pi_fixed(bits_for(eps, 64.0)))
}

/// `⌊√r · 2^bits⌋` with radius one unit in the last place.
pub(crate) fn sqrt_fixed(r: &Rational, bits: u32) -> BoundedReal {
    assert!(!r.is_negative(), "square root of a negative rational");
    let scaled = (r.numer() << (2 * bits) as usize) / r.denom();
    let root = scaled.sqrt();
    let exact = &root * &root * r.denom() == (r.numer() << (2 * bits) as usize);
    let err = if exact { 0.0 } else { super::bounded::ulp(bits) };
    BoundedReal::from_parts(root, bits, err)
}

/// Enclosure of `√r` with radius at most `eps`.
pub fn sqrt_rational(r: &Rational, eps: f64) -> Result<BoundedReal> {
    check_eps(eps)?;
    if r.is_negative() {
        return Err(Error::Precondition("square root of a negative number".into()));
    }
    Ok(sqrt_fixed(r, bits_for(eps, 1.0)))
}

/// `ζ(3/2)` at `bits` fractional bits: explicit sum to `L−1`, then
/// Euler–Maclaurin on `u^(-3/2)`, which is completely monotone.
pub(crate) fn zeta_three_halves_fixed(bits: u32, target: f64) -> BoundedReal {
    let mut big_l = 64u64;
    'grow: loop {
        let shift = bits as usize;
        let one_sq = BigInt::one() << (2 * shift);
        let mut mant = BigInt::zero();
        let mut e_ulps = 0.0;
        for n in 1..big_l {
            let n3 = BigInt::from(n).pow(3);
            mant += (&one_sq / n3).sqrt();
            e_ulps += 1.0;
        }
        let l = BigInt::from(big_l);
        // ∫_L^∞ u^(-3/2) = 2/√L
        mant += ((&one_sq << 2usize) / &l).sqrt();
        // f(L)/2
        mant += (&one_sq / l.pow(3)).sqrt() >> 1usize;
        // L^(-1/2) for the correction terms
        let inv_sqrt = (&one_sq / &l).sqrt();
        e_ulps += 3.0;

        // c_s = B_2s/(2s)! · Π_{i=1}^{2s−1} (2i+1)/2, term_s = c_s · L^(-2s) · L^(-1/2).
        let mut rising = Rational::one();
        let mut fact = BigInt::one();
        let mut l_pow = Rational::one();
        let l_sq = Rational::from_integer(&l * &l);
        let inv_sqrt_up = fixed_abs_upper(&inv_sqrt, bits) + super::bounded::ulp(bits);
        let mut err = 0.0;
        for s in 1..=MAX_EM_TERMS {
            let two_s = 2 * s as u64;
            // extend (2s−2)! → (2s)! and the rising product to 2s−1 factors
            fact *= BigInt::from(two_s - 1) * BigInt::from(two_s);
            let start = if s == 1 { 1 } else { two_s - 2 };
            for i in start..two_s {
                rising *= Rational::new(BigInt::from(2 * i + 1), BigInt::from(2u8));
            }
            l_pow /= &l_sq;
            let coef = bernoulli(s) * &rising / Rational::from_integer(fact.clone()) * &l_pow;
            let coef_abs = rational_abs_upper(&coef);
            let bound = mul_up(2.0 * coef_abs, inv_sqrt_up);
            if bound <= target / 4.0 {
                err = add_up(err, bound);
                let total = add_up(err, ulps(up(e_ulps), bits));
                return BoundedReal::from_parts(mant, bits, total);
            }
            mant += fixed_mul_rational(&inv_sqrt, &coef);
            e_ulps += coef_abs + 1.0;
        }
        big_l *= 2;
        continue 'grow;
    }
}

/// Enclosure of `ζ(3/2)` with radius at most `eps`.
pub fn zeta_three_halves(eps: f64) -> Result<BoundedReal> {
    check_eps(eps)?;
    let mut bits = bits_for(eps, 64.0);
    loop {
        let z = zeta_three_halves_fixed(bits, eps);
        if z.err() <= eps || bits >= MAX_PRECISION {
            return Ok(z);
        }
        bits += 32;
    }
}
