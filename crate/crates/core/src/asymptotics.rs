//! The main term `(2/π)·ζ(3/2)·√(cx)`, the coefficients `f(j)`, the
//! remainder sums `R_j`, residuals against the asymptotic formulas and
//! exponent fits.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::blocks::{k_j, k_of, w_block};
use crate::directsum::EvalContext;
use crate::exactnum::{
    bits_for, floor, pi_fixed, sqrt_fixed, sum_exact, to_f64, zeta_three_halves_fixed,
};
use crate::{BoundedReal, Error, Rational, Result};

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidEps)
    }
}

fn rat(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `(2/π)·ζ(3/2)` at `bits` fractional bits.
fn main_constant(bits: u32) -> BoundedReal {
    let z = zeta_three_halves_fixed(bits, libm::ldexp(1.0, -(bits as i32)));
    let p = pi_fixed(bits);
    z.div(&p).expect("pi is positive").mul_rational(&rat(2))
}

/// `(2/π)·ζ(3/2)·√(cx)` with radius at most `eps`.
pub fn main_term(ctx: &EvalContext, eps: f64) -> Result<BoundedReal> {
    check_eps(eps)?;
    let scale = libm::sqrt(to_f64(ctx.cx())).max(1.0);
    let mut bits = bits_for(eps, 16.0 * scale);
    loop {
        let v = main_constant(bits).mul(&sqrt_fixed(ctx.cx(), bits));
        if v.err() <= eps || bits >= 1000 {
            return Ok(v);
        }
        bits += 32;
    }
}

/// `(2/π)·ζ(3/2)` with radius at most `eps`.
pub fn main_constant_value(eps: f64) -> Result<BoundedReal> {
    check_eps(eps)?;
    let mut bits = bits_for(eps, 16.0);
    loop {
        let v = main_constant(bits);
        if v.err() <= eps || bits >= 1000 {
            return Ok(v);
        }
        bits += 32;
    }
}

fn f_fixed(j: u64, bits: u32) -> BoundedReal {
    let s = |n: u64| sqrt_fixed(&rat(n), bits);
    let up = s(j + 1).mul_rational(&Rational::new(BigInt::from(8 * j + 2), BigInt::from(3)));
    let down = s(j - 1).mul_rational(&Rational::new(BigInt::from(8 * j - 2), BigInt::from(3)));
    &(&up - &down) - &s(j).mul_rational(&rat(4))
}

/// `f(j) = (8j+2)/3·√(j+1) − (8j−2)/3·√(j−1) − 4√j` for `j ≥ 1`.
pub fn f_coeff(j: u64, eps: f64) -> Result<BoundedReal> {
    check_eps(eps)?;
    if j == 0 {
        return Err(Error::Precondition("f(j) requires j >= 1".into()));
    }
    let mut bits = bits_for(eps, 16.0 * j as f64);
    loop {
        let v = f_fixed(j, bits);
        if v.err() <= eps || bits >= 1000 {
            return Ok(v);
        }
        bits += 32;
    }
}

/// `2/3 + Σ_{1≤j≤J} f(j)`.
pub fn series_partial(big_j: u64, eps: f64) -> Result<BoundedReal> {
    check_eps(eps)?;
    if big_j == 0 {
        return Err(Error::Precondition("series_partial requires J >= 1".into()));
    }
    let mut bits = bits_for(eps, 16.0 * (big_j as f64) * (big_j as f64));
    loop {
        let mut total = BoundedReal::from_rational(&Rational::new(BigInt::from(2), BigInt::from(3)), bits);
        for j in 1..=big_j {
            total = &total + &f_fixed(j, bits);
        }
        if total.err() <= eps || bits >= 1000 {
            return Ok(total);
        }
        bits += 32;
    }
}

/// `Σ_{lo<k≤hi} k^p·m_k` and friends, where `m_k = ⌊x/k − a⌋ − ⌊x/k − b⌋`,
/// so that `{x/k − a} − {x/k − b} = c − m_k`.
struct Moments {
    count: BigInt,
    sq: BigInt,
    m: BigInt,
    sq_m: BigInt,
}

fn moments(ctx: &EvalContext, lo: &BigInt, hi: &BigInt) -> Moments {
    let mut out = Moments {
        count: BigInt::zero(),
        sq: BigInt::zero(),
        m: BigInt::zero(),
        sq_m: BigInt::zero(),
    };
    let mut k = lo + 1u32;
    while &k <= hi {
        let m = ctx.qa().last_with(&k) - ctx.qb().last_with(&k);
        let sq = &k * &k;
        out.count += 1u32;
        out.sq_m += &sq * &m;
        out.sq += sq;
        out.m += m;
        k += 1u32;
    }
    out
}

/// `R_0 = (c/x)·Σ_{1≤k≤K(x/c)} k²({x/k−a} − {x/k−b})` and, for `j ≥ 1`,
/// `R_j = Σ_{K_{j−1}(x/c)<k≤K_{j+1}(x/c)} (k²c/x − j)({x/k−a} − {x/k−b})`,
/// exactly.
pub fn remainder(ctx: &EvalContext, j: u64) -> Rational {
    let t = ctx.x() / ctx.c();
    let (lo, hi) = if j == 0 { (BigInt::zero(), k_of(&t)) } else { (k_j(j - 1, &t), k_j(j + 1, &t)) };
    if hi <= lo {
        return Rational::zero();
    }
    let mo = moments(ctx, &lo, &hi);
    let c = ctx.c();
    // Σ k² d_k and Σ d_k with d_k = c − m_k
    let sq_d = c * Rational::from_integer(mo.sq) - Rational::from_integer(mo.sq_m);
    let d = c * Rational::from_integer(mo.count) - Rational::from_integer(mo.m);
    c / ctx.x() * sq_d - rat(j) * d
}

/// `R(J) = Σ_{0≤j≤J} R_j`.
pub fn remainder_total(ctx: &EvalContext, j_max: u64) -> Rational {
    sum_exact((0..=j_max).map(|j| remainder(ctx, j)).collect())
}

/// The values `R_0, …, R_J` of one instance.
#[derive(Clone, Debug)]
pub struct RemainderTable {
    pub ctx: EvalContext,
    pub entries: BTreeMap<u64, Rational>,
    /// The real cutoff `J`; the table holds `0 ≤ j ≤ ⌊J⌋`.
    pub cutoff: f64,
}

impl RemainderTable {
    pub fn build(ctx: &EvalContext, cutoff: f64, j_max: u64) -> Self {
        let entries = (0..=j_max).map(|j| (j, remainder(ctx, j))).collect();
        RemainderTable { ctx: ctx.clone(), entries, cutoff }
    }

    /// The table up to the cutoff `J` of `ctx`.
    pub fn for_cutoff(ctx: &EvalContext) -> Self {
        RemainderTable::build(ctx, theorem_a_cutoff(ctx), theorem_a_cutoff_floor(ctx))
    }

    pub fn total(&self) -> Rational {
        sum_exact(self.entries.values().cloned().collect())
    }
}

/// `J = c^{3/5}(1+b)^{−4/5}x^{1/5}` in floating point.
pub fn theorem_a_cutoff(ctx: &EvalContext) -> f64 {
    let c = to_f64(ctx.c());
    let b1 = 1.0 + to_f64(ctx.b());
    libm::pow(c, 0.6) * libm::pow(b1, -0.8) * libm::pow(to_f64(ctx.x()), 0.2)
}

/// `⌊J⌋` exactly: the largest `m ≥ 0` with `m⁵(1+b)⁴ ≤ c³x`.
pub fn theorem_a_cutoff_floor(ctx: &EvalContext) -> u64 {
    let b1 = Rational::one() + ctx.b();
    let b4 = &b1 * &b1 * &b1 * &b1;
    let rhs = ctx.c() * ctx.c() * ctx.c() * ctx.x();
    let fits = |m: u64| {
        let mr = rat(m);
        &mr * &mr * &mr * &mr * &mr * &b4 <= rhs
    };
    let guess = theorem_a_cutoff(ctx);
    let mut m = if guess.is_finite() && guess >= 0.0 { guess as u64 } else { 0 };
    while m > 0 && !fits(m) {
        m -= 1;
    }
    while fits(m + 1) {
        m += 1;
    }
    m
}

/// `x ≥ 40·c⁻³·(1+b)⁴`.
pub fn hypothesis_a(ctx: &EvalContext) -> bool {
    let b1 = Rational::one() + ctx.b();
    let c = ctx.c();
    ctx.x() * c * c * c >= rat(40) * &b1 * &b1 * &b1 * &b1
}

/// `x ≥ 40·c⁻⁵·(1+b)^{27/2}`, decided by squaring
/// `x·c⁵ / (40·(1+b)^13) ≥ √(1+b)`.
pub fn hypothesis_b(ctx: &EvalContext) -> bool {
    let b1 = Rational::one() + ctx.b();
    let c = ctx.c();
    let c5 = c * c * c * c * c;
    let mut b13 = Rational::one();
    for _ in 0..13 {
        b13 *= &b1;
    }
    let lhs = ctx.x() * c5 / (rat(40) * b13);
    &lhs * &lhs >= b1
}

/// One point of an asymptotics scan.
#[derive(Clone, Debug)]
pub struct ResidualSample {
    pub x: Rational,
    pub w: BoundedReal,
    pub main: BoundedReal,
    /// `R(J)` at the cutoff `J = c^{3/5}(1+b)^{−4/5}x^{1/5}`, exact.
    pub rj: Rational,
    pub cutoff: f64,
    pub cutoff_floor: u64,
    /// `W − main − R(J)`
    pub residual_a: BoundedReal,
    /// `W − main`
    pub residual_b: BoundedReal,
    pub hypothesis_a_ok: bool,
    pub hypothesis_b_ok: bool,
}

/// Assembles `W` (block evaluator), the main term and `R(J)`, splitting
/// `eps` evenly between `W` and the main term.
pub fn residuals(ctx: &EvalContext, eps: f64) -> Result<ResidualSample> {
    check_eps(eps)?;
    let w = w_block(ctx, eps / 2.0)?;
    let main = main_term(ctx, eps / 2.0)?;
    let cutoff_floor = theorem_a_cutoff_floor(ctx);
    let rj = remainder_total(ctx, cutoff_floor);
    let residual_b = &w - &main;
    let residual_a = if rj.is_zero() {
        residual_b.clone()
    } else {
        &residual_b - &BoundedReal::from_rational(&rj, residual_b.precision().max(bits_for(eps, 1.0)))
    };
    Ok(ResidualSample {
        x: ctx.x().clone(),
        w,
        main,
        rj,
        cutoff: theorem_a_cutoff(ctx),
        cutoff_floor,
        residual_a,
        residual_b,
        hypothesis_a_ok: hypothesis_a(ctx),
        hypothesis_b_ok: hypothesis_b(ctx),
    })
}

/// Outcome of `Σ_{j>J} W_j < √(cx/(J−1)) + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailBoundReport {
    pub lhs: Rational,
    pub bound: f64,
    pub holds: bool,
}

/// Computes `Σ_{j>J} W_j` exactly and tests the strict inequality
/// `Σ_{j>J} W_j < √(cx/(J−1)) + 1` in exact arithmetic.
pub fn check_tail_bound(ctx: &EvalContext, big_j: &Rational) -> Result<TailBoundReport> {
    if big_j <= &Rational::one() {
        return Err(Error::Precondition("tail bound requires J > 1".into()));
    }
    let rhs_sq = ctx.cx() / (big_j - Rational::one());
    let lhs = tail_of_w(ctx, big_j, &rhs_sq);
    let shifted = &lhs - Rational::one();
    let holds = shifted.is_negative() || &shifted * &shifted < rhs_sq;
    Ok(TailBoundReport { bound: libm::sqrt(to_f64(&rhs_sq)) + 1.0, lhs, holds })
}

/// `Σ_{j>J} W_j`. A term with `j ≥ 2` needs `cx/n² > j − 1 ≥ J − 1`, so only
/// `n < √(cx/(J−1)) + 1` contribute.
fn tail_of_w(ctx: &EvalContext, big_j: &Rational, reach_sq: &Rational) -> Rational {
    let span = ctx.x() - ctx.a();
    if span.is_negative() {
        return Rational::zero();
    }
    let last = floor(&span).min(crate::exactnum::isqrt_floor(reach_sq) + 1u32);
    let mut terms = Vec::new();
    let mut n = BigInt::zero();
    while n <= last {
        let (h, k) = ctx.floors_at(&n);
        let j = k - h;
        if Rational::from_integer(j.clone()) > *big_j {
            let (p, q) = ctx.term_parts(&n);
            terms.push(Rational::new((p - &j * &q).abs(), q));
        }
        n += 1u32;
    }
    sum_exact(terms)
}

/// `|R_j|` against `x^{1/3}/j + x^{1/4}j^{3/4}c^{−3/4}`.
#[derive(Clone, Debug)]
pub struct RjRatio {
    pub j: u64,
    pub rj: Rational,
    pub envelope: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct RjMagnitudeReport {
    pub ratios: Vec<RjRatio>,
    pub max_ratio: f64,
    /// `|R_0 + R_1|` against `x^{1/3}·ln(2x/c) + c^{−3/4}x^{1/4}`.
    pub low_ratio: f64,
}

/// Largest `j` with `j³ ≤ x/c`.
pub fn rj_range_end(ctx: &EvalContext) -> u64 {
    let t = ctx.x() / ctx.c();
    let mut j = libm::cbrt(to_f64(&t)) as u64;
    while j > 0 && rat(j * j * j) > t {
        j -= 1;
    }
    while rat((j + 1) * (j + 1) * (j + 1)) <= t {
        j += 1;
    }
    j
}

/// Ratios for `2 ≤ j ≤ (x/c)^{1/3}` plus the `R_0 + R_1` ratio.
pub fn check_rj_magnitude(ctx: &EvalContext) -> RjMagnitudeReport {
    let x = to_f64(ctx.x());
    let c = to_f64(ctx.c());
    let mut ratios = Vec::new();
    for j in 2..=rj_range_end(ctx) {
        let rj = remainder(ctx, j);
        let jf = j as f64;
        let envelope = libm::cbrt(x) / jf + libm::pow(x, 0.25) * libm::pow(jf, 0.75) * libm::pow(c, -0.75);
        let ratio = to_f64(&rj).abs() / envelope;
        ratios.push(RjRatio { j, rj, envelope, ratio });
    }
    let max_ratio = ratios.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let low = remainder(ctx, 0) + remainder(ctx, 1);
    let low_env = libm::cbrt(x) * libm::log(2.0 * x / c) + libm::pow(c, -0.75) * libm::pow(x, 0.25);
    RjMagnitudeReport { ratios, max_ratio, low_ratio: to_f64(&low).abs() / low_env }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    /// `W − main − R(J)`
    A,
    /// `W − main`
    B,
}

/// Least-squares line through `(ln x, ln |residual|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub used: usize,
}

pub const MIN_FIT_POINTS: usize = 5;

/// Slope of `ln y` against `ln x`; every point must be positive.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints { usable: points.len(), required: MIN_FIT_POINTS });
    }
    let n = points.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (libm::log(x), libm::log(y))).collect();
    for &(u, v) in &logs {
        sx += u;
        sy += v;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(u, v) in &logs {
        sxx += (u - mx) * (u - mx);
        sxy += (u - mx) * (v - my);
    }
    if sxx == 0.0 {
        return Err(Error::Precondition("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    Ok(Fit { slope, intercept: my - slope * mx, used: points.len() })
}

/// Fits the chosen residual, keeping only points with `|residual| > 10·err`.
pub fn fit_exponent(samples: &[ResidualSample], which: Which) -> Result<Fit> {
    let pick = |s: &ResidualSample| match which {
        Which::A => s.residual_a.clone(),
        Which::B => s.residual_b.clone(),
    };
    let mut points = Vec::new();
    let mut all_zero = true;
    for s in samples {
        let r = pick(s);
        let value = r.value_f64().abs();
        if value != 0.0 {
            all_zero = false;
        }
        if value > 10.0 * r.err() {
            points.push((to_f64(&s.x), value));
        }
    }
    if all_zero && !samples.is_empty() {
        return Err(Error::DegenerateResiduals);
    }
    fit_power_law(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{int, parse_rational, ratio};
    use num_traits::ToPrimitive;

    fn ctx(a: Rational, b: Rational, x: Rational) -> EvalContext {
        EvalContext::from_values(a, b, x).unwrap()
    }

    #[test]
    fn main_term_at_one_million() {
        let m = main_term(&ctx(int(1), int(2), int(1_000_000)), 1e-20).unwrap();
        assert!(m.err() <= 1e-20);
        let lo = parse_rational("1663.0897998188365281384").unwrap();
        let hi = parse_rational("1663.0897998188365281386").unwrap();
        assert!(m.within(&lo, &hi), "{m}");
        let m4 = main_term(&ctx(int(1), int(2), int(4_000_000)), 1e-20).unwrap();
        assert!(m4.overlaps(&m.mul_rational(&int(2)).inflate(1e-20)));
    }

    #[test]
    fn f_coeff_examples() {
        let f1 = f_coeff(1, 1e-30).unwrap();
        assert!(f1.within(&parse_rational("0.71404").unwrap(), &parse_rational("0.71405").unwrap()), "{f1}");
        let f2 = f_coeff(2, 1e-30).unwrap();
        assert!(f2.within(&parse_rational("0.06878").unwrap(), &parse_rational("0.06879").unwrap()), "{f2}");
        for j in [100u64, 1000, 10_000] {
            let f = f_coeff(j, 1e-30).unwrap().value_f64();
            assert!((f.abs() * (j as f64).powf(1.5)) < 1.0);
        }
        assert!(f_coeff(0, 1e-3).is_err());
    }

    #[test]
    fn series_partial_small() {
        let s = series_partial(1, 1e-30).unwrap();
        assert!(s.within(&parse_rational("1.3807").unwrap(), &parse_rational("1.3808").unwrap()));
    }

    #[test]
    fn integer_gap_remainders_vanish() {
        let c = ctx(int(1), int(2), int(100_000));
        for j in 0..20 {
            assert!(remainder(&c, j).is_zero());
        }
        let c = ctx(ratio(1, 2), ratio(5, 2), int(100_000));
        assert!(remainder_total(&c, 10).is_zero());
    }

    #[test]
    fn remainder_matches_fractional_parts() {
        use crate::exactnum::frac;
        let c = ctx(int(1), ratio(5, 2), int(100));
        let x = c.x().clone();
        let t = &x / c.c();
        let d = |k: u64| {
            let q = &x / rat(k);
            frac(&(&q - c.a())) - frac(&(&q - c.b()))
        };
        let big_k = k_of(&t).to_u64().unwrap();
        let r0: Rational = (1..=big_k).map(|k| rat(k * k) * d(k)).sum::<Rational>() * c.c() / &x;
        assert_eq!(remainder(&c, 0), r0);
        assert_eq!(r0, parse_rational(R0_100).unwrap());
        for j in 1..8u64 {
            let lo = k_j(j - 1, &t).to_u64().unwrap();
            let hi = k_j(j + 1, &t).to_u64().unwrap();
            let rj: Rational = (lo + 1..=hi)
                .map(|k| (rat(k * k) * c.c() / &x - rat(j)) * d(k))
                .sum();
            assert_eq!(remainder(&c, j), rj, "j = {j}");
        }
    }

    // Frozen from an independent exact-fraction evaluation.
    const R0_100: &str = include_str!("../tests/data/r0_100_1_5half.txt");

    #[test]
    fn cutoff_examples() {
        let c = ctx(int(1), int(2), int(100_000));
        let j = theorem_a_cutoff(&c);
        assert!((j - 10.0 * libm::pow(3.0, -0.8)).abs() < 1e-12);
        assert_eq!(theorem_a_cutoff_floor(&c), 4);
        // x = 32^5·3^4 gives J = 32 exactly
        let c = ctx(int(1), int(2), int(32i64.pow(5) * 81));
        assert_eq!(theorem_a_cutoff_floor(&c), 32);
        let c = ctx(int(1), int(2), int(32i64.pow(5) * 81 - 1));
        assert_eq!(theorem_a_cutoff_floor(&c), 31);
    }

    #[test]
    fn hypothesis_flags() {
        assert!(hypothesis_a(&ctx(int(1), int(2), int(1_000_000))));
        assert!(hypothesis_a(&ctx(int(1), int(2), int(3240))));
        assert!(!hypothesis_a(&ctx(int(1), int(2), int(3239))));
        // 40·3^13.5 ≈ 1.11e8
        assert!(!hypothesis_b(&ctx(int(1), int(2), int(110_000_000))));
        assert!(hypothesis_b(&ctx(int(1), int(2), int(111_000_000))));
    }

    #[test]
    fn tail_bound_examples() {
        let r = check_tail_bound(&ctx(int(1), int(2), int(1000)), &int(3)).unwrap();
        assert!(r.holds && r.lhs.is_positive());
        let r = check_tail_bound(&ctx(int(1), int(2), ratio(1, 2)), &int(3)).unwrap();
        assert!(r.holds && r.lhs.is_zero());
        assert!(check_tail_bound(&ctx(int(1), int(2), int(10)), &int(1)).is_err());
    }

    #[test]
    fn synthetic_fits() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| {
            let x = 10f64.powi(4 + i);
            (x, x.powf(0.4))
        }).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.slope - 0.4).abs() < 1e-6);
        let pts: Vec<(f64, f64)> = pts.iter().map(|&(x, _)| (x, 3.0 * x.powf(4.0 / 9.0))).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.slope - 4.0 / 9.0).abs() < 1e-6);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-6);
        assert!(matches!(fit_power_law(&pts[..3]), Err(Error::TooFewPoints { .. })));
    }
}
