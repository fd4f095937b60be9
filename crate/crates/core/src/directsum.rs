//! Reference evaluators that follow the definitions term by term.
//!
//! These are `O(x)` and exist as ground truth for the block evaluator and the
//! closed forms. Every finite term is an exact rational; only the analytic
//! tail `cx·F(n*)` carries approximation error.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::exactnum::{bits_for, ceil, floor, isqrt_floor, sum_exact, HarmonicTail};
use crate::{BoundedReal, Error, Rational, Result};

/// A validated pair `0 < a < b` with `c = b − a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Params {
    a: Rational,
    b: Rational,
    c: Rational,
}

impl Params {
    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        if !a.is_positive() {
            return Err(Error::InvalidParams("requires a > 0"));
        }
        if a >= b {
            return Err(Error::InvalidParams("requires a < b"));
        }
        let c = &b - &a;
        Ok(Params { a, b, c })
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn c(&self) -> &Rational {
        &self.c
    }

    /// `c` is a positive integer, in which case every `R_j` vanishes.
    pub fn integer_gap(&self) -> bool {
        self.c.is_integer()
    }
}

/// `t ↦ ⌊x/(n + s)⌋` in integer form: `⌊num / (n·step + off)⌋`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct ShiftedQuotient {
    num: BigInt,
    step: BigInt,
    off: BigInt,
}

impl ShiftedQuotient {
    fn new(x: &Rational, s: &Rational) -> Self {
        ShiftedQuotient {
            num: x.numer() * s.denom(),
            step: x.denom() * s.denom(),
            off: x.denom() * s.numer(),
        }
    }

    /// `⌊x/(n+s)⌋` for `n ≥ 0`.
    pub(crate) fn floor_at(&self, n: &BigInt) -> BigInt {
        self.num.div_floor(&(n * &self.step + &self.off))
    }

    /// `⌊x/k − s⌋` for `k ≥ 1`: the last `n` with `⌊x/(n+s)⌋ ≥ k`.
    pub(crate) fn last_with(&self, k: &BigInt) -> BigInt {
        (&self.num - k * &self.off).div_floor(&(k * &self.step))
    }
}

/// A problem instance: parameters plus `x > 0`, with `y = cx/(ab)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalContext {
    params: Params,
    x: Rational,
    y: Rational,
    cx: Rational,
    qa: ShiftedQuotient,
    qb: ShiftedQuotient,
    /// `cx/((n+a)(n+b)) = term_num / ((n·ad + an)(n·bd + bn)·term_den)`
    term_num: BigInt,
    term_den: BigInt,
}

impl EvalContext {
    pub fn new(params: Params, x: Rational) -> Result<Self> {
        if !x.is_positive() {
            return Err(Error::NonPositiveX);
        }
        let cx = params.c() * &x;
        let y = &cx / (params.a() * params.b());
        let (a, b) = (params.a(), params.b());
        let term_num = cx.numer() * a.denom() * b.denom();
        let term_den = cx.denom().clone();
        Ok(EvalContext {
            qa: ShiftedQuotient::new(&x, a),
            qb: ShiftedQuotient::new(&x, b),
            params,
            x,
            y,
            cx,
            term_num,
            term_den,
        })
    }

    /// Convenience constructor from `a`, `b`, `x`.
    pub fn from_values(a: Rational, b: Rational, x: Rational) -> Result<Self> {
        EvalContext::new(Params::new(a, b)?, x)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn x(&self) -> &Rational {
        &self.x
    }

    pub fn y(&self) -> &Rational {
        &self.y
    }

    pub fn a(&self) -> &Rational {
        self.params.a()
    }

    pub fn b(&self) -> &Rational {
        self.params.b()
    }

    pub fn c(&self) -> &Rational {
        self.params.c()
    }

    pub fn cx(&self) -> &Rational {
        &self.cx
    }

    pub(crate) fn qa(&self) -> &ShiftedQuotient {
        &self.qa
    }

    pub(crate) fn qb(&self) -> &ShiftedQuotient {
        &self.qb
    }

    /// `(⌊x/(n+b)⌋, ⌊x/(n+a)⌋)`.
    pub fn floors_at(&self, n: &BigInt) -> (BigInt, BigInt) {
        (self.qb.floor_at(n), self.qa.floor_at(n))
    }

    /// `cx/((n+a)(n+b))` as an integer fraction `(p, q)`, `q > 0`.
    pub(crate) fn term_parts(&self, n: &BigInt) -> (BigInt, BigInt) {
        let (a, b) = (self.a(), self.b());
        let q = (n * a.denom() + a.numer()) * (n * b.denom() + b.numer()) * &self.term_den;
        (self.term_num.clone(), q)
    }

    /// `cx/((n+a)(n+b))` exactly.
    pub fn term(&self, n: &BigInt) -> Rational {
        let (p, q) = self.term_parts(n);
        Rational::new(p, q)
    }

    /// `n* = max(0, ⌈x − a⌉)`: beyond it both floors vanish.
    pub fn cutoff(&self) -> BigInt {
        ceil(&(&self.x - self.a())).max(BigInt::zero())
    }

    pub(crate) fn tail(&self) -> HarmonicTail {
        HarmonicTail::for_pair(self.a(), self.b())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Absolute,
    Signed,
    EqualFloors,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidEps)
    }
}

fn direct(ctx: &EvalContext, eps: f64, mode: Mode, cutoff: &BigInt) -> Result<BoundedReal> {
    check_eps(eps)?;
    let count = to_f64_int(cutoff) + 2.0;
    let cx_abs = crate::exactnum::to_f64(ctx.cx()).max(1.0);
    let mut bits = bits_for(eps / 2.0, count);
    let tail = ctx.tail();
    let first_tail = cutoff + 1u32;
    let tail_part = tail
        .sum_from_within(&first_tail, eps / (4.0 * cx_abs))
        .mul_rational(ctx.cx());
    loop {
        let shift = bits as usize;
        let mut mant = BigInt::zero();
        let mut inexact = 0u64;
        let mut n = BigInt::zero();
        while &n <= cutoff {
            let (h, k) = ctx.floors_at(&n);
            let j = k - h;
            let (p, q) = ctx.term_parts(&n);
            let jq = &j * &q;
            let numer = match mode {
                Mode::Absolute => (p - jq).abs(),
                Mode::Signed => p - jq,
                Mode::EqualFloors if j.is_zero() => p,
                Mode::EqualFloors => {
                    n += 1u32;
                    continue;
                }
            };
            let (m, r) = (numer << shift).div_mod_floor(&q);
            mant += m;
            if !r.is_zero() {
                inexact += 1;
            }
            n += 1u32;
        }
        let finite = BoundedReal::from_parts(
            mant,
            bits,
            crate::exactnum::ulps(inexact as f64, bits),
        );
        let total = &finite + &tail_part;
        if total.err() <= eps || bits >= 1000 {
            return Ok(total);
        }
        bits += 32;
    }
}

fn to_f64_int(n: &BigInt) -> f64 {
    num_traits::ToPrimitive::to_f64(n).unwrap_or(f64::INFINITY)
}

/// `W(x;a,b)` by its definition, `O(x)` terms plus the analytic tail.
pub fn w_direct(ctx: &EvalContext, eps: f64) -> Result<BoundedReal> {
    direct(ctx, eps, Mode::Absolute, &ctx.cutoff())
}

/// `W` with the explicit part extended to `cutoff ≥ n*`; the result must not
/// depend on the choice.
pub fn w_direct_with_cutoff(ctx: &EvalContext, cutoff: &BigInt, eps: f64) -> Result<BoundedReal> {
    if cutoff < &ctx.cutoff() {
        return Err(Error::Precondition("cutoff must be at least ceil(x - a)".into()));
    }
    direct(ctx, eps, Mode::Absolute, cutoff)
}

/// `V(x;a,b)`, the signed analogue of [`w_direct`].
pub fn v_direct(ctx: &EvalContext, eps: f64) -> Result<BoundedReal> {
    direct(ctx, eps, Mode::Signed, &ctx.cutoff())
}

/// `W_0`: the terms whose two floors coincide, including the whole tail.
pub fn w0_direct(ctx: &EvalContext, eps: f64) -> Result<BoundedReal> {
    direct(ctx, eps, Mode::EqualFloors, &ctx.cutoff())
}

/// `W_j` for `j ≥ 1`, exactly.
///
/// Only `n ≤ x − a` can have `⌊x/(n+a)⌋ ≥ 1`, and for `j ≥ 2` a term needs
/// `cx/n² > j − 1`, so `n ≤ √(cx/(j−1))`.
pub fn wj_direct(ctx: &EvalContext, j: u64) -> Result<Rational> {
    if j == 0 {
        return Err(Error::Precondition("wj_direct requires j >= 1".into()));
    }
    let span = &ctx.x - ctx.a();
    if span.is_negative() {
        return Ok(Rational::zero());
    }
    let mut last = floor(&span);
    if j >= 2 {
        let r = isqrt_floor(&(ctx.cx() / Rational::from_integer(BigInt::from(j - 1))));
        last = last.min(r);
    }
    let jb = BigInt::from(j);
    let mut terms = Vec::new();
    let mut n = BigInt::zero();
    while n <= last {
        let (h, k) = ctx.floors_at(&n);
        if k - h == jb {
            let (p, q) = ctx.term_parts(&n);
            terms.push(Rational::new((p - &jb * &q).abs(), q));
        }
        n += BigInt::one();
    }
    Ok(sum_exact(terms))
}

/// Every nonzero `W_j`, `j ≥ 1`, exactly, from one pass over `n ≤ x − a`.
pub fn wj_direct_all(ctx: &EvalContext) -> alloc::collections::BTreeMap<u64, Rational> {
    let mut buckets: alloc::collections::BTreeMap<u64, Vec<Rational>> = Default::default();
    let span = &ctx.x - ctx.a();
    if !span.is_negative() {
        let last = floor(&span);
        let mut n = BigInt::zero();
        while n <= last {
            let (h, k) = ctx.floors_at(&n);
            let j = k - h;
            if !j.is_zero() {
                let (p, q) = ctx.term_parts(&n);
                let term = Rational::new((p - &j * &q).abs(), q);
                let j = num_traits::ToPrimitive::to_u64(&j).expect("j fits in u64");
                buckets.entry(j).or_default().push(term);
            }
            n += BigInt::one();
        }
    }
    buckets.into_iter().map(|(j, terms)| (j, sum_exact(terms))).collect()
}
