//! Block decomposition of the index set into the cells `I(h,k)` on which both
//! floors are constant, the threshold functions `K`, `K_j`, `N_j`, the
//! closed forms for `W_0` and `W_j`, and the sublinear evaluator of `W`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::directsum::EvalContext;
use crate::exactnum::{bits_for, floor, floor_sqrt_le, isqrt_floor, ulps, HarmonicTail};
use crate::{BoundedReal, Endpoint, Error, Rational, Result};

/// `K(t)`: the largest `k ≥ 0` with `k(k+1) ≤ t`.
pub fn k_of(t: &Rational) -> BigInt {
    floor_sqrt_le(t, &BigInt::one())
}

/// `K_j(t)`: the largest `k ≥ j` with `(k−j)k ≤ jt`; `K_0 = 0`.
pub fn k_j(j: u64, t: &Rational) -> BigInt {
    if j == 0 {
        return BigInt::zero();
    }
    let jb = BigInt::from(j);
    floor_sqrt_le(&(t * Rational::from_integer(jb.clone())), &-jb)
}

/// `N_j`: the largest `n ≥ 0` with `(n+a)(n+b) ≤ cx/j`, or `None` when even
/// `n = 0` fails.
pub fn n_j(j: u64, ctx: &EvalContext) -> Option<BigInt> {
    assert!(j >= 1, "N_j requires j >= 1");
    let s = ctx.cx() / Rational::from_integer(BigInt::from(j));
    let (a, b) = (ctx.a(), ctx.b());
    let fits = |n: &BigInt| {
        let n = Rational::from_integer(n.clone());
        (&n + a) * (&n + b) <= s
    };
    // (2n+a+b)² ≤ 4s + c²
    let disc = &s * Rational::from_integer(BigInt::from(4u8)) + ctx.c() * ctx.c();
    let root = Rational::from_integer(isqrt_floor(&disc));
    let mut n = floor(&((root - a - b) / Rational::from_integer(BigInt::from(2u8))));
    if n.is_negative() {
        n = BigInt::zero();
    }
    while fits(&(&n + 1u32)) {
        n += 1u32;
    }
    while !fits(&n) {
        if n.is_zero() {
            return None;
        }
        n -= 1u32;
    }
    Some(n)
}

/// Position of `k` relative to `K_j(x/c)` for a cell with `k − h = j ≥ 1`;
/// `J0` marks `j = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EClass {
    /// `k ≤ K_j − 1`
    E1,
    /// `k > K_j`
    E2,
    /// `k = K_j`
    E3,
    J0,
}

pub fn classify(j: u64, k: &BigInt, ctx: &EvalContext) -> EClass {
    if j == 0 {
        return EClass::J0;
    }
    let kj = k_j(j, &(ctx.x() / ctx.c()));
    match k.cmp(&kj) {
        core::cmp::Ordering::Less => EClass::E1,
        core::cmp::Ordering::Equal => EClass::E3,
        core::cmp::Ordering::Greater => EClass::E2,
    }
}

/// A nonempty cell `I(h,k)`: the integers `n ≥ 0` in `(lo, hi]`, which are
/// exactly `first..=last`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCell {
    pub h: BigInt,
    pub k: BigInt,
    pub j: u64,
    pub lo: Rational,
    pub hi: Endpoint,
    pub eclass: EClass,
    pub first: BigInt,
    /// `None` for the final infinite cell.
    pub last: Option<BigInt>,
}

impl BlockCell {
    pub fn contains(&self, n: &BigInt) -> bool {
        n >= &self.first && self.last.as_ref().is_none_or(|l| n <= l)
    }

    /// Number of integers in the cell, `None` when infinite.
    pub fn len(&self) -> Option<BigInt> {
        self.last.as_ref().map(|l| l - &self.first + 1u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `x/d − s`, or `∞` when `d = 0`.
fn endpoint(ctx: &EvalContext, d: &BigInt, s: &Rational) -> Endpoint {
    if d.is_zero() {
        Endpoint::Infinity
    } else {
        Endpoint::Finite(ctx.x() / Rational::from_integer(d.clone()) - s)
    }
}

/// `(h, k, first, last)` without the derived rationals.
#[derive(Clone, Debug)]
struct RawCell {
    h: BigInt,
    k: BigInt,
    first: BigInt,
    last: Option<BigInt>,
}

struct Walk<'a> {
    ctx: &'a EvalContext,
    next: Option<BigInt>,
}

impl Iterator for Walk<'_> {
    type Item = RawCell;

    fn next(&mut self) -> Option<RawCell> {
        let n = self.next.take()?;
        let (h, k) = self.ctx.floors_at(&n);
        let last = if k.is_zero() {
            None
        } else {
            let by_a = self.ctx.qa().last_with(&k);
            Some(if h.is_zero() { by_a } else { by_a.min(self.ctx.qb().last_with(&h)) })
        };
        if let Some(l) = &last {
            self.next = Some(l + 1u32);
        }
        Some(RawCell { h, k, first: n, last })
    }
}

fn walk(ctx: &EvalContext) -> Walk<'_> {
    Walk { ctx, next: Some(BigInt::zero()) }
}

fn j_of(raw: &RawCell) -> u64 {
    (&raw.k - &raw.h).to_u64().expect("k - h fits in u64")
}

/// Every nonempty cell in increasing order of `n`, ending with the infinite
/// cell `(0, 0)`.
pub fn cells(ctx: &EvalContext) -> impl Iterator<Item = BlockCell> + '_ {
    walk(ctx).map(move |raw| {
        let j = j_of(&raw);
        let one = BigInt::one();
        let lo_a = endpoint(ctx, &(&raw.k + &one), ctx.a());
        let lo_b = endpoint(ctx, &(&raw.h + &one), ctx.b());
        let lo = match (lo_a, lo_b) {
            (Endpoint::Finite(p), Endpoint::Finite(q)) => p.max(q),
            _ => unreachable!("k + 1 and h + 1 are positive"),
        };
        let hi_a = endpoint(ctx, &raw.k, ctx.a());
        let hi_b = endpoint(ctx, &raw.h, ctx.b());
        let hi = if hi_a < hi_b { hi_a } else { hi_b };
        BlockCell {
            eclass: classify(j, &raw.k, ctx),
            h: raw.h,
            k: raw.k,
            j,
            lo,
            hi,
            first: raw.first,
            last: raw.last,
        }
    })
}

/// Number of nonempty cells, including the final one.
pub fn cell_count(ctx: &EvalContext) -> u64 {
    walk(ctx).count() as u64
}

/// One cell's share of `W`.
#[derive(Clone, Debug)]
pub struct CellSum {
    pub cell: BlockCell,
    pub contribution: BoundedReal,
    /// `N_j` when it falls inside the cell (not on its last index).
    pub split_at: Option<BigInt>,
}

/// Cells at most this long are summed term by term.
const SHORT_CELL: u32 = 32;

/// Fixed-precision machinery shared by the cell sums.
struct Evaluator<'a> {
    ctx: &'a EvalContext,
    tail: HarmonicTail,
    bits: u32,
    /// Radius target for each tail evaluation before scaling by `cx`.
    tail_target: f64,
    /// Last tail evaluated, keyed by its first index.
    cached: Option<(BigInt, BoundedReal)>,
    nj: BTreeMap<u64, Option<BigInt>>,
}

impl<'a> Evaluator<'a> {
    fn new(ctx: &'a EvalContext, bits: u32, tail_target: f64) -> Self {
        Evaluator { ctx, tail: ctx.tail(), bits, tail_target, cached: None, nj: BTreeMap::new() }
    }

    /// `Σ_{n ≥ first} 1/((n+a)(n+b))`.
    fn tail_from(&mut self, first: &BigInt) -> BoundedReal {
        if let Some((n, v)) = &self.cached {
            if n == first {
                return v.clone();
            }
        }
        let v = self.tail.sum_from(first, self.bits, self.tail_target);
        self.cached = Some((first.clone(), v.clone()));
        v
    }

    fn n_j(&mut self, j: u64) -> Option<BigInt> {
        let ctx = self.ctx;
        self.nj.entry(j).or_insert_with(|| n_j(j, ctx)).clone()
    }

    /// `Σ_{first ≤ n ≤ last} |cx/((n+a)(n+b)) − j|` term by term.
    fn short_sum(&self, first: &BigInt, last: &BigInt, j: u64) -> BoundedReal {
        let shift = self.bits as usize;
        let jb = BigInt::from(j);
        let mut mant = BigInt::zero();
        let mut inexact = 0u32;
        let mut n = first.clone();
        while &n <= last {
            let (p, q) = self.ctx.term_parts(&n);
            let (m, r) = ((p - &jb * &q).abs() << shift).div_mod_floor(&q);
            mant += m;
            if !r.is_zero() {
                inexact += 1;
            }
            n += 1u32;
        }
        BoundedReal::from_parts(mant, self.bits, ulps(f64::from(inexact), self.bits))
    }

    /// `cx · Σ_{first ≤ n ≤ last} 1/((n+a)(n+b))`, `last = None` meaning `∞`.
    fn term_sum(&mut self, first: &BigInt, last: Option<&BigInt>) -> BoundedReal {
        match last {
            Some(l) if l < first => BoundedReal::zero(),
            Some(l) if l - first < BigInt::from(SHORT_CELL) => self.short_sum(first, l, 0),
            Some(l) => {
                let head = self.tail_from(first);
                let rest = self.tail_from(&(l + 1u32));
                (&head - &rest).mul_rational(self.ctx.cx())
            }
            None => self.tail_from(first).mul_rational(self.ctx.cx()),
        }
    }

    fn cell(&mut self, raw: &RawCell) -> (BoundedReal, Option<BigInt>) {
        let j = j_of(raw);
        let Some(last) = &raw.last else {
            return (self.term_sum(&raw.first, None), None);
        };
        if j == 0 {
            return (self.term_sum(&raw.first, Some(last)), None);
        }
        if last - &raw.first < BigInt::from(SHORT_CELL) {
            return (self.short_sum(&raw.first, last, j), None);
        }
        let jb = BigInt::from(j);
        let count = |lo: &BigInt, hi: &BigInt| -> BoundedReal {
            BoundedReal::from_integer(&((hi - lo + 1u32) * &jb))
        };
        // Terms with n ≤ N_j are at least j.
        match self.n_j(j) {
            Some(nj) if &nj >= last => {
                let t = self.term_sum(&raw.first, Some(last));
                (&t - &count(&raw.first, last), None)
            }
            Some(nj) if nj >= raw.first => {
                let above = self.term_sum(&raw.first, Some(&nj));
                let next = &nj + 1u32;
                let below = self.term_sum(&next, Some(last));
                let v = &(&above - &count(&raw.first, &nj)) + &(&count(&next, last) - &below);
                (v, Some(nj))
            }
            _ => {
                let t = self.term_sum(&raw.first, Some(last));
                (&count(&raw.first, last) - &t, None)
            }
        }
    }
}

/// Upper bound on the number of cells: each cell boundary is a change of
/// `⌊x/(n+a)⌋` or `⌊x/(n+b)⌋`, and each takes at most `2√x + 1` values.
fn cell_bound(ctx: &EvalContext) -> f64 {
    let r = isqrt_floor(ctx.x()).to_f64().unwrap_or(f64::INFINITY);
    4.0 * r + 8.0
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidEps)
    }
}

/// Per-run precision plan: fractional bits and the radius target of each
/// tail evaluation.
fn plan(ctx: &EvalContext, eps: f64) -> (u32, f64) {
    let cells = cell_bound(ctx);
    let cx = crate::exactnum::to_f64(ctx.cx()).max(1.0);
    let tails = 3.0 * cells + 1.0;
    let tail_target = eps / (4.0 * tails * cx);
    // short terms plus tail ulps scaled by cx
    let bits = bits_for(eps / 4.0, f64::from(SHORT_CELL) * cells)
        .max(bits_for(tail_target, 1.0) + 8);
    (bits, tail_target)
}

/// Contribution of a single cell to `W`, with radius at most `eps`.
pub fn cell_sum(cell: &BlockCell, ctx: &EvalContext, eps: f64) -> Result<CellSum> {
    check_eps(eps)?;
    let raw = RawCell {
        h: cell.h.clone(),
        k: cell.k.clone(),
        first: cell.first.clone(),
        last: cell.last.clone(),
    };
    let cx = crate::exactnum::to_f64(ctx.cx()).max(1.0);
    let mut bits = bits_for(eps / 4.0, f64::from(SHORT_CELL));
    let mut target = eps / (16.0 * cx);
    loop {
        let mut ev = Evaluator::new(ctx, bits, target);
        let (contribution, _) = ev.cell(&raw);
        if contribution.err() <= eps || bits >= 1000 {
            let split_at = match (&cell.last, cell.j) {
                (Some(last), j) if j >= 1 => {
                    n_j(j, ctx).filter(|nj| nj >= &cell.first && nj < last)
                }
                _ => None,
            };
            return Ok(CellSum { cell: cell.clone(), contribution, split_at });
        }
        bits += 32;
        target /= 65536.0;
    }
}

/// Statistics of one block evaluation.
#[derive(Clone, Debug)]
pub struct BlockStats {
    pub cells: u64,
    pub bits: u32,
}

/// `W(x;a,b)` as the sum over all cells, with radius at most `eps`.
pub fn w_block(ctx: &EvalContext, eps: f64) -> Result<BoundedReal> {
    w_block_with_stats(ctx, eps).map(|(w, _)| w)
}

/// [`w_block`] together with the cell count and working precision.
pub fn w_block_with_stats(ctx: &EvalContext, eps: f64) -> Result<(BoundedReal, BlockStats)> {
    check_eps(eps)?;
    let (mut bits, mut target) = plan(ctx, eps);
    loop {
        let mut ev = Evaluator::new(ctx, bits, target);
        let mut total = BoundedReal::zero();
        let mut cells = 0u64;
        for raw in walk(ctx) {
            let (v, _) = ev.cell(&raw);
            total = &total + &v;
            cells += 1;
        }
        if total.err() <= eps || bits >= 1000 {
            return Ok((total, BlockStats { cells, bits }));
        }
        bits += 32;
        target /= 4_294_967_296.0;
    }
}

/// `V(x;a,b) = cx·F(0⁻) − Σ_n (⌊x/(n+a)⌋ − ⌊x/(n+b)⌋)`, the second sum taken
/// cell by cell.
pub fn v_block(ctx: &EvalContext, eps: f64) -> Result<BoundedReal> {
    check_eps(eps)?;
    let mut floors = BigInt::zero();
    for raw in walk(ctx) {
        if let Some(last) = &raw.last {
            floors += (&raw.k - &raw.h) * (last - &raw.first + 1u32);
        }
    }
    let cx = crate::exactnum::to_f64(ctx.cx()).max(1.0);
    let all = ctx.tail().sum_from_within(&BigInt::zero(), eps / (2.0 * cx));
    Ok(&all.mul_rational(ctx.cx()) - &BoundedReal::from_integer(&floors))
}

fn domain(msg: alloc::string::String) -> Error {
    Error::Domain(msg)
}

/// Prefix sums over `k` of `F(x/k − a)`, `F(x/k − b)`, `⌊x/k − a⌋` and
/// `⌊x/k − b⌋`, so that every closed-form block is a difference of two
/// entries.
pub struct ClosedForms<'a> {
    ctx: &'a EvalContext,
    t: Rational,
    tail: HarmonicTail,
    bits: u32,
    target: f64,
    /// `F` values keyed by first summation index.
    memo: BTreeMap<BigInt, BoundedReal>,
    /// Index `i` holds the sum over `1 ≤ k ≤ i`.
    f_a: Vec<BoundedReal>,
    f_b: Vec<BoundedReal>,
    fl_a: Vec<BigInt>,
    fl_b: Vec<BigInt>,
}

impl<'a> ClosedForms<'a> {
    /// Prepares the closed forms for `W_0` and all `1 ≤ j ≤ j_max`; each
    /// result then has radius at most `eps`.
    pub fn new(ctx: &'a EvalContext, j_max: u64, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let t = ctx.x() / ctx.c();
        let k_max = k_j(j_max + 1, &t).max(k_of(&t) + 1u32);
        let k_len = k_max.to_usize().ok_or_else(|| domain("closed-form range too large".into()))?;
        let cx = crate::exactnum::to_f64(ctx.cx()).max(1.0);
        let target = eps / (16.0 * (k_len as f64 + 2.0) * cx);
        let mut cf = ClosedForms {
            ctx,
            t,
            tail: ctx.tail(),
            bits: bits_for(target, 1.0) + 8,
            target,
            memo: BTreeMap::new(),
            f_a: Vec::with_capacity(k_len + 1),
            f_b: Vec::with_capacity(k_len + 1),
            fl_a: Vec::with_capacity(k_len + 1),
            fl_b: Vec::with_capacity(k_len + 1),
        };
        cf.f_a.push(BoundedReal::zero());
        cf.f_b.push(BoundedReal::zero());
        cf.fl_a.push(BigInt::zero());
        cf.fl_b.push(BigInt::zero());
        for k in 1..=k_len {
            let kb = BigInt::from(k);
            let (la, lb) = (ctx.qa().last_with(&kb), ctx.qb().last_with(&kb));
            let fa = cf.f_at_floor(&la);
            let fb = cf.f_at_floor(&lb);
            let next_a = &cf.f_a[k - 1] + &fa;
            let next_b = &cf.f_b[k - 1] + &fb;
            cf.f_a.push(next_a);
            cf.f_b.push(next_b);
            cf.fl_a.push(&cf.fl_a[k - 1] + la);
            cf.fl_b.push(&cf.fl_b[k - 1] + lb);
        }
        Ok(cf)
    }

    /// `F(t)` given `⌊t⌋`, with `F(t) = F(0⁻)` for `t < 0`.
    fn f_at_floor(&mut self, fl: &BigInt) -> BoundedReal {
        let first = if fl.is_negative() { BigInt::zero() } else { fl + 1u32 };
        if let Some(v) = self.memo.get(&first) {
            return v.clone();
        }
        let v = self.tail.sum_from(&first, self.bits, self.target);
        self.memo.insert(first, v.clone());
        v
    }

    fn idx(k: &BigInt) -> usize {
        k.to_usize().expect("index within table")
    }

    /// `Σ_{lo < k ≤ hi}` of a prefix table.
    fn range<T>(table: &[T], lo: &BigInt, hi: &BigInt) -> T
    where
        for<'x> &'x T: core::ops::Sub<&'x T, Output = T>,
        T: Clone,
    {
        let lo = lo.max(&BigInt::zero()).clone().min(hi.clone());
        &table[Self::idx(hi)] - &table[Self::idx(&lo)]
    }

    /// `W_0 = cx·F(x/(K+1) − a) + cx·Σ_{1≤k≤K} (F(x/k − a) − F(x/k − b))`
    /// with `K = K(x/c)`, valid for `x ≥ a²/c`.
    pub fn w0(&mut self) -> Result<BoundedReal> {
        let ctx = self.ctx;
        let (a, c) = (ctx.a(), ctx.c());
        if ctx.x() < &(a * a / c) {
            return Err(domain(format!("W_0 closed form needs x >= a^2/c = {}", a * a / c)));
        }
        let big_k = k_of(&self.t);
        let head = self.f_at_floor(&ctx.qa().last_with(&(&big_k + 1u32)));
        let zero = BigInt::zero();
        let sum = &Self::range(&self.f_a, &zero, &big_k) - &Self::range(&self.f_b, &zero, &big_k);
        Ok((&head + &sum).mul_rational(ctx.cx()))
    }

    /// `W_j` for `1 ≤ j ≤ y − 1` through the six-block closed form in
    /// `K_{j±1}`, `N_j` and `F`.
    pub fn wj(&mut self, j: u64) -> Result<BoundedReal> {
        let ctx = self.ctx;
        if j == 0 {
            return Err(domain("W_j closed form needs j >= 1".into()));
        }
        let limit = ctx.y() - Rational::one();
        if Rational::from_integer(BigInt::from(j)) > limit {
            return Err(domain(format!("W_j closed form needs j <= y - 1 = {limit}")));
        }
        let k_lo = k_j(j - 1, &self.t);
        let k_hi = k_j(j + 1, &self.t);
        if Self::idx(&k_hi) >= self.f_a.len() {
            return Err(domain(format!("table prepared for j <= {}", self.f_a.len())));
        }
        let nj = n_j(j, ctx).ok_or_else(|| domain("N_j does not exist".into()))?;
        let jb = BigInt::from(j);
        let hi_edge = &k_hi - (j + 1);
        let lo_edge = &k_lo - (j - 1);

        let integer = (Self::range(&self.fl_a, &k_lo, &k_hi) - Self::range(&self.fl_b, &k_lo, &k_hi)
            + Self::range(&self.fl_b, &hi_edge, &k_hi)
            - Self::range(&self.fl_b, &lo_edge, &k_lo))
            * &jb
            - 2u32 * &jb * &nj;

        let inner = &Self::range(&self.f_a, &k_lo, &k_hi) - &Self::range(&self.f_b, &k_lo, &k_hi);
        let edges = &Self::range(&self.f_b, &hi_edge, &k_hi) - &Self::range(&self.f_b, &lo_edge, &k_lo);
        let f_nj = self.f_at_floor(&nj);
        let f_sum = &(&inner + &edges) - &(&f_nj + &f_nj);
        Ok(&f_sum.mul_rational(ctx.cx()) + &BoundedReal::from_integer(&integer))
    }
}

/// [`ClosedForms::w0`] for a single evaluation.
pub fn w0_closed(ctx: &EvalContext, eps: f64) -> Result<BoundedReal> {
    ClosedForms::new(ctx, 0, eps)?.w0()
}

/// [`ClosedForms::wj`] for a single evaluation.
pub fn wj_closed(j: u64, ctx: &EvalContext, eps: f64) -> Result<BoundedReal> {
    if j == 0 || Rational::from_integer(BigInt::from(j)) > ctx.y() - Rational::one() {
        return Err(domain(format!("W_j closed form needs 1 <= j <= y - 1, got j = {j}")));
    }
    ClosedForms::new(ctx, j, eps)?.wj(j)
}

/// Evaluates one cell's contribution as a list, for reporting.
pub fn cell_sums(ctx: &EvalContext, eps: f64) -> Result<Vec<CellSum>> {
    check_eps(eps)?;
    let all: Vec<BlockCell> = cells(ctx).collect();
    let per = eps / all.len() as f64;
    all.iter().map(|c| cell_sum(c, ctx, per)).collect()
}
