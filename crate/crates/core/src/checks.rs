//! Property suites run against a single instance: the cell partition, the
//! bounds on `K_j` and `N_j`, the tail bound on `Σ_{j>J} W_j`, the
//! closed-form identities and the size of the remainder sums.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::asymptotics::{check_rj_magnitude, check_tail_bound};
use crate::blocks::{cells, k_j, n_j, ClosedForms};
use crate::directsum::{w0_direct, wj_direct_all, EvalContext};
use crate::exactnum::{floor, ratio, to_f64};
use crate::{Rational, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Partition,
    NjSandwich,
    KjBounds,
    TailBound,
    Identity,
    RemainderMagnitude,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Partition,
        Suite::NjSandwich,
        Suite::KjBounds,
        Suite::TailBound,
        Suite::Identity,
        Suite::RemainderMagnitude,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Partition => "partition",
            Suite::NjSandwich => "nj-sandwich",
            Suite::KjBounds => "kj-bounds",
            Suite::TailBound => "tail-bound",
            Suite::Identity => "identity",
            Suite::RemainderMagnitude => "rj-magnitude",
        }
    }

    /// What the suite asserts, for reports.
    pub fn statement(self) -> &'static str {
        match self {
            Suite::Partition => "cells I(h,k) partition n >= 0 with the right floor pair",
            Suite::NjSandwich => "floor(x/(K_j+1) - a) <= N_j <= floor(x/K_j - a) for 1 <= j <= y",
            Suite::KjBounds => {
                "sqrt(jx/c) + j/2 - 1 < K_j <= sqrt(jx/c) + j, K_j <= x/a for j <= y, K_j monotone"
            }
            Suite::TailBound => "sum_{j>J} W_j < sqrt(cx/(J-1)) + 1",
            Suite::Identity => "closed forms for W_0 and W_j match the definitions",
            Suite::RemainderMagnitude => "|R_j| relative to x^(1/3)/j + x^(1/4) j^(3/4) c^(-3/4)",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// The `K_j(t)` used by the suites; replaceable to check that a broken
/// implementation is caught.
pub type KjFn = fn(u64, &Rational) -> BigInt;

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub kj: KjFn,
    /// Largest `n` inspected by the partition suite.
    pub partition_limit: u64,
    /// Largest `j` inspected by the `K_j` and `N_j` suites.
    pub j_limit: u64,
    /// Largest `x` for which the identity suite runs the `O(x)` oracle.
    pub identity_x_limit: u64,
    pub eps: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            kj: k_j,
            partition_limit: 100_000,
            j_limit: 5_000,
            identity_x_limit: 100_000,
            eps: 1e-20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checked: u64,
    pub failed: u64,
    /// The first few failures, described.
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        SuiteReport { suite, checked: 0, failed: 0, failures: Vec::new(), notes: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }

    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < 20 {
                self.failures.push(what());
            }
        }
    }
}

pub fn run_suite(suite: Suite, ctx: &EvalContext, opts: &CheckOptions) -> Result<SuiteReport> {
    match suite {
        Suite::Partition => Ok(partition(ctx, opts)),
        Suite::NjSandwich => Ok(nj_sandwich(ctx, opts)),
        Suite::KjBounds => Ok(kj_bounds(ctx, opts)),
        Suite::TailBound => tail_bound(ctx),
        Suite::Identity => identity(ctx, opts),
        Suite::RemainderMagnitude => Ok(rj_magnitude(ctx)),
    }
}

pub fn run_suites(suites: &[Suite], ctx: &EvalContext, opts: &CheckOptions) -> Result<Vec<SuiteReport>> {
    suites.iter().map(|&s| run_suite(s, ctx, opts)).collect()
}

fn partition(ctx: &EvalContext, opts: &CheckOptions) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Partition);
    let limit = floor(ctx.x()).min(BigInt::from(opts.partition_limit));
    let mut expected_first = BigInt::zero();
    for cell in cells(ctx) {
        r.expect(cell.first == expected_first, || {
            format!("cell ({}, {}) starts at {} instead of {}", cell.h, cell.k, cell.first, expected_first)
        });
        let first_r = Rational::from_integer(cell.first.clone());
        r.expect(cell.lo < first_r, || format!("cell ({}, {}): lo not below first", cell.h, cell.k));
        if cell.first > limit {
            break;
        }
        let stop = match &cell.last {
            Some(l) => l.clone().min(limit.clone()),
            None => limit.clone(),
        };
        let mut n = cell.first.clone();
        while n <= stop {
            let (h, k) = ctx.floors_at(&n);
            r.expect(h == cell.h && k == cell.k, || {
                format!("n = {n}: floors ({h}, {k}) but cell ({}, {})", cell.h, cell.k)
            });
            n += 1u32;
        }
        match &cell.last {
            Some(l) => expected_first = l + 1u32,
            None => break,
        }
    }
    r
}

fn j_upper(ctx: &EvalContext, opts: &CheckOptions) -> u64 {
    floor(ctx.y()).to_u64().unwrap_or(u64::MAX).min(opts.j_limit)
}

fn nj_sandwich(ctx: &EvalContext, opts: &CheckOptions) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::NjSandwich);
    for j in 1..=j_upper(ctx, opts) {
        let v = nj_violation(ctx, opts.kj, j);
        r.expect(v.is_none(), || v.unwrap_or_default());
    }
    r
}

/// `⌊x/(K_j+1) − a⌋ ≤ N_j ≤ ⌊x/K_j − a⌋` for one `j ≤ y`.
fn nj_violation(ctx: &EvalContext, kj_fn: KjFn, j: u64) -> Option<String> {
    let kj = kj_fn(j, &(ctx.x() / ctx.c()));
    let Some(nj) = n_j(j, ctx) else {
        return Some(format!("N_{j} missing although j <= y"));
    };
    let low = ctx.qa().last_with(&(&kj + 1u32));
    let ok_high = kj.is_positive() && nj <= ctx.qa().last_with(&kj);
    (low > nj || !ok_high).then(|| format!("j = {j}: K_j = {kj}, N_j = {nj}"))
}

/// The bounds on `K_j(x/c)` for one `j`.
fn kj_violations(ctx: &EvalContext, kj_fn: KjFn, j: u64) -> Vec<String> {
    let mut out = Vec::new();
    let t = ctx.x() / ctx.c();
    let jb = BigInt::from(j);
    let jr = Rational::from_integer(jb.clone());
    let kj = kj_fn(j, &t);
    let kr = Rational::from_integer(kj.clone());
    let s = &jr * &t;
    // defining bracket: (K−j)K ≤ jt < (K+1−j)(K+1)
    let bracket = Rational::from_integer((&kj - &jb) * &kj) <= s
        && s < Rational::from_integer((&kj + 1u32 - &jb) * (&kj + 1u32))
        && kj >= jb;
    if !bracket {
        out.push(format!("j = {j}: K_j = {kj} violates its definition"));
    }
    // K − j ≤ √s
    let d = &kr - &jr;
    let upper = d.is_negative() || &d * &d <= s;
    // √s < K − j/2 + 1
    let e = &kr - &jr / Rational::from_integer(BigInt::from(2u8)) + Rational::one();
    let lower = e.is_positive() && &e * &e > s;
    if !(upper && lower) {
        out.push(format!("j = {j}: K_j = {kj} outside (sqrt(jx/c)+j/2-1, sqrt(jx/c)+j]"));
    }
    if jb <= floor(ctx.y()) && kr > ctx.x() / ctx.a() {
        out.push(format!("j = {j}: K_j = {kj} > x/a"));
    }
    let half_t = &t / Rational::from_integer(BigInt::from(2u8));
    if kj_fn(j, &half_t) > kj {
        out.push(format!("j = {j}: K_j(x/2c) > K_j(x/c)"));
    }
    out
}

fn kj_bounds(ctx: &EvalContext, opts: &CheckOptions) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::KjBounds);
    for j in 1..=opts.j_limit.max(1) {
        let v = kj_violations(ctx, opts.kj, j);
        r.checked += 4;
        r.failed += v.len() as u64;
        for f in v {
            if r.failures.len() < 20 {
                r.failures.push(f);
            }
        }
    }
    r
}

/// Every explicit inequality at one `j` and one tail cutoff `J > 1`: the
/// `N_j` sandwich (when `j ≤ y`), the bounds on `K_j` and the tail bound.
/// Returns the violations found.
pub fn inequalities_at(ctx: &EvalContext, kj_fn: KjFn, j: u64, big_j: &Rational) -> Result<Vec<String>> {
    let mut out = kj_violations(ctx, kj_fn, j);
    if BigInt::from(j) <= floor(ctx.y()) {
        out.extend(nj_violation(ctx, kj_fn, j));
    }
    let rep = check_tail_bound(ctx, big_j)?;
    if !rep.holds {
        out.push(format!("J = {big_j}: sum = {} not below {}", to_f64(&rep.lhs), rep.bound));
    }
    Ok(out)
}

/// The cutoffs `J` tried by the tail-bound suite.
pub fn tail_cutoffs() -> [Rational; 6] {
    [ratio(3, 2), ratio(2, 1), ratio(3, 1), ratio(5, 1), ratio(10, 1), ratio(100, 1)]
}

fn tail_bound(ctx: &EvalContext) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::TailBound);
    for big_j in tail_cutoffs() {
        let rep = check_tail_bound(ctx, &big_j)?;
        r.expect(rep.holds, || {
            format!("J = {big_j}: sum = {} not below {}", to_f64(&rep.lhs), rep.bound)
        });
    }
    Ok(r)
}

fn identity(ctx: &EvalContext, opts: &CheckOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Identity);
    if ctx.x() > &Rational::from_integer(BigInt::from(opts.identity_x_limit)) {
        r.notes.push(format!("skipped: x above {}", opts.identity_x_limit));
        return Ok(r);
    }
    let y_minus_one = ctx.y() - Rational::one();
    let j_max = if y_minus_one < Rational::one() { 0 } else { floor(&y_minus_one).to_u64().unwrap_or(0) };
    let mut forms = ClosedForms::new(ctx, j_max, opts.eps)?;
    let (a, c) = (ctx.a(), ctx.c());
    if ctx.x() >= &(a * a / c) {
        let closed = forms.w0()?;
        let direct = w0_direct(ctx, opts.eps)?;
        r.expect(closed.overlaps(&direct), || format!("W_0: closed {closed} vs direct {direct}"));
    } else {
        r.notes.push("W_0 closed form not applicable: x < a^2/c".into());
    }
    let direct = wj_direct_all(ctx);
    let zero = Rational::zero();
    for j in 1..=j_max {
        let closed = forms.wj(j)?;
        let exact = direct.get(&j).unwrap_or(&zero);
        r.expect(closed.contains(exact), || format!("W_{j}: closed {closed} vs exact {exact}"));
    }
    Ok(r)
}

fn rj_magnitude(ctx: &EvalContext) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::RemainderMagnitude);
    let rep = check_rj_magnitude(ctx);
    for q in &rep.ratios {
        r.expect(q.ratio.is_finite(), || format!("j = {}: ratio not finite", q.j));
    }
    r.expect(rep.low_ratio.is_finite(), || "R_0 + R_1 ratio not finite".into());
    r.notes.push(format!(
        "max ratio {:.6} over {} values of j, R_0+R_1 ratio {:.6} (empirical, no proven constant)",
        rep.max_ratio,
        rep.ratios.len(),
        rep.low_ratio
    ));
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::int;

    fn broken_kj(j: u64, t: &Rational) -> BigInt {
        k_j(j, t) + 1u32
    }

    #[test]
    fn all_suites_pass_on_small_instance() {
        let ctx = EvalContext::from_values(int(1), ratio(5, 2), int(2000)).unwrap();
        let opts = CheckOptions { j_limit: 300, ..CheckOptions::default() };
        for rep in run_suites(&Suite::ALL, &ctx, &opts).unwrap() {
            assert!(rep.passed(), "{:?}: {:?}", rep.suite, rep.failures);
            assert!(rep.checked > 0 || rep.suite == Suite::RemainderMagnitude);
        }
    }

    #[test]
    fn degenerate_instance_passes() {
        let ctx = EvalContext::from_values(int(1), int(2), ratio(1, 2)).unwrap();
        let opts = CheckOptions { j_limit: 50, ..CheckOptions::default() };
        for rep in run_suites(&Suite::ALL, &ctx, &opts).unwrap() {
            assert!(rep.passed(), "{:?}: {:?}", rep.suite, rep.failures);
        }
    }

    #[test]
    fn corrupted_kj_is_caught() {
        let ctx = EvalContext::from_values(int(1), int(2), int(1000)).unwrap();
        let opts = CheckOptions { kj: broken_kj, j_limit: 100, ..CheckOptions::default() };
        assert!(!run_suite(Suite::KjBounds, &ctx, &opts).unwrap().passed());
    }

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::from_name(s.name()), Some(s));
        }
    }
}
