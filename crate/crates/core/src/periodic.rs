//! The error term `Δ(x)` in `G(x) = Σ_{n≤x} f(n)⌊x/n⌋ = Cx − Δ(x)` for a
//! mean-zero periodic `f`, computed from `G` directly and as
//! `Σ_k F(k)·V(x/q; k/q, (k+1)/q)`.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::blocks::v_block;
use crate::directsum::EvalContext;
use crate::exactnum::{floor, parse_rational, to_f64, HarmonicTail};
use crate::{BoundedReal, Error, Rational, Result};

/// A function of period `q` with `f(1) + … + f(q) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicFn {
    q: usize,
    values: Vec<Rational>,
    summatory: Vec<Rational>,
}

impl PeriodicFn {
    /// `values[k−1] = f(k)` for `1 ≤ k ≤ q`.
    pub fn new(values: Vec<Rational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("period must be at least 1".into()));
        }
        let mut summatory = Vec::with_capacity(values.len());
        let mut acc = Rational::zero();
        for v in &values {
            acc += v;
            summatory.push(acc.clone());
        }
        if !acc.is_zero() {
            return Err(Error::NotMeanZero);
        }
        Ok(PeriodicFn { q: values.len(), values, summatory })
    }

    /// Two lines: the period `q`, then `q` whitespace-separated rationals.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let q_line = lines.next().ok_or_else(|| Error::Parse("missing period line".into()))?;
        let q: usize = q_line.parse().map_err(|_| Error::Parse(format!("period {q_line:?}")))?;
        let values_line = lines.next().unwrap_or("");
        let values = values_line
            .split(|ch: char| ch.is_whitespace() || ch == ',')
            .filter(|t| !t.is_empty())
            .map(parse_rational)
            .collect::<Result<Vec<_>>>()?;
        if values.len() != q {
            return Err(Error::Parse(format!("expected {q} values, found {}", values.len())));
        }
        PeriodicFn::new(values)
    }

    /// The non-principal character modulo 4: `(1, 0, −1, 0)`.
    pub fn character_mod_4() -> Self {
        PeriodicFn::new([1, 0, -1, 0].map(|v| Rational::from_integer(BigInt::from(v))).to_vec())
            .expect("mean zero")
    }

    /// The non-principal character modulo 3: `(1, −1, 0)`.
    pub fn character_mod_3() -> Self {
        PeriodicFn::new([1, -1, 0].map(|v| Rational::from_integer(BigInt::from(v))).to_vec())
            .expect("mean zero")
    }

    pub fn period(&self) -> usize {
        self.q
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// `F(k) = f(1) + … + f(k)` for `1 ≤ k ≤ q`.
    pub fn summatory(&self) -> &[Rational] {
        &self.summatory
    }

    /// `f(n)` for `n ≥ 1`.
    pub fn at(&self, n: u64) -> &Rational {
        &self.values[((n - 1) % self.q as u64) as usize]
    }

    fn q_rational(&self) -> Rational {
        Rational::from_integer(BigInt::from(self.q))
    }
}

fn check(x: &Rational, eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidEps);
    }
    if !x.is_positive() {
        return Err(Error::NonPositiveX);
    }
    Ok(())
}

/// `Σ_{k=1}^{q} F(k)·V(x/q; k/q, (k+1)/q)`, each `V` from the block evaluator.
pub fn delta_via_v(f: &PeriodicFn, x: &Rational, eps: f64) -> Result<BoundedReal> {
    check(x, eps)?;
    let q = f.q_rational();
    let xq = x / &q;
    let mut total = BoundedReal::zero();
    let weights = f.summatory().iter().map(|s| to_f64(s).abs() + 1.0).sum::<f64>();
    for (k, big_f) in f.summatory().iter().enumerate() {
        if big_f.is_zero() {
            continue;
        }
        let k = Rational::from_integer(BigInt::from(k + 1));
        let ctx = EvalContext::from_values(&k / &q, (&k + Rational::one()) / &q, xq.clone())?;
        let share = eps / (2.0 * weights);
        let v = v_block(&ctx, share)?;
        total = &total + &v.mul_rational(big_f);
    }
    Ok(total)
}

/// `C = Σ_{n≥1} f(n)/n`, grouped by periods as
/// `Σ_{m≥0} Σ_k (f(k)/q) / (m + k/q)`.
pub fn dirichlet_constant(f: &PeriodicFn, eps: f64) -> Result<BoundedReal> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidEps);
    }
    let q = f.q_rational();
    let tail = HarmonicTail::new(f.values().iter().enumerate().map(|(k, v)| {
        (v / &q, Rational::from_integer(BigInt::from(k + 1)) / &q)
    }));
    Ok(tail.sum_from_within(&BigInt::zero(), eps))
}

/// `G(x) = Σ_{n≤x} f(n)⌊x/n⌋` exactly, in `O(x)` steps.
pub fn summatory_g(f: &PeriodicFn, x: &Rational) -> Result<Rational> {
    let last = floor(x).to_u64().ok_or_else(|| Error::Precondition("x too large for G".into()))?;
    let den = f.values().iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let scaled: Vec<BigInt> = f.values().iter().map(|v| v.numer() * (&den / v.denom())).collect();
    let mut total = BigInt::zero();
    for n in 1..=last {
        let w = &scaled[((n - 1) % f.q as u64) as usize];
        if w.is_zero() {
            continue;
        }
        let nb = BigInt::from(n);
        total += w * x.numer().div_floor(&(x.denom() * nb));
    }
    Ok(Rational::new(total, den))
}

/// `Δ(x) = C·x − G(x)`.
pub fn delta_from_g(f: &PeriodicFn, x: &Rational, eps: f64) -> Result<BoundedReal> {
    check(x, eps)?;
    let g = summatory_g(f, x)?;
    let c = dirichlet_constant(f, eps / (2.0 * to_f64(x).max(1.0)))?;
    let cx = c.mul_rational(x);
    let g_fixed = BoundedReal::from_rational(&g, cx.precision());
    Ok(&cx - &g_fixed)
}

/// Both evaluations of `Δ(x)` side by side.
#[derive(Clone, Debug)]
pub struct DeltaReport {
    pub x: Rational,
    pub c: BoundedReal,
    pub g: Rational,
    pub delta_direct: BoundedReal,
    pub delta_via_v: BoundedReal,
}

impl DeltaReport {
    pub fn agrees(&self) -> bool {
        self.delta_direct.overlaps(&self.delta_via_v)
    }
}

pub fn delta_report(f: &PeriodicFn, x: &Rational, eps: f64) -> Result<DeltaReport> {
    check(x, eps)?;
    Ok(DeltaReport {
        x: x.clone(),
        c: dirichlet_constant(f, eps)?,
        g: summatory_g(f, x)?,
        delta_direct: delta_from_g(f, x, eps)?,
        delta_via_v: delta_via_v(f, x, eps)?,
    })
}

/// `|Δ(x)|·q / (Σ|F(k)|·√x)` at one grid point.
#[derive(Clone, Debug)]
pub struct DeltaBoundPoint {
    pub x: Rational,
    pub delta: BoundedReal,
    pub ratio: f64,
    /// `q ≤ x^{1/6}/22`, i.e. `(22q)⁶ ≤ x`.
    pub in_range: bool,
}

#[derive(Clone, Debug)]
pub struct DeltaBoundReport {
    pub points: Vec<DeltaBoundPoint>,
    /// Maximum ratio over points that satisfy the range condition.
    pub max_ratio: Option<f64>,
}

/// Evaluates the normalised error term over a grid, flagging points outside
/// `q ≤ x^{1/6}/22`.
pub fn delta_bound_check(f: &PeriodicFn, grid: &[Rational], eps: f64) -> Result<DeltaBoundReport> {
    let weight: f64 = f.summatory().iter().map(|s| to_f64(s).abs()).sum();
    let floor_q = Rational::from_integer(BigInt::from(22 * f.q as u64));
    let mut points = Vec::with_capacity(grid.len());
    for x in grid {
        let delta = delta_via_v(f, x, eps)?;
        let ratio = if weight == 0.0 {
            0.0
        } else {
            delta.value_f64().abs() * f.q as f64 / (weight * libm::sqrt(to_f64(x)))
        };
        let mut p6 = Rational::one();
        for _ in 0..6 {
            p6 *= &floor_q;
        }
        points.push(DeltaBoundPoint { x: x.clone(), delta, ratio, in_range: &p6 <= x });
    }
    let max_ratio = points.iter().filter(|p| p.in_range).map(|p| p.ratio).reduce(f64::max);
    Ok(DeltaBoundReport { points, max_ratio })
}
