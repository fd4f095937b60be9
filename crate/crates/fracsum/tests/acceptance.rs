//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use fracsum::scan::{run_scan, Format, ScanConfig};
use fracsum_core::asymptotics::{
    check_rj_magnitude, fit_exponent, main_constant_value, remainder, residuals, rj_range_end, series_partial,
    theorem_a_cutoff_floor, Which,
};
use fracsum_core::blocks::{k_j, w_block, w_block_with_stats};
use fracsum_core::checks::{inequalities_at, run_suite, CheckOptions, Suite};
use fracsum_core::directsum::{w_direct, EvalContext, Params};
use fracsum_core::exactnum::{floor, int, ratio, to_f64, zeta_three_halves};
use fracsum_core::periodic::{delta_report, PeriodicFn};
use fracsum_core::Rational;
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// `0 < a < b ≤ 5` with small denominators.
fn random_params(rng: &mut StdRng) -> Params {
    loop {
        let da: i64 = rng.random_range(1..=12);
        let db: i64 = rng.random_range(1..=12);
        let a = ratio(rng.random_range(1..=5 * da), da);
        let b = ratio(rng.random_range(1..=5 * db), db);
        if a < b {
            return Params::new(a, b).expect("valid");
        }
    }
}

/// Log-uniform in `[lo, hi]`, as a rational with denominator at most 10.
fn random_x(rng: &mut StdRng, lo: f64, hi: f64) -> Rational {
    let den: i64 = rng.random_range(1..=10);
    let v = (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp();
    let num = ((v * den as f64).round() as i64).clamp((lo * den as f64).ceil() as i64, (hi * den as f64) as i64);
    ratio(num, den)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let mut bad = Vec::new();
    for _ in 0..200 {
        let ctx = EvalContext::new(random_params(&mut rng), random_x(&mut rng, 1.0, 1e6)).unwrap();
        let d = w_direct(&ctx, 1e-20).map_err(|e| e.to_string())?;
        let b = w_block(&ctx, 1e-20).map_err(|e| e.to_string())?;
        if !d.overlaps(&b) || d.err() > 1e-20 || b.err() > 1e-20 {
            bad.push(format!("a={} b={} x={}: {d} vs {b}", ctx.a(), ctx.b(), ctx.x()));
        }
    }
    if bad.is_empty() {
        Ok("200/200 enclosures overlap".into())
    } else {
        Err(format!("{}/200 disagree, first: {}", bad.len(), bad[0]))
    }
}

fn identity_suite() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let opts = CheckOptions::default();
    let mut checks = 0;
    for i in 0..100 {
        let ctx = EvalContext::new(random_params(&mut rng), random_x(&mut rng, 1.0, 1e4)).unwrap();
        let rep = run_suite(Suite::Identity, &ctx, &opts).map_err(|e| e.to_string())?;
        if !rep.passed() {
            return Err(format!("instance {i} (a={} b={} x={}): {:?}", ctx.a(), ctx.b(), ctx.x(), rep.failures));
        }
        checks += rep.checked;
    }
    Ok(format!("100/100 instances, {checks} closed-form comparisons"))
}

fn inequality_suite() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let mut violations = Vec::new();
    for _ in 0..1000 {
        let ctx = EvalContext::new(random_params(&mut rng), random_x(&mut rng, 1.0, 1e5)).unwrap();
        let y = floor(ctx.y()).to_u64().unwrap_or(u64::MAX).max(1);
        let j = rng.random_range(1..=y.min(100_000));
        let big_j = ratio(rng.random_range(101..=10_000), 100);
        let v = inequalities_at(&ctx, k_j, j, &big_j).map_err(|e| e.to_string())?;
        violations.extend(v.into_iter().map(|s| format!("a={} b={} x={}: {s}", ctx.a(), ctx.b(), ctx.x())));
    }
    if violations.is_empty() {
        Ok("1000 draws, 0 violations".into())
    } else {
        Err(format!("{} violations, first: {}", violations.len(), violations[0]))
    }
}

fn integer_gap() -> Outcome {
    let xs = [int(1000), ratio(123_457, 10), int(1_000_000), ratio(98_765_431, 7)];
    let mut computed = 0;
    for (a, b) in [(int(1), int(2)), (int(1), int(3)), (ratio(1, 2), ratio(5, 2))] {
        for x in &xs {
            let ctx = EvalContext::from_values(a.clone(), b.clone(), x.clone()).unwrap();
            let top = rj_range_end(&ctx).max(theorem_a_cutoff_floor(&ctx));
            for j in 0..=top {
                let r = remainder(&ctx, j);
                if !r.is_zero() {
                    return Err(format!("a={a} b={b} x={x}: R_{j} = {r}"));
                }
                computed += 1;
            }
            let s = residuals(&ctx, 1e-15).map_err(|e| e.to_string())?;
            if !s.rj.is_zero() || s.residual_a.lower() != s.residual_b.lower() || s.residual_a.upper() != s.residual_b.upper()
            {
                return Err(format!("a={a} b={b} x={x}: residual_A != residual_B"));
            }
        }
    }
    Ok(format!("{computed} values of R_j are 0, residual_A = residual_B at 12 points"))
}

fn series_identity() -> Outcome {
    let target = main_constant_value(1e-30).map_err(|e| e.to_string())?;
    let mut dists = Vec::new();
    for big_j in [100, 1000, 10_000] {
        let s = series_partial(big_j, 1e-12).map_err(|e| e.to_string())?;
        dists.push((to_f64(&s.midpoint()) - to_f64(&target.midpoint())).abs() + s.err() + target.err());
    }
    if dists[2] > 0.05 {
        return Err(format!("|S(10^4) - (2/pi) zeta(3/2)| = {}", dists[2]));
    }
    if !(dists[0] > dists[1] && dists[1] > dists[2]) {
        return Err(format!("distances not decreasing: {dists:?}"));
    }
    // independent check: Kahan sum of n^{-3/2} for n ≤ 10^8 plus the
    // integral bracket 2/√(N+1) ≤ tail ≤ 2/√N
    const N: u64 = 100_000_000;
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for n in (1..=N).rev() {
        let nf = n as f64;
        let t = 1.0 / (nf * nf.sqrt()) - comp;
        let u = sum + t;
        comp = (u - sum) - t;
        sum = u;
    }
    let lo = sum + 2.0 / ((N + 1) as f64).sqrt();
    let hi = sum + 2.0 / (N as f64).sqrt();
    let zeta = zeta_three_halves(1e-30).map_err(|e| e.to_string())?;
    let z = to_f64(&zeta.midpoint());
    if z < lo - 1e-10 || z > hi + 1e-10 || hi - lo > 1e-10 {
        return Err(format!("zeta(3/2) = {z} outside [{lo}, {hi}]"));
    }
    Ok(format!(
        "distance {:.4} / {:.4} / {:.4} at J = 10^2/10^3/10^4, zeta(3/2) = {z:.12} within [{lo:.12}, {hi:.12}]",
        dists[0], dists[1], dists[2]
    ))
}

fn envelope() -> Outcome {
    let mut parts = Vec::new();
    for (a, b, limit) in [(int(1), int(2), 0.45), (int(1), ratio(5, 2), 0.5)] {
        let cfg = ScanConfig {
            params: Params::new(a.clone(), b.clone()).unwrap(),
            x_start: int(10_000),
            x_stop: int(1_000_000_000),
            grid: 25,
            eps: 1e-15,
            threads: 4,
            format: Format::Csv,
        };
        let samples = run_scan(&cfg).map_err(|e| e.to_string())?;
        let fit = fit_exponent(&samples, Which::B).map_err(|e| e.to_string())?;
        if fit.slope > limit {
            return Err(format!("a={a} b={b}: slope {:.4} > {limit} ({} points)", fit.slope, fit.used));
        }
        parts.push(format!("a={a} b={b}: slope {:.4} <= {limit} ({} points)", fit.slope, fit.used));
    }
    Ok(parts.join("; "))
}

fn rj_regression() -> Outcome {
    let text = include_str!("data/rj_ceiling.txt");
    let ceiling: f64 = text
        .lines()
        .find(|l| !l.starts_with('#') && !l.trim().is_empty())
        .and_then(|l| l.trim().parse().ok())
        .ok_or("unreadable ceiling file")?;
    let mut max: f64 = 0.0;
    for x in [100_000, 1_000_000, 10_000_000] {
        let ctx = EvalContext::from_values(int(1), ratio(5, 2), int(x)).unwrap();
        max = max.max(check_rj_magnitude(&ctx).max_ratio);
    }
    if max <= ceiling * (1.0 + 1e-12) {
        Ok(format!("max ratio {max:.6} <= stored ceiling {ceiling:.6}"))
    } else {
        Err(format!("max ratio {max} above stored ceiling {ceiling}"))
    }
}

fn periodic_application() -> Outcome {
    let f = PeriodicFn::character_mod_4();
    let mut shown = Vec::new();
    for x in [1000, 10_000, 100_000] {
        let r = delta_report(&f, &int(x), 1e-15).map_err(|e| e.to_string())?;
        if !r.agrees() {
            return Err(format!("x={x}: {} vs {}", r.delta_direct, r.delta_via_v));
        }
        shown.push(format!("Δ({x}) = {:.9}", r.delta_via_v.value_f64()));
    }
    Ok(shown.join(", "))
}

fn performance() -> Outcome {
    let params = Params::new(int(1), int(2)).unwrap();
    let mut ratios = Vec::new();
    for e in 3..=8u32 {
        let ctx = EvalContext::new(params.clone(), Rational::from_integer(BigInt::from(10u64.pow(e)))).unwrap();
        let (block, stats) = w_block_with_stats(&ctx, 1e-15).map_err(|e| e.to_string())?;
        let r = stats.cells as f64 / 10f64.powf(e as f64 / 2.0);
        if !(0.5..=4.0).contains(&r) {
            return Err(format!("x=1e{e}: cells/sqrt(x) = {r}"));
        }
        if e <= 7 {
            let direct = w_direct(&ctx, 1e-15).map_err(|e| e.to_string())?;
            if !direct.overlaps(&block) {
                return Err(format!("x=1e{e}: direct {direct} vs block {block}"));
            }
        }
        ratios.push(format!("{r:.3}"));
    }
    let ctx = EvalContext::new(params, Rational::from_integer(BigInt::from(10u64.pow(12)))).unwrap();
    let start = Instant::now();
    let (w, stats) = w_block_with_stats(&ctx, 1e-15).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let r = stats.cells as f64 / 1e6;
    if took > Duration::from_secs(300) || !(0.5..=4.0).contains(&r) {
        return Err(format!("x=1e12: {took:?}, cells/sqrt(x) = {r}"));
    }
    Ok(format!(
        "x=1e12 in {:.1}s, W = {:.6}, cells/sqrt(x) = {r:.3}; 1e3..1e8: {}",
        took.as_secs_f64(),
        w.value_f64(),
        ratios.join(" ")
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("closed-form identities", identity_suite),
        ("explicit inequalities", inequality_suite),
        ("integer gap degeneration", integer_gap),
        ("series identity", series_identity),
        ("residual envelope", envelope),
        ("R_j magnitude regression", rj_regression),
        ("periodic application", periodic_application),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {} ({name}): {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {msg} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
