//! Wall-clock comparison of the direct and block evaluators.

use std::time::{Duration, Instant};

use fracsum_core::blocks::w_block_with_stats;
use fracsum_core::directsum::{w_direct, EvalContext};
use fracsum_core::exactnum::to_f64;
use fracsum_core::{BoundedReal, Rational, Result};
use num_bigint::BigInt;

/// The direct evaluator is only run up to this `x`.
pub const DIRECT_LIMIT: u64 = 10_000_000;

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub x: Rational,
    pub block_time: Duration,
    pub block: BoundedReal,
    pub cells: u64,
    pub cells_per_sqrt_x: f64,
    /// `None` when `x` is above [`DIRECT_LIMIT`].
    pub direct: Option<(Duration, BoundedReal)>,
}

impl BenchRow {
    pub fn agrees(&self) -> Option<bool> {
        self.direct.as_ref().map(|(_, d)| d.overlaps(&self.block))
    }
}

pub fn bench_point(ctx: &EvalContext, eps: f64) -> Result<BenchRow> {
    let start = Instant::now();
    let (block, stats) = w_block_with_stats(ctx, eps)?;
    let block_time = start.elapsed();
    let direct = if ctx.x() <= &Rational::from_integer(BigInt::from(DIRECT_LIMIT)) {
        let start = Instant::now();
        let d = w_direct(ctx, eps)?;
        Some((start.elapsed(), d))
    } else {
        None
    };
    Ok(BenchRow {
        x: ctx.x().clone(),
        block_time,
        block,
        cells: stats.cells,
        cells_per_sqrt_x: stats.cells as f64 / to_f64(ctx.x()).sqrt(),
        direct,
    })
}
