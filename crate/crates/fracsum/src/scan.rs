//! Residual scans over geometric grids and their CSV/JSON encoding.

use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use fracsum_core::asymptotics::{fit_power_law, residuals, Fit, ResidualSample, Which};
use fracsum_core::directsum::{EvalContext, Params};
use fracsum_core::exactnum::{from_f64, to_f64};
use fracsum_core::{BoundedReal, Error, Rational};
use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Column order of the scan table.
pub const COLUMNS: [&str; 16] = [
    "x_num",
    "x_den",
    "a",
    "b",
    "c",
    "J",
    "W_value",
    "W_err",
    "main_value",
    "main_err",
    "RJ_value",
    "RJ_err",
    "residual_A",
    "residual_B",
    "hypothesis_A_ok",
    "hypothesis_B_ok",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub params: Params,
    pub x_start: Rational,
    pub x_stop: Rational,
    pub grid: usize,
    pub eps: f64,
    pub threads: usize,
    pub format: Format,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.x_start < self.x_stop) {
            return Err(CliError::precondition("requires x-start < x-stop"));
        }
        if self.x_start <= Rational::zero() {
            return Err(CliError::precondition("requires x-start > 0"));
        }
        if self.grid < 2 {
            return Err(CliError::precondition("requires grid >= 2"));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(CliError::precondition("requires eps > 0"));
        }
        Ok(())
    }
}

/// `grid` points with equal logarithmic spacing; the endpoints are exact and
/// interior points are rounded to multiples of 1/1000.
pub fn geometric_grid(start: &Rational, stop: &Rational, grid: usize) -> Vec<Rational> {
    let (lo, hi) = (to_f64(start), to_f64(stop));
    let ratio = (hi / lo).ln();
    let mut out = vec![start.clone()];
    for i in 1..grid.saturating_sub(1) {
        let v = lo * (ratio * i as f64 / (grid - 1) as f64).exp();
        let milli = (v * 1000.0).round();
        let r = from_f64(milli).expect("finite grid point") / Rational::from_integer(BigInt::from(1000));
        if &r > out.last().expect("nonempty") && &r < stop {
            out.push(r);
        }
    }
    out.push(stop.clone());
    out
}

/// One output row; the field names are the column names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub x_num: String,
    pub x_den: String,
    pub a: String,
    pub b: String,
    pub c: String,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "W_value")]
    pub w_value: String,
    #[serde(rename = "W_err")]
    pub w_err: f64,
    pub main_value: String,
    pub main_err: f64,
    #[serde(rename = "RJ_value")]
    pub rj_value: String,
    #[serde(rename = "RJ_err")]
    pub rj_err: f64,
    #[serde(rename = "residual_A")]
    pub residual_a: String,
    #[serde(rename = "residual_B")]
    pub residual_b: String,
    #[serde(rename = "hypothesis_A_ok")]
    pub hypothesis_a_ok: bool,
    #[serde(rename = "hypothesis_B_ok")]
    pub hypothesis_b_ok: bool,
}

/// Decimal places printed for a given error budget.
pub fn digits_for(eps: f64) -> usize {
    ((-eps.log10()).ceil() as i64 + 3).clamp(6, 60) as usize
}

fn rational_decimal(r: &Rational, digits: usize) -> String {
    BoundedReal::from_rational(r, 256 + 4 * digits as u32).to_decimal(digits)
}

pub fn row_from_sample(s: &ResidualSample, params: &Params, eps: f64) -> Row {
    let d = digits_for(eps);
    Row {
        x_num: s.x.numer().to_string(),
        x_den: s.x.denom().to_string(),
        a: params.a().to_string(),
        b: params.b().to_string(),
        c: params.c().to_string(),
        j: s.cutoff,
        w_value: s.w.to_decimal(d),
        w_err: s.w.err(),
        main_value: s.main.to_decimal(d),
        main_err: s.main.err(),
        rj_value: rational_decimal(&s.rj, d),
        rj_err: 0.0,
        residual_a: s.residual_a.to_decimal(d),
        residual_b: s.residual_b.to_decimal(d),
        hypothesis_a_ok: s.hypothesis_a_ok,
        hypothesis_b_ok: s.hypothesis_b_ok,
    }
}

/// Evaluates every grid point, in parallel, returning samples in `x` order.
pub fn run_scan(cfg: &ScanConfig) -> Result<Vec<ResidualSample>, CliError> {
    cfg.validate()?;
    let grid = geometric_grid(&cfg.x_start, &cfg.x_stop, cfg.grid);
    let results: Vec<Mutex<Option<Result<ResidualSample, Error>>>> =
        grid.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let threads = cfg.threads.clamp(1, grid.len());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= grid.len() {
                    break;
                }
                let r = EvalContext::new(cfg.params.clone(), grid[i].clone())
                    .and_then(|ctx| residuals(&ctx, cfg.eps));
                *results[i].lock().expect("unpoisoned") = Some(r);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().expect("unpoisoned").expect("every point evaluated"))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::from)
}

pub fn write_rows<W: Write>(rows: &[Row], format: Format, out: W) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if rows.is_empty() {
                w.write_record(COLUMNS).map_err(CliError::io)?;
            }
            for r in rows {
                w.serialize(r).map_err(CliError::io)?;
            }
            w.flush().map_err(CliError::io)?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows).map_err(CliError::io)?;
            writeln!(out).map_err(CliError::io)?;
        }
    }
    Ok(())
}

/// Points `(x, |residual|)` usable for a fit, read from a scan CSV.
#[derive(Clone, Debug)]
pub struct FitInput {
    pub points: Vec<(f64, f64)>,
    pub rows: usize,
    pub all_zero: bool,
}

pub fn read_fit_input<R: Read>(input: R, which: Which) -> Result<FitInput, CliError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(CliError::io)?.clone();
    let residual = match which {
        Which::A => "residual_A",
        Which::B => "residual_B",
    };
    let needed = ["x_num", "x_den", residual, "W_err", "main_err", "RJ_err"];
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(needed) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::usage(format!("scan file is missing column {name}")))?;
    }
    let mut points = Vec::new();
    let mut rows = 0;
    let mut all_zero = true;
    for record in reader.records() {
        let record = record.map_err(CliError::io)?;
        rows += 1;
        let field = |i: usize| record.get(idx[i]).unwrap_or("");
        let num = |i: usize| -> Result<f64, CliError> {
            field(i)
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad number {:?} in column {}", field(i), needed[i])))
        };
        let x = num(0)? / num(1)?;
        let value = num(2)?.abs();
        let err = num(3)? + num(4)? + num(5)?;
        if value != 0.0 {
            all_zero = false;
        }
        if value > 10.0 * err {
            points.push((x, value));
        }
    }
    Ok(FitInput { points, rows, all_zero })
}

pub fn fit_input(input: &FitInput) -> Result<Fit, CliError> {
    if input.all_zero && input.rows > 0 {
        return Err(CliError::from(Error::DegenerateResiduals));
    }
    fit_power_law(&input.points).map_err(CliError::from)
}
