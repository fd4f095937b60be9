//! Argument parsing and the subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracsum_core::asymptotics::Which;
use fracsum_core::blocks::{k_j, v_block, w_block};
use fracsum_core::checks::{run_suites, CheckOptions, Suite};
use fracsum_core::directsum::{v_direct, w_direct, EvalContext, Params};
use fracsum_core::exactnum::parse_rational;
use fracsum_core::periodic::{delta_bound_check, delta_report, PeriodicFn};
use fracsum_core::{BoundedReal, Rational};
use num_bigint::BigInt;

use crate::bench::{bench_point, DIRECT_LIMIT};
use crate::scan::{digits_for, fit_input, read_fit_input, row_from_sample, run_scan, write_rows, Format, ScanConfig};
use crate::{exit, CliError};

#[derive(Parser, Debug)]
#[command(name = "fracsum", version, about = "Fractional-part difference sums W(x;a,b) and V(x;a,b)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate W and V at one point.
    Eval(EvalArgs),
    /// Residuals against the main term over a geometric grid.
    Scan(ScanArgs),
    /// Fit the exponent of |residual| against x from a scan file.
    Fit(FitArgs),
    /// Run property suites on one instance.
    Check(CheckArgs),
    /// Time the direct and block evaluators.
    Bench(BenchArgs),
    /// Error term of the summatory function of f * 1 for periodic f.
    Periodic(PeriodicArgs),
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
pub struct Instance {
    #[arg(long, value_parser = rational)]
    pub a: Rational,
    #[arg(long, value_parser = rational)]
    pub b: Rational,
}

impl Instance {
    fn params(&self) -> Result<Params, CliError> {
        Params::new(self.a.clone(), self.b.clone()).map_err(CliError::from)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Direct,
    Block,
    Both,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub instance: Instance,
    #[arg(long, value_parser = rational)]
    pub x: Rational,
    #[arg(long, default_value_t = 1e-20)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    pub method: Method,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub instance: Instance,
    #[arg(long, value_parser = rational)]
    pub x_start: Rational,
    #[arg(long, value_parser = rational)]
    pub x_stop: Rational,
    #[arg(long, default_value_t = 25)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-15)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WhichArg {
    A,
    B,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Scan file in CSV form.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, ignore_case = true, default_value_t = WhichArg::B)]
    pub which: WhichArg,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub instance: Instance,
    #[arg(long, value_parser = rational)]
    pub x: Rational,
    /// Comma-separated suite names, or `all`.
    #[arg(long, default_value = "all")]
    pub suites: String,
    #[arg(long, default_value_t = 1e-20)]
    pub eps: f64,
    /// Largest j examined by the K_j and N_j suites.
    #[arg(long, default_value_t = 5000)]
    pub j_limit: u64,
    /// Replace K_j by K_j + 1 to confirm the suites notice.
    #[arg(long, hide = true)]
    pub corrupt_kj: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub instance: Instance,
    /// Comma-separated list of x values.
    #[arg(long, value_parser = rational, value_delimiter = ',', required = true)]
    pub x: Vec<Rational>,
    #[arg(long, default_value_t = 1e-10)]
    pub eps: f64,
}

#[derive(Args, Debug)]
pub struct PeriodicArgs {
    /// File with the period on the first line and the values on the second.
    #[arg(long, conflicts_with = "values")]
    pub file: Option<PathBuf>,
    /// Comma-separated values f(1), ..., f(q).
    #[arg(long, value_parser = rational, value_delimiter = ',')]
    pub values: Option<Vec<Rational>>,
    /// Comma-separated list of x values.
    #[arg(long, value_parser = rational, value_delimiter = ',', required = true)]
    pub x: Vec<Rational>,
    #[arg(long, default_value_t = 1e-12)]
    pub eps: f64,
    /// Report |Δ(x)|·q/(Σ|F(k)|·√x) instead of the two evaluations.
    #[arg(long)]
    pub bound: bool,
}

/// Parses `args` (including the program name) and runs the command, writing
/// human-readable output to `out` and diagnostics to `err`. Returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::OK,
                _ => exit::USAGE,
            };
            let _ = if code == exit::OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Eval(a) => cmd_eval(a, out),
        Command::Scan(a) => cmd_scan(a, out),
        Command::Fit(a) => cmd_fit(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Periodic(a) => cmd_periodic(a, out),
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::io(e)
}

fn show(v: &BoundedReal, eps: f64) -> String {
    format!("{} ± {:.3e}", v.to_decimal(digits_for(eps)), v.err())
}

fn cmd_eval(args: EvalArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let ctx = EvalContext::new(args.instance.params()?, args.x.clone())?;
    let eps = args.eps;
    writeln!(out, "a = {}, b = {}, c = {}, x = {}", ctx.a(), ctx.b(), ctx.c(), ctx.x()).map_err(io)?;
    let (mut wd, mut wb, mut vd, mut vb) = (None, None, None, None);
    if args.method != Method::Block {
        wd = Some(w_direct(&ctx, eps)?);
        vd = Some(v_direct(&ctx, eps)?);
    }
    if args.method != Method::Direct {
        wb = Some(w_block(&ctx, eps)?);
        vb = Some(v_block(&ctx, eps)?);
    }
    for (label, v) in [("W direct", &wd), ("W block ", &wb), ("V direct", &vd), ("V block ", &vb)] {
        if let Some(v) = v {
            writeln!(out, "{label} = {}", show(v, eps)).map_err(io)?;
        }
    }
    if let (Some(wd), Some(wb), Some(vd), Some(vb)) = (&wd, &wb, &vd, &vb) {
        let ok = wd.overlaps(wb) && vd.overlaps(vb);
        writeln!(out, "agreement: {}", if ok { "OK" } else { "MISMATCH" }).map_err(io)?;
        if !ok {
            return Ok(exit::SUITE_FAILURE);
        }
    }
    Ok(exit::OK)
}

fn cmd_scan(args: ScanArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = ScanConfig {
        params: args.instance.params()?,
        x_start: args.x_start,
        x_stop: args.x_stop,
        grid: args.grid,
        eps: args.eps,
        threads: args.threads,
        format: args.format,
    };
    let samples = run_scan(&cfg)?;
    let rows: Vec<_> = samples.iter().map(|s| row_from_sample(s, &cfg.params, cfg.eps)).collect();
    match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(io)?;
            write_rows(&rows, cfg.format, BufWriter::new(file))?;
            writeln!(out, "wrote {} rows to {}", rows.len(), path.display()).map_err(io)?;
        }
        None => write_rows(&rows, cfg.format, &mut *out)?,
    }
    Ok(exit::OK)
}

fn cmd_fit(args: FitArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let which = match args.which {
        WhichArg::A => Which::A,
        WhichArg::B => Which::B,
    };
    let file = File::open(&args.input).map_err(io)?;
    let input = read_fit_input(file, which)?;
    let fit = fit_input(&input)?;
    writeln!(
        out,
        "residual {:?}: slope {:.6}, intercept {:.6}, {} of {} points used",
        which, fit.slope, fit.intercept, fit.used, input.rows
    )
    .map_err(io)?;
    Ok(exit::OK)
}

fn broken_kj(j: u64, t: &Rational) -> BigInt {
    k_j(j, t) + 1u32
}

fn cmd_check(args: CheckArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let ctx = EvalContext::new(args.instance.params()?, args.x.clone())?;
    let suites: Vec<Suite> = if args.suites == "all" {
        Suite::ALL.to_vec()
    } else {
        args.suites
            .split(',')
            .map(|s| Suite::from_name(s.trim()).ok_or_else(|| CliError::usage(format!("unknown suite {s:?}"))))
            .collect::<Result<_, _>>()?
    };
    let mut opts = CheckOptions { eps: args.eps, j_limit: args.j_limit, ..CheckOptions::default() };
    if args.corrupt_kj {
        opts.kj = broken_kj;
    }
    let reports = run_suites(&suites, &ctx, &opts)?;
    let mut all_ok = true;
    for r in &reports {
        all_ok &= r.passed();
        let status = if r.passed() { "PASS" } else { "FAIL" };
        writeln!(out, "{status} {:<13} {} checks, {} failed: {}", r.suite.name(), r.checked, r.failed, r.suite.statement())
            .map_err(io)?;
        for f in &r.failures {
            writeln!(out, "    {f}").map_err(io)?;
        }
        for n in &r.notes {
            writeln!(out, "    note: {n}").map_err(io)?;
        }
    }
    Ok(if all_ok { exit::OK } else { exit::SUITE_FAILURE })
}

fn cmd_bench(args: BenchArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let params = args.instance.params()?;
    let xs = args.x;
    if xs.is_empty() {
        return Err(CliError::usage("bench needs at least one --x"));
    }
    writeln!(out, "{:>16} {:>12} {:>12} {:>10} {:>10} {:>6}", "x", "block_s", "direct_s", "cells", "cells/sqrtx", "agree")
        .map_err(io)?;
    let mut ok = true;
    for x in xs {
        let ctx = EvalContext::new(params.clone(), x)?;
        let row = bench_point(&ctx, args.eps)?;
        let direct = match &row.direct {
            Some((t, _)) => format!("{:.4}", t.as_secs_f64()),
            None => format!("skipped(>{DIRECT_LIMIT})"),
        };
        let agree = match row.agrees() {
            Some(true) => "yes",
            Some(false) => {
                ok = false;
                "NO"
            }
            None => "-",
        };
        writeln!(
            out,
            "{:>16} {:>12.4} {:>12} {:>10} {:>10.4} {:>6}",
            row.x.to_string(),
            row.block_time.as_secs_f64(),
            direct,
            row.cells,
            row.cells_per_sqrt_x,
            agree
        )
        .map_err(io)?;
    }
    Ok(if ok { exit::OK } else { exit::SUITE_FAILURE })
}

fn cmd_periodic(args: PeriodicArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let f = match (&args.file, args.values) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(io)?;
            PeriodicFn::from_text(&text)?
        }
        (None, Some(values)) => PeriodicFn::new(values)?,
        (None, None) => return Err(CliError::usage("periodic needs --file or --values")),
    };
    let xs = args.x;
    if xs.is_empty() {
        return Err(CliError::usage("periodic needs at least one --x"));
    }
    let eps = args.eps;
    if args.bound {
        let report = delta_bound_check(&f, &xs, eps)?;
        for p in &report.points {
            let flag = if p.in_range { "" } else { "  (outside q <= x^(1/6)/22, excluded)" };
            writeln!(out, "x = {}: delta = {}, ratio = {:.6}{flag}", p.x, show(&p.delta, eps), p.ratio).map_err(io)?;
        }
        match report.max_ratio {
            Some(m) => writeln!(out, "max ratio over admissible points: {m:.6}").map_err(io)?,
            None => writeln!(out, "no admissible points").map_err(io)?,
        }
        return Ok(exit::OK);
    }
    let mut ok = true;
    for x in xs {
        let r = delta_report(&f, &x, eps)?;
        ok &= r.agrees();
        writeln!(out, "x = {}", r.x).map_err(io)?;
        writeln!(out, "  C          = {}", show(&r.c, eps)).map_err(io)?;
        writeln!(out, "  G(x)       = {}", r.g).map_err(io)?;
        writeln!(out, "  delta (G)  = {}", show(&r.delta_direct, eps)).map_err(io)?;
        writeln!(out, "  delta (V)  = {}", show(&r.delta_via_v, eps)).map_err(io)?;
        writeln!(out, "  agreement: {}", if r.agrees() { "OK" } else { "MISMATCH" }).map_err(io)?;
    }
    Ok(if ok { exit::OK } else { exit::SUITE_FAILURE })
}
