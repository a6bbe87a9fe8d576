//! Argument parsing and routing.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use critlen_core::bessel::{bessel_deriv_zeros_with, bessel_zeros_with, default_scan, BesselOrder};
use critlen_core::critlen::{estimate_critical_length, CritLenReport, ScanStatus};
use critlen_core::determinants::{symbolic_v, symbolic_w, DerivStack, MinorEvaluator};
use critlen_core::error::Error;
use critlen_core::grid::{GridSpec, Spacing};
use critlen_core::identities::{verify_identity, CoeffModel, IdentityId, Solution, Status, VerificationReport};
use critlen_core::trigpoly::spherical_fn;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{fmt_f64, write_csv, write_json, TrigPolyJson};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "CRITLEN_THREADS";

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "critlen",
    version,
    about = "Spherical Bessel functions, Wronskian minors, identity checks and critical lengths"
)]
pub struct Cli {
    /// Worker threads for grid evaluation (CRITLEN_THREADS overrides).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Show or evaluate f_n.
    #[command(subcommand)]
    Fn(FnCommand),
    /// Positive zeros of J_nu or J_nu'.
    Zeros(ZerosArgs),
    /// Sample v(f_n), w(f_n) or a Wronskian minor on a grid.
    Scan(ScanArgs),
    /// Check identities on a grid.
    Verify(VerifyArgs),
    /// Estimate the critical length for one n.
    Critlen(CritlenArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FnCommand {
    /// Exact coefficients of f_n.
    Show {
        #[arg(long)]
        n: usize,
    },
    /// f_n and its derivatives at x.
    Eval {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = decimal)]
        x: f64,
        /// Highest derivative to report.
        #[arg(long, default_value_t = 0)]
        deriv: usize,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct ZerosArgs {
    #[arg(long, value_parser = decimal)]
    pub nu: f64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Zeros of J_nu' instead of J_nu.
    #[arg(long)]
    pub deriv: bool,
    #[arg(long, value_parser = decimal, default_value = "1e-12")]
    pub tol: f64,
    /// Upper end of the bracket scan (default nu + 40 + pi * count).
    #[arg(long, value_parser = decimal)]
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanWhat {
    V,
    W,
    Minor,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpacingArg {
    Linear,
    Log,
}

impl From<SpacingArg> for Spacing {
    fn from(s: SpacingArg) -> Self {
        match s {
            SpacingArg::Linear => Spacing::Linear,
            SpacingArg::Log => Spacing::Log,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub what: ScanWhat,
    #[arg(long)]
    pub n: usize,
    /// First basis index of the minor (needed for --what minor).
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long, value_parser = range)]
    pub range: (f64, f64),
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "linear")]
    pub spacing: SpacingArg,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// An identity tag, or "all".
    #[arg(long, default_value = "all")]
    pub identity: String,
    /// spherical:<n> or bessel:<nu>.
    #[arg(long)]
    pub model: String,
    #[arg(long, value_parser = range, default_value = "0.01:30")]
    pub range: (f64, f64),
    #[arg(long, default_value_t = 500)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "log")]
    pub spacing: SpacingArg,
    /// Override every identity's default tolerance.
    #[arg(long, value_parser = decimal)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct CritlenArgs {
    #[arg(long)]
    pub n: usize,
    /// Scan cap (default 1.5 j_{n+1/2,1}).
    #[arg(long, value_parser = decimal)]
    pub cap: Option<f64>,
    #[arg(long, value_parser = decimal, default_value = "1e-12")]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

/// Accepts plain decimal literals (`12`, `-0.5`, `.25`, `1e-9`); rejects
/// hex, `inf`, `nan` and anything else `f64::from_str` would take.
pub fn decimal(s: &str) -> Result<f64, String> {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = |t: &str| t.chars().all(|c| c.is_ascii_digit());
    let mantissa_ok = digits(int) && digits(frac) && !(int.is_empty() && frac.is_empty());
    let exponent_ok = exponent.is_none_or(|e| {
        let e = e.strip_prefix(['+', '-']).unwrap_or(e);
        !e.is_empty() && digits(e)
    });
    if !(mantissa_ok && exponent_ok) {
        return Err(format!("'{s}' is not a decimal literal"));
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("'{s}' is out of range"))
}

/// `a:b`.
pub fn range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("'{s}' is not a range a:b"))?;
    Ok((decimal(a)?, decimal(b)?))
}

enum Outcome {
    Done,
    ChecksFailed,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => EXIT_USAGE,
        Error::Numerical(_) | Error::SingularPoint { .. } => EXIT_NUMERICAL,
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    threads: usize,
    config: &'a Cli,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: Meta<'a>,
    data: T,
}

struct Ctx<'a, W: Write> {
    cli: &'a Cli,
    threads: usize,
    out: &'a mut W,
}

impl<W: Write> Ctx<'_, W> {
    fn emit<T: Serialize>(&mut self, data: T) -> Result<(), Error> {
        let env = Envelope {
            meta: Meta {
                tool: "critlen",
                version: env!("CARGO_PKG_VERSION"),
                threads: self.threads,
                config: self.cli,
            },
            data,
        };
        write_json(self.out, &env).map_err(io_error)
    }
}

fn io_error(e: std::io::Error) -> Error {
    Error::numerical(format!("cannot write output: {e}"))
}

fn resolve_threads(flag: Option<usize>) -> Result<usize, Error> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?,
        Err(_) => flag.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    if threads == 0 {
        return Err(Error::usage("thread count must be positive"));
    }
    Ok(threads)
}

/// Runs the command line `args` (program name first), writing results to
/// `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T, O, E>(args: I, out: &mut O, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    O: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = resolve_threads(cli.threads).and_then(|threads| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::numerical(format!("cannot start worker pool: {e}")))?;
        let mut buf = Vec::new();
        let outcome = pool.install(|| {
            route(&mut Ctx {
                cli: &cli,
                threads,
                out: &mut buf,
            })
        });
        out.write_all(&buf).map_err(io_error)?;
        outcome
    });
    match result {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::ChecksFailed) => EXIT_CHECK_FAILED,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs `argv` against the process's standard streams.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(argv, &mut stdout.lock(), &mut stderr.lock())
}

fn route<W: Write>(ctx: &mut Ctx<'_, W>) -> Result<Outcome, Error> {
    match &ctx.cli.command {
        Command::Fn(FnCommand::Show { n }) => {
            let f = spherical_fn(*n)?;
            #[derive(Serialize)]
            struct Show<'a> {
                n: usize,
                f: TrigPolyJson<'a>,
            }
            ctx.emit(Show { n: *n, f: TrigPolyJson(&f) })?;
        }
        Command::Fn(FnCommand::Eval { n, x, deriv }) => {
            let s = DerivStack::from_trigpoly(&spherical_fn(*n)?, *x, (*deriv).max(2))?;
            #[derive(Serialize)]
            struct Eval<'a> {
                n: usize,
                x: f64,
                values: &'a [f64],
            }
            ctx.emit(Eval {
                n: *n,
                x: *x,
                values: &s.values()[..=*deriv],
            })?;
        }
        Command::Zeros(a) => zeros(ctx, a)?,
        Command::Scan(a) => scan(ctx, a)?,
        Command::Verify(a) => return verify(ctx, a),
        Command::Critlen(a) => critlen(ctx, a)?,
    }
    Ok(Outcome::Done)
}

fn zeros<W: Write>(ctx: &mut Ctx<'_, W>, a: &ZerosArgs) -> Result<(), Error> {
    if a.count == 0 {
        return Err(Error::usage("--count must be at least 1"));
    }
    let nu = BesselOrder::new(a.nu)?;
    let mut opts = default_scan(a.nu, a.tol);
    opts.cap = a.cap.unwrap_or(opts.cap + std::f64::consts::PI * a.count as f64);
    let zs = if a.deriv {
        bessel_deriv_zeros_with(nu, a.count, &opts)?
    } else {
        bessel_zeros_with(nu, a.count, &opts)?
    };
    #[derive(Serialize)]
    struct Zero {
        index: usize,
        value: f64,
        residual: f64,
    }
    let data: Vec<Zero> = zs
        .iter()
        .map(|z| Zero {
            index: z.bracket.index,
            value: z.value,
            residual: z.residual,
        })
        .collect();
    ctx.emit(data)
}

fn scan<W: Write>(ctx: &mut Ctx<'_, W>, a: &ScanArgs) -> Result<(), Error> {
    let grid = GridSpec::new(a.range.0, a.range.1, a.points, a.spacing.into())?;
    let nodes = grid.nodes();
    let eval: Box<dyn Fn(f64) -> critlen_core::error::Result<f64> + Sync> = match a.what {
        ScanWhat::V => {
            let e = symbolic_v(&spherical_fn(a.n)?).compile();
            Box::new(move |x| e.eval(x))
        }
        ScanWhat::W => {
            let e = symbolic_w(&spherical_fn(a.n)?).compile();
            Box::new(move |x| e.eval(x))
        }
        ScanWhat::Minor => {
            let j = a.j.ok_or_else(|| Error::usage("--what minor needs --j"))?;
            let m = MinorEvaluator::new(a.n, j)?;
            Box::new(move |x| m.eval(x))
        }
    };
    let rows = nodes
        .par_iter()
        .map(|&x| eval(x).map(|v| (x, v)))
        .collect::<Result<Vec<_>, _>>()?;
    match a.format {
        Format::Csv => write_csv(ctx.out, &rows).map_err(io_error),
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                x: f64,
                value: f64,
                sign: i32,
            }
            let data: Vec<Row> = rows
                .iter()
                .map(|&(x, value)| Row {
                    x,
                    value,
                    sign: crate::output::sign(value),
                })
                .collect();
            ctx.emit(data)
        }
        Format::Table => Err(Error::usage("scan writes json or csv")),
    }
}

pub fn parse_model(s: &str) -> Result<(CoeffModel, Solution), Error> {
    let bad = || Error::usage(format!("model must be spherical:<n> or bessel:<nu>, got '{s}'"));
    let (family, arg) = s.split_once(':').ok_or_else(bad)?;
    match family {
        "spherical" => {
            let n: usize = arg.parse().map_err(|_| bad())?;
            Ok((CoeffModel::spherical(n), Solution::spherical(n)?))
        }
        "bessel" => {
            let nu = BesselOrder::new(decimal(arg).map_err(Error::usage)?)?;
            Ok((CoeffModel::bessel(nu), Solution::bessel(nu)))
        }
        _ => Err(bad()),
    }
}

fn verify<W: Write>(ctx: &mut Ctx<'_, W>, a: &VerifyArgs) -> Result<Outcome, Error> {
    if !matches!(a.format, Format::Json) {
        return Err(Error::usage("verify writes json"));
    }
    if let Some(t) = a.tol {
        if !(t > 0.0) {
            return Err(Error::usage("--tol must be positive"));
        }
    }
    let ids: Vec<IdentityId> = if a.identity == "all" {
        IdentityId::ALL.to_vec()
    } else {
        vec![a.identity.parse()?]
    };
    let (model, sol) = parse_model(&a.model)?;
    let grid = GridSpec::new(a.range.0, a.range.1, a.points, a.spacing.into())?;
    let reports: Vec<VerificationReport> = ids
        .par_iter()
        .map(|&id| verify_identity(id, &model, &sol, &grid, a.tol))
        .collect::<Result<_, _>>()?;
    let failed = reports.iter().any(|r| r.status == Status::Fail);
    ctx.emit(&reports)?;
    Ok(if failed { Outcome::ChecksFailed } else { Outcome::Done })
}

fn critlen<W: Write>(ctx: &mut Ctx<'_, W>, a: &CritlenArgs) -> Result<(), Error> {
    let report = estimate_critical_length(a.n, a.cap, a.tol)?;
    match a.format {
        Format::Json => ctx.emit(&report),
        Format::Table => write_table(ctx.out, &report).map_err(io_error),
        Format::Csv => Err(Error::usage("critlen writes json or table")),
    }
}

fn write_table<W: Write>(out: &mut W, r: &CritLenReport) -> std::io::Result<()> {
    writeln!(out, "n = {}", r.n)?;
    writeln!(out, "{:>4}  {:>24}  {:>24}  status", "j", "first zero", "search cap")?;
    for p in &r.per_j {
        let zero = p.first_zero.map_or_else(|| "-".to_string(), fmt_f64);
        let status = match p.status {
            ScanStatus::Zero => "zero".to_string(),
            ScanStatus::NoZeroWithinCap => "none within cap".to_string(),
            ScanStatus::Indeterminate => {
                format!("indeterminate near {}", p.indeterminate_at.map_or("?".into(), fmt_f64))
            }
        };
        writeln!(out, "{:>4}  {:>24}  {:>24}  {status}", p.j, zero, fmt_f64(p.search_cap))?;
    }
    writeln!(out, "estimate   {}", fmt_f64(r.estimate))?;
    writeln!(out, "reference  {}", fmt_f64(r.reference))?;
    writeln!(out, "gap        {}", fmt_f64(r.gap))?;
    writeln!(out, "consistent {}", r.conjecture_consistent)?;
    if let Some(note) = &r.note {
        writeln!(out, "note       {note}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_literals() {
        for ok in ["1", "-2.5", ".25", "3.", "1e-9", "+4E2"] {
            assert!(decimal(ok).is_ok(), "{ok}");
        }
        for bad in ["inf", "NaN", "0x10", "", ".", "1e", "1.2.3", "e5", "1_000"] {
            assert!(decimal(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn ranges() {
        assert_eq!(range("0.01:30").unwrap(), (0.01, 30.0));
        assert!(range("1-2").is_err());
    }

    #[test]
    fn models() {
        assert!(parse_model("spherical:3").is_ok());
        assert!(parse_model("bessel:3.4").is_ok());
        assert!(parse_model("bessel:-1").is_err());
        assert!(parse_model("airy:1").is_err());
    }
}
