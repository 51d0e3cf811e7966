//! Command-line interface. Each command writes to the given streams and
//! returns the process exit code.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use structeig_core::builders::{ScalarPoly, TestPoly, RNG_NAME};
use structeig_core::representation::ProblemInput;
use structeig_core::{Error as CoreError, ShiftStrategy, SolveConfig, ZMode, C64};

use crate::bench::{self, BenchConfig, Timer};
use crate::format::{fmt_f64, load_custom, pair, read_coeffs, save_custom, to_json, FormatError, Pair};
use crate::generate::{Class, Generator};
use crate::run::{monic_perturbation, poly_error, run, sort_roots, Outcome};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 1;
    pub const PARTIAL: i32 = 2;
    pub const INTERNAL: i32 = 3;
}

#[derive(Parser, Debug)]
#[command(name = "structeig", version, about = "Eigenvalues of unitary-plus-rank-k matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Roots of a scalar polynomial through its companion matrix.
    Roots(RootsArgs),
    /// Eigenvalues of a problem read from a file or generated.
    Solve(SolveArgs),
    /// Timing and accuracy sweeps, written as CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ZModeArg {
    Explicit,
    Implicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ShiftArg {
    Wilkinson,
    Rayleigh,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TimerArg {
    Wall,
    Cpu,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Keep Z updated at every step or recover it at the end.
    #[arg(long, value_enum, default_value = "explicit")]
    pub z_mode: ZModeArg,
    /// Deflation tolerance relative to 1/|det T_k|; the default is machine
    /// epsilon.
    #[arg(long, default_value = "2.220446049250313e-16")]
    pub tol: f64,
    /// Sweep budget per eigenvalue; the total step budget is this times n.
    #[arg(long, default_value_t = 30)]
    pub max_sweeps: usize,
    /// Shift strategy.
    #[arg(long, value_enum, default_value = "wilkinson")]
    pub shift: ShiftArg,
}

impl SolverArgs {
    pub fn config(&self, accumulate: bool) -> SolveConfig {
        SolveConfig {
            tol_deflate: self.tol,
            max_sweeps_per_eig: self.max_sweeps,
            z_mode: match self.z_mode {
                ZModeArg::Explicit => ZMode::Explicit,
                ZModeArg::Implicit => ZMode::Implicit,
            },
            accumulate_transform: accumulate,
            shift_strategy: match self.shift {
                ShiftArg::Wilkinson => ShiftStrategy::Wilkinson,
                ShiftArg::Rayleigh => ShiftStrategy::Rayleigh,
                ShiftArg::Zero => ShiftStrategy::Zero,
            },
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct RootsArgs {
    /// Coefficients, highest degree first: an inline list such as `1,0,-1`
    /// or a file (JSON array, or numbers separated by commas/whitespace).
    #[arg(long, conflicts_with = "poly", required_unless_present = "poly")]
    pub coeffs: Option<String>,
    /// A polynomial from the built-in suite, as `name,size`, e.g.
    /// `wilkinson,10`.
    #[arg(long)]
    pub poly: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
    /// Also compute the roots with the dense reference solver and report the
    /// matched forward error.
    #[arg(long)]
    pub compare_oracle: bool,
    /// Report backward errors in the matrix and in the coefficients.
    #[arg(long)]
    pub emit_bwerr: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    /// Problem file in the custom JSON format.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    pub input: Option<PathBuf>,
    /// Generated problem: `random-unitary:n,k,norm,seed`,
    /// `unitary-diag:n,k,norm,seed`, `matrix-poly:n,k,norm,seed` or
    /// `poly:name,size`.
    #[arg(long)]
    pub gen: Option<String>,
    /// Write the problem to this file before solving.
    #[arg(long)]
    pub save: Option<PathBuf>,
    /// Accumulate the similarity and report the backward error.
    #[arg(long)]
    pub accumulate: bool,
    /// Also solve with the dense reference solver and report the matched
    /// forward error.
    #[arg(long)]
    pub compare_oracle: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    #[arg(long, default_value = "unitary-diag")]
    pub class: String,
    /// `n:25,50,100` or `k:1,2,5`; repeat for both.
    #[arg(long = "sweep", required = true)]
    pub sweeps: Vec<String>,
    /// Norm targets (coefficient norms for matrix polynomials).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub norm: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, value_enum, default_value = "wall")]
    pub timer: TimerArg,
    /// Base seed; repetition `r` uses `seed + r`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Largest size compared against the dense oracle.
    #[arg(long, default_value_t = 100)]
    pub oracle_max_n: usize,
    /// Skip the untimed error measurements.
    #[arg(long)]
    pub no_errors: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Output and error streams of a command.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

/// Runs a parsed command line. Panics inside the solver are reported as
/// internal errors.
pub fn dispatch(cli: Cli, io: &mut Io<'_>) -> i32 {
    let result = catch_unwind(AssertUnwindSafe(|| match &cli.command {
        Command::Roots(a) => cmd_roots(a, io),
        Command::Solve(a) => cmd_solve(a, io),
        Command::Bench(a) => cmd_bench(a, io),
    }));
    match result {
        Ok(code) => code,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            let _ = writeln!(io.err, "internal error: {msg}");
            exit::INTERNAL
        }
    }
}

fn fail(io: &mut Io<'_>, code: i32, msg: impl std::fmt::Display) -> i32 {
    let _ = writeln!(io.err, "error: {msg}");
    code
}

/// Exit code for a core error that escaped the solver.
fn core_code(e: &CoreError) -> i32 {
    match e {
        CoreError::Range { .. } | CoreError::WindowTooSmall(_) => exit::INTERNAL,
        CoreError::NoConvergence { .. } => exit::PARTIAL,
        _ => exit::INPUT,
    }
}

#[derive(Serialize)]
struct RootsOutput {
    degree: usize,
    converged: bool,
    roots: Vec<Pair>,
    sweeps: usize,
    monic_perturbation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bw_err_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bw_err_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fw_err_vs_oracle: Option<f64>,
}

pub fn cmd_roots(a: &RootsArgs, io: &mut Io<'_>) -> i32 {
    let poly = match (&a.coeffs, &a.poly) {
        (Some(c), _) => read_coeffs(c),
        (None, Some(spec)) => match format!("poly:{spec}").parse::<Generator>() {
            Ok(Generator::Poly { which, size }) => Ok(which.poly(size)),
            Ok(_) => unreachable!("poly: prefix always yields a polynomial"),
            Err(e) => Err(FormatError::Coeffs(e)),
        },
        (None, None) => Err(FormatError::Coeffs(String::from("either --coeffs or --poly is required"))),
    };
    let poly = match poly {
        Ok(p) => p,
        Err(e) => return fail(io, exit::INPUT, e),
    };
    let problem = match structeig_core::builders::companion(&poly) {
        Ok(p) => p,
        Err(e) => return fail(io, exit::INPUT, e),
    };
    let cfg = a.solver.config(a.emit_bwerr);
    if let Err(e) = cfg.validate() {
        return fail(io, exit::INPUT, e);
    }
    let o = match run(&problem, &cfg, a.compare_oracle) {
        Ok(o) => o,
        Err(e) => return fail(io, core_code(&e), e),
    };
    let mut roots: Vec<C64> = o.eigenvalues.iter().map(|p| C64::new(p[0], p[1])).collect();
    sort_roots(&mut roots);
    let out = RootsOutput {
        degree: poly.degree(),
        converged: o.converged,
        roots: roots.iter().map(|&z| pair(z)).collect(),
        sweeps: o.sweeps,
        monic_perturbation: monic_perturbation(&poly),
        bw_err_a: o.bw_err_a,
        bw_err_p: (a.emit_bwerr && o.converged).then(|| poly_error(&poly, &roots)),
        fw_err_vs_oracle: o.fw_err_vs_oracle,
    };
    let written = match a.format {
        OutputFormat::Json => writeln!(io.out, "{}", to_json(&out)),
        OutputFormat::Text => write_roots_text(io.out, &out),
    };
    if let Err(e) = written {
        return fail(io, exit::INPUT, e);
    }
    if o.converged {
        exit::OK
    } else {
        let [lo, hi] = o.unconverged_window.unwrap_or([0, 0]);
        fail(io, exit::PARTIAL, format!("no convergence in window {lo}..{hi}; {} roots converged", roots.len()))
    }
}

fn write_roots_text(w: &mut dyn Write, o: &RootsOutput) -> std::io::Result<()> {
    if !o.converged {
        writeln!(w, "# partial result: {} of {} roots converged", o.roots.len(), o.degree)?;
    }
    for r in &o.roots {
        writeln!(w, "{:>25} {:>25}", fmt_f64(r[0]), fmt_f64(r[1]))?;
    }
    writeln!(w, "# sweeps = {}", o.sweeps)?;
    for (name, v) in [("bw_err_A", o.bw_err_a), ("bw_err_p", o.bw_err_p), ("fw_err_vs_oracle", o.fw_err_vs_oracle)] {
        if let Some(v) = v {
            writeln!(w, "# {name} = {}", fmt_f64(v))?;
        }
    }
    if o.monic_perturbation > 0.0 {
        writeln!(w, "# monic_perturbation = {}", fmt_f64(o.monic_perturbation))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    #[serde(flatten)]
    outcome: &'a Outcome,
    z_mode: &'static str,
    shift: &'static str,
    tol_deflate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rng: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monic_perturbation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bw_err_p: Option<f64>,
}

fn load_problem(a: &SolveArgs) -> Result<(ProblemInput, Option<ScalarPoly>), String> {
    match (&a.input, &a.gen) {
        (Some(path), _) => load_custom(path).map(|p| (p, None)).map_err(|e| e.to_string()),
        (None, Some(g)) => {
            let g: Generator = g.parse()?;
            g.build().map_err(|e| e.to_string())
        }
        (None, None) => Err(String::from("either --input or --gen is required")),
    }
}

pub fn cmd_solve(a: &SolveArgs, io: &mut Io<'_>) -> i32 {
    let (problem, poly) = match load_problem(a) {
        Ok(p) => p,
        Err(e) => return fail(io, exit::INPUT, e),
    };
    if let Some(path) = &a.save {
        if let Err(e) = save_custom(path, &problem) {
            return fail(io, exit::INPUT, format!("cannot write {}: {e}", path.display()));
        }
    }
    let cfg = a.solver.config(a.accumulate);
    if let Err(e) = cfg.validate() {
        return fail(io, exit::INPUT, e);
    }
    let o = match run(&problem, &cfg, a.compare_oracle) {
        Ok(o) => o,
        Err(e) => return fail(io, core_code(&e), e),
    };
    let roots: Vec<C64> = o.eigenvalues.iter().map(|p| C64::new(p[0], p[1])).collect();
    let random = matches!(a.gen.as_deref().map(str::parse::<Generator>), Some(Ok(Generator::Random { .. })));
    let out = SolveOutput {
        outcome: &o,
        z_mode: match cfg.z_mode {
            ZMode::Explicit => "explicit",
            ZMode::Implicit => "implicit",
        },
        shift: match cfg.shift_strategy {
            ShiftStrategy::Wilkinson => "wilkinson",
            ShiftStrategy::Rayleigh => "rayleigh",
            ShiftStrategy::Zero => "zero",
        },
        tol_deflate: cfg.tol_deflate,
        generator: a.gen.clone(),
        rng: random.then_some(RNG_NAME),
        monic_perturbation: poly.as_ref().map(monic_perturbation),
        bw_err_p: poly.as_ref().filter(|_| o.converged).map(|p| poly_error(p, &roots)),
    };
    if let Err(e) = writeln!(io.out, "{}", to_json(&out)) {
        return fail(io, exit::INPUT, e);
    }
    if o.converged {
        exit::OK
    } else {
        fail(io, exit::PARTIAL, "sweep budget exhausted; output holds the converged eigenvalues only")
    }
}

/// Parses `n:1,2,3` / `k:1,2` sweep specifications.
pub fn parse_sweeps(specs: &[String]) -> Result<(Vec<usize>, Vec<usize>), String> {
    let (mut ns, mut ks) = (None, None);
    for s in specs {
        let (axis, vals) = s.split_once(':').ok_or_else(|| format!("sweep {s:?} must look like n:25,50 or k:1,2"))?;
        let vals: Vec<usize> = vals
            .split(',')
            .map(|v| v.trim().parse::<usize>().map_err(|_| format!("bad sweep value {v:?} in {s:?}")))
            .collect::<Result<_, _>>()?;
        if vals.is_empty() {
            return Err(format!("empty sweep {s:?}"));
        }
        let slot = match axis.trim() {
            "n" => &mut ns,
            "k" => &mut ks,
            other => return Err(format!("unknown sweep axis {other:?}; use n or k")),
        };
        if slot.replace(vals).is_some() {
            return Err(format!("axis {axis} given twice"));
        }
    }
    let ns = ns.ok_or("an n sweep is required")?;
    Ok((ns, ks.unwrap_or_else(|| vec![1])))
}

pub fn cmd_bench(a: &BenchArgs, io: &mut Io<'_>) -> i32 {
    let class: Class = match a.class.parse() {
        Ok(c) => c,
        Err(e) => return fail(io, exit::INPUT, e),
    };
    let (ns, ks) = match parse_sweeps(&a.sweeps) {
        Ok(v) => v,
        Err(e) => return fail(io, exit::INPUT, e),
    };
    for &n in &ns {
        for &k in &ks {
            let ok = match class {
                Class::MatrixPoly => k >= 1 && n % k == 0,
                _ => k >= 1 && k < n,
            };
            if !ok {
                return fail(io, exit::INPUT, format!("point n = {n}, k = {k} is invalid for {class}"));
            }
        }
    }
    let threads = match bench::threads_from_env() {
        Ok(t) => t,
        Err(e) => return fail(io, exit::INPUT, e),
    };
    let timer = match a.timer {
        TimerArg::Wall => Timer::Wall,
        TimerArg::Cpu => Timer::Cpu,
    };
    if !bench::timer_available(timer) {
        return fail(io, exit::INPUT, "CPU timer is not available on this platform");
    }
    if a.reps == 0 {
        return fail(io, exit::INPUT, "--reps must be at least 1");
    }
    let solve = a.solver.config(false);
    if let Err(e) = solve.validate() {
        return fail(io, exit::INPUT, e);
    }
    let cfg = BenchConfig {
        class,
        ns,
        ks,
        norms: a.norm.clone(),
        reps: a.reps,
        seed: a.seed,
        timer,
        solve,
        oracle_max_n: a.oracle_max_n,
        errors: !a.no_errors,
    };
    let rows = match bench::run(&cfg, threads) {
        Ok(r) => r,
        Err(e) => return fail(io, core_code(&e), e),
    };
    let written = match &a.output {
        Some(path) => std::fs::File::create(path).and_then(|mut f| bench::write_csv(&mut f, &rows)),
        None => bench::write_csv(io.out, &rows),
    };
    if let Err(e) = written {
        return fail(io, exit::INPUT, format!("cannot write CSV: {e}"));
    }
    for (n, k, norm, t) in bench::medians(&rows) {
        let _ = writeln!(io.err, "n={n} k={k} norm={norm:e}: median {t:.4e} s over {} reps", a.reps);
    }
    let partial = rows.iter().filter(|r| !r.converged).count();
    if partial > 0 {
        return fail(io, exit::PARTIAL, format!("{partial} runs did not converge"));
    }
    exit::OK
}

/// Names accepted by `--poly`.
pub fn poly_names() -> Vec<&'static str> {
    TestPoly::ALL.iter().map(|p| p.name()).collect()
}
