//! Benchmark harness for the regularized HPE solvers.
//!
//! `bench run` executes one method/engine pair over a grid of target
//! residuals and writes one CSV row per grid point (plus an optional
//! per-iteration trace). `bench compare` reads two such CSVs on the
//! same grid and prints per-tolerance iteration-count ratios.
//!
//! Exit codes: 0 success; 2 invalid configuration or input; 3
//! non-convergence under `--strict`; 4 certificate re-verification
//! failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use hpe_solvers::{
    format_row, format_trace_row, load_problem, make_affine_box_vi, make_l1_regularized,
    make_skew_rotation, run_sweep, EngineKind, Method, ProblemInstance, RunSpec, SolverError,
    SweepSummary, Termination, CSV_HEADER, TRACE_HEADER,
};

/// Relative slack used when re-checking the recorded HPE inequalities.
const HPE_SLACK: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "bench", about = "Benchmark CLI for regularized HPE solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a tolerance sweep and write the results as CSV.
    Run(RunArgs),
    /// Compare two sweep CSVs on the same tolerance grid.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Built-in problem name (`skew`, `affine-box-<n>`, `l1-<n>`) or a
    /// path to a problem JSON file.
    #[arg(long)]
    problem: String,

    /// Solution method: baseline | static | dr-hpe.
    #[arg(long, default_value = "dr-hpe")]
    method: String,

    /// Inner engine: tseng | korpelevich.
    #[arg(long, default_value = "tseng")]
    engine: String,

    /// Comma-separated grid of target residual norms.
    #[arg(long = "rho-bar", value_delimiter = ',', default_value = "1e-3")]
    rho_bar: Vec<f64>,

    /// Target enlargement tolerance.
    #[arg(long = "eps-bar", default_value_t = 1e-6)]
    eps_bar: f64,

    /// Relative-error parameter of the HPE condition, in [0, 1).
    #[arg(long, default_value_t = 0.9)]
    sigma: f64,

    /// Internal split rho = rho_frac * rho_bar, in (0, 1).
    #[arg(long = "rho-frac", default_value_t = 0.5)]
    rho_frac: f64,

    /// Seed for the built-in problem generators.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,

    /// Exit with code 3 if any grid point fails to converge.
    #[arg(long)]
    strict: bool,

    /// Optional per-iteration trace CSV path (all grid points,
    /// concatenated in grid order).
    #[arg(long)]
    trace: Option<PathBuf>,

    /// Optional comma-separated start point; defaults to the known
    /// solution shifted by ones/sqrt(n) when available, else ones.
    #[arg(long, value_delimiter = ',')]
    x0: Option<Vec<f64>>,
}

#[derive(Args)]
struct CompareArgs {
    /// First sweep CSV (numerator of the ratio).
    a: PathBuf,
    /// Second sweep CSV (denominator of the ratio).
    b: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => run_command(&args),
        Command::Compare(args) => compare_command(&args),
    };
    match code {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &SolverError) -> u8 {
    match e {
        SolverError::CertificateViolation { .. } | SolverError::BrokenConvexity(_) => 4,
        SolverError::Io(_) => 1,
        _ => 2,
    }
}

/// Resolves a `--problem` argument: a path to a JSON file, or one of
/// the built-in generator names.
fn resolve_problem(arg: &str, seed: u64) -> Result<ProblemInstance, SolverError> {
    if arg.ends_with(".json") || Path::new(arg).is_file() {
        return load_problem(Path::new(arg));
    }
    if arg == "skew" {
        return make_skew_rotation(1.0);
    }
    if let Some(n) = arg.strip_prefix("affine-box-") {
        let n: usize = n
            .parse()
            .map_err(|_| SolverError::InvalidConfig(format!("bad dimension in '{arg}'")))?;
        return make_affine_box_vi(n, seed, 0.7, -10.0, 10.0);
    }
    if let Some(n) = arg.strip_prefix("l1-") {
        let n: usize = n
            .parse()
            .map_err(|_| SolverError::InvalidConfig(format!("bad dimension in '{arg}'")))?;
        return make_l1_regularized(n, seed, 0.1);
    }
    Err(SolverError::InvalidConfig(format!(
        "unknown problem '{arg}' (expected skew, affine-box-<n>, l1-<n>, or a .json path)"
    )))
}

/// Default start point: unit distance from the known solution when one
/// is available, otherwise the all-ones vector.
fn default_x0(problem: &ProblemInstance) -> DVector<f64> {
    let n = problem.dim();
    let shift = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    match &problem.known_solution {
        Some(xs) => xs + shift,
        None => DVector::from_element(n, 1.0),
    }
}

/// Independent post-solve check of every converged row: final residual
/// and enlargement within tolerance, and each recorded iteration's HPE
/// inequality re-satisfied.
fn reverify(summary: &SweepSummary, eps_bar: f64) -> Result<(), SolverError> {
    for (row, trace) in summary.rows.iter().zip(&summary.traces) {
        if row.terminated != Termination::Converged {
            continue;
        }
        if !(row.b_norm <= row.rho_bar && row.eps_final <= eps_bar) {
            return Err(SolverError::CertificateViolation {
                lhs: row.b_norm.max(row.eps_final),
                rhs: row.rho_bar.max(eps_bar),
            });
        }
        for rec in trace {
            if rec.lhs > rec.rhs + HPE_SLACK * rec.rhs.max(1.0) {
                return Err(SolverError::CertificateViolation {
                    lhs: rec.lhs,
                    rhs: rec.rhs,
                });
            }
        }
    }
    Ok(())
}

fn run_command(args: &RunArgs) -> Result<ExitCode, SolverError> {
    let method: Method = args.method.parse()?;
    let engine: EngineKind = args.engine.parse()?;
    let problem = resolve_problem(&args.problem, args.seed)?;
    let x0 = match &args.x0 {
        Some(v) => DVector::from_vec(v.clone()),
        None => default_x0(&problem),
    };

    let mut spec = RunSpec::new(problem, x0, method, engine);
    spec.rho_bars = args.rho_bar.clone();
    spec.eps_bar = args.eps_bar;
    spec.sigma = args.sigma;
    spec.rho_frac = args.rho_frac;
    spec.validate()?;

    let summary = run_sweep(&spec)?;
    reverify(&summary, spec.eps_bar)?;

    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &summary.rows {
        out.push_str(&format_row(
            &spec.problem.name,
            method,
            engine,
            spec.sigma,
            spec.eps_bar,
            row,
        ));
        out.push('\n');
    }
    fs::write(&args.out, out)?;

    if let Some(path) = &args.trace {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for trace in &summary.traces {
            for rec in trace {
                out.push_str(&format_trace_row(rec));
                out.push('\n');
            }
        }
        fs::write(path, out)?;
    }

    for row in &summary.rows {
        println!(
            "rho_bar={:<10} inner={:<8} outer={:<4} b_norm={:.3e} eps={:.3e} {}",
            row.rho_bar, row.inner_iters, row.outer_iters, row.b_norm, row.eps_final, row.terminated
        );
    }
    match summary.slope {
        Some(s) => println!("log-log slope: {s:.4}"),
        None => println!("log-log slope: n/a (needs >= 3 converged points)"),
    }

    let all_converged = summary
        .rows
        .iter()
        .all(|r| r.terminated == Termination::Converged);
    if args.strict && !all_converged {
        eprintln!("error: non-convergence in strict mode");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

/// Minimal view of a sweep CSV row needed for comparison.
struct CsvRow {
    rho_bar: f64,
    inner_iters: usize,
}

fn read_csv(path: &Path) -> Result<Vec<CsvRow>, SolverError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => {
            return Err(SolverError::InvalidConfig(format!(
                "{}: missing or unexpected CSV header",
                path.display()
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || SolverError::InvalidConfig(format!("{}: bad row {}", path.display(), i + 2));
        if fields.len() != 15 {
            return Err(bad());
        }
        rows.push(CsvRow {
            rho_bar: fields[3].parse().map_err(|_| bad())?,
            inner_iters: fields[10].parse().map_err(|_| bad())?,
        });
    }
    Ok(rows)
}

fn compare_command(args: &CompareArgs) -> Result<ExitCode, SolverError> {
    let a = read_csv(&args.a)?;
    let b = read_csv(&args.b)?;
    if a.len() != b.len() || a.iter().zip(&b).any(|(ra, rb)| ra.rho_bar != rb.rho_bar) {
        return Err(SolverError::InvalidComparison);
    }
    println!("{:<12} {:>10} {:>10} {:>10}", "rho_bar", "inner_a", "inner_b", "ratio");
    for (ra, rb) in a.iter().zip(&b) {
        let ratio = ra.inner_iters as f64 / rb.inner_iters as f64;
        println!(
            "{:<12} {:>10} {:>10} {:>10.3}",
            ra.rho_bar, ra.inner_iters, rb.inner_iters, ratio
        );
    }
    Ok(ExitCode::SUCCESS)
}
