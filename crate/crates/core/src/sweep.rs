//! Tolerance-sweep harness: runs one method/engine pair over a grid of
//! target residuals, collects per-point statistics, and fits the log-log
//! slope of iteration count against 1/rho_bar. Sweep points are
//! independent solves, so with the `parallel` feature they run on the
//! rayon pool; rows are always gathered in grid order.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::engines::EngineKind;
use crate::error::{Result, SolverError};
use crate::hpe::IterationRecord;
use crate::problems::ProblemInstance;
use crate::regularized::{
    d0_bar, dr_hpe_solve, mu_of, static_solve, unregularized_hpe_solve, RegularizationState,
    SolveReport, SolverConfig, Termination,
};

/// Exact column schema of the sweep CSV.
pub const CSV_HEADER: &str = "problem,method,engine,rho_bar,eps_bar,sigma,rho,mu_final,d0_oracle,outer_iters,inner_iters,b_norm,eps_final,terminated,wall_ms";

/// Exact column schema of the per-iteration trace CSV.
pub const TRACE_HEADER: &str = "k,lambda,lhs,rhs,v_norm,b_norm,eps,y_dist_x0,gamma_k";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Baseline,
    Static,
    DrHpe,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Baseline => write!(f, "baseline"),
            Method::Static => write!(f, "static"),
            Method::DrHpe => write!(f, "dr-hpe"),
        }
    }
}

impl FromStr for Method {
    type Err = SolverError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Method::Baseline),
            "static" => Ok(Method::Static),
            "dr-hpe" => Ok(Method::DrHpe),
            other => Err(SolverError::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

/// One sweep request: a problem, a start point, and the tolerance grid.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub problem: ProblemInstance,
    pub x0: DVector<f64>,
    pub method: Method,
    pub engine: EngineKind,
    pub rho_bars: Vec<f64>,
    pub eps_bar: f64,
    pub sigma: f64,
    /// rho = rho_frac * rho_bar; must lie in (0, 1).
    pub rho_frac: f64,
    pub max_inner: usize,
    pub max_outer: usize,
}

impl RunSpec {
    pub fn new(problem: ProblemInstance, x0: DVector<f64>, method: Method, engine: EngineKind) -> Self {
        Self {
            problem,
            x0,
            method,
            engine,
            rho_bars: vec![1e-3],
            eps_bar: 1e-6,
            sigma: 0.9,
            rho_frac: 0.5,
            max_inner: 1_000_000,
            max_outer: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_frac > 0.0 && self.rho_frac < 1.0) {
            return Err(SolverError::InvalidConfig("rho_frac must lie in (0, 1)".into()));
        }
        if self.rho_bars.is_empty() {
            return Err(SolverError::InvalidConfig("rho_bar grid is empty".into()));
        }
        for (i, &r) in self.rho_bars.iter().enumerate() {
            if r <= 0.0 {
                return Err(SolverError::InvalidConfig("rho_bar values must be positive".into()));
            }
            if self.rho_bars[..i].contains(&r) {
                return Err(SolverError::InvalidConfig("rho_bar values must be distinct".into()));
            }
        }
        if self.x0.len() != self.problem.dim() {
            return Err(SolverError::DimensionMismatch(self.x0.len(), self.problem.dim()));
        }
        SolverConfig::new(self.sigma, self.rho_bars[0], self.eps_bar).validate()
    }

    fn config_for(&self, rho_bar: f64) -> SolverConfig {
        let mut cfg = SolverConfig::new(self.sigma, rho_bar, self.eps_bar);
        cfg.rho = self.rho_frac * rho_bar;
        cfg.max_inner = self.max_inner;
        cfg.max_outer = self.max_outer;
        cfg
    }
}

/// One row of the sweep CSV (wall time excluded from any comparison).
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub rho_bar: f64,
    pub rho: f64,
    pub mu_final: f64,
    pub d0_oracle: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub b_norm: f64,
    pub eps_final: f64,
    pub terminated: Termination,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of log(inner_iters) vs log(1/rho_bar) over
    /// converged rows; `None` with fewer than 3 usable points.
    pub slope: Option<f64>,
    /// Per-point solve traces, in grid order.
    pub traces: Vec<Vec<IterationRecord>>,
}

fn solve_point(spec: &RunSpec, rho_bar: f64) -> Result<(SweepRow, Vec<IterationRecord>)> {
    let cfg = spec.config_for(rho_bar);
    let start = Instant::now();
    let report: SolveReport = match spec.method {
        Method::Baseline => {
            unregularized_hpe_solve(&spec.problem, &spec.x0, &cfg, spec.engine)?
        }
        Method::Static => {
            // single round of the static method at the dynamic scheme's
            // initial regularization weight
            let lambda_bar = cfg
                .lambda_bar
                .unwrap_or(cfg.sigma / spec.problem.f.lipschitz());
            let dbar = d0_bar(lambda_bar, cfg.rho, cfg.rho_bar, cfg.sigma)?;
            let reg = RegularizationState {
                mu: mu_of(dbar, cfg.rho, cfg.rho_bar, cfg.sigma)?,
                x0: spec.x0.clone(),
                d0_guess: dbar,
            };
            static_solve(&spec.problem, &reg, &cfg, spec.engine)?
        }
        Method::DrHpe => dr_hpe_solve(&spec.problem, &spec.x0, &cfg, spec.engine)?,
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let row = SweepRow {
        rho_bar,
        rho: cfg.rho,
        mu_final: report.mu_final,
        d0_oracle: spec.problem.d0(&spec.x0).unwrap_or(f64::NAN),
        outer_iters: report.outer_iterations,
        inner_iters: report.inner_iterations,
        b_norm: report.certificate.b.norm(),
        eps_final: report.certificate.eps,
        terminated: report.termination,
        wall_ms,
    };
    Ok((row, report.trace))
}

fn summarize(points: Vec<(SweepRow, Vec<IterationRecord>)>) -> SweepSummary {
    let (rows, traces): (Vec<_>, Vec<_>) = points.into_iter().unzip();
    let fit_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.terminated == Termination::Converged)
        .map(|r| ((1.0 / r.rho_bar).ln(), (r.inner_iters as f64).ln()))
        .collect();
    SweepSummary {
        slope: fit_loglog_slope(&fit_points),
        rows,
        traces,
    }
}

/// Least-squares slope through `(x, y)` pairs; `None` below 3 points.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let sxy = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Runs every grid point, in parallel when the `parallel` feature is on.
pub fn run_sweep(spec: &RunSpec) -> Result<SweepSummary> {
    spec.validate()?;
    #[cfg(feature = "parallel")]
    let points: Result<Vec<_>> = spec
        .rho_bars
        .par_iter()
        .map(|&r| solve_point(spec, r))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let points: Result<Vec<_>> = spec
        .rho_bars
        .iter()
        .map(|&r| solve_point(spec, r))
        .collect();
    Ok(summarize(points?))
}

/// Sequential reference path, always available (used by the benches to
/// compare against the parallel path).
pub fn run_sweep_sequential(spec: &RunSpec) -> Result<SweepSummary> {
    spec.validate()?;
    let points: Result<Vec<_>> = spec
        .rho_bars
        .iter()
        .map(|&r| solve_point(spec, r))
        .collect();
    Ok(summarize(points?))
}

/// Per-tolerance iteration-count ratio between two sweeps on the same
/// grid: `inner_iters(a) / inner_iters(b)`.
#[derive(Debug, Clone, Copy)]
pub struct CompareRow {
    pub rho_bar: f64,
    pub inner_a: usize,
    pub inner_b: usize,
    pub ratio: f64,
}

pub fn compare(a: &SweepSummary, b: &SweepSummary) -> Result<Vec<CompareRow>> {
    if a.rows.len() != b.rows.len() {
        return Err(SolverError::InvalidComparison);
    }
    a.rows
        .iter()
        .zip(&b.rows)
        .map(|(ra, rb)| {
            if ra.rho_bar != rb.rho_bar {
                return Err(SolverError::InvalidComparison);
            }
            Ok(CompareRow {
                rho_bar: ra.rho_bar,
                inner_a: ra.inner_iters,
                inner_b: rb.inner_iters,
                ratio: ra.inner_iters as f64 / rb.inner_iters as f64,
            })
        })
        .collect()
}

/// Formats one sweep row as a CSV line (no trailing newline). Floats use
/// the shortest round-trip decimal representation.
pub fn format_row(problem: &str, method: Method, engine: EngineKind, sigma: f64, eps_bar: f64, row: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3}",
        problem,
        method,
        engine,
        row.rho_bar,
        eps_bar,
        sigma,
        row.rho,
        row.mu_final,
        row.d0_oracle,
        row.outer_iters,
        row.inner_iters,
        row.b_norm,
        row.eps_final,
        row.terminated,
        row.wall_ms,
    )
}

/// Formats one trace record as a CSV line (no trailing newline).
pub fn format_trace_row(r: &IterationRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.k, r.lambda, r.lhs, r.rhs, r.v_norm, r.b_norm, r.eps, r.y_dist_x0, r.gamma
    )
}
