//! Regularized HPE drivers: the static mu-regularized method with its
//! termination test and iteration bound, the dynamic doubling scheme
//! (DR-HPE), and the unregularized baseline.

use std::fmt;

use nalgebra::DVector;

use crate::engines::{korpelevich_step, tseng_step, EngineKind, StepOutcome};
use crate::error::{Result, SolverError};
use crate::hpe::{
    extragradient_update, theta, verify_hpe_condition, HpeCertificate, IterationRecord,
};
use crate::problems::ProblemInstance;

/// Tolerances and caps shared by all drivers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative-error parameter in [0, 1).
    pub sigma: f64,
    /// Target residual norm for the original inclusion.
    pub rho_bar: f64,
    /// Target enlargement tolerance.
    pub eps_bar: f64,
    /// Internal residual split, in (0, rho_bar). Defaults to rho_bar / 2.
    pub rho: f64,
    /// Stepsize scale entering the initial distance guess; `None` means
    /// the engine stepsize sigma / L.
    pub lambda_bar: Option<f64>,
    pub max_inner: usize,
    pub max_outer: usize,
}

impl SolverConfig {
    pub fn new(sigma: f64, rho_bar: f64, eps_bar: f64) -> Self {
        Self {
            sigma,
            rho_bar,
            eps_bar,
            rho: rho_bar / 2.0,
            lambda_bar: None,
            max_inner: 1_000_000,
            max_outer: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.sigma) {
            return Err(SolverError::InvalidConfig("sigma must lie in [0, 1)".into()));
        }
        if self.rho_bar <= 0.0 || self.eps_bar <= 0.0 {
            return Err(SolverError::InvalidConfig(
                "rho_bar and eps_bar must be positive".into(),
            ));
        }
        if !(self.rho > 0.0 && self.rho < self.rho_bar) {
            return Err(SolverError::InvalidConfig("rho must lie in (0, rho_bar)".into()));
        }
        if let Some(l) = self.lambda_bar {
            if l <= 0.0 {
                return Err(SolverError::InvalidConfig("lambda_bar must be positive".into()));
            }
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return Err(SolverError::InvalidConfig("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// Regularization data of one static solve.
#[derive(Debug, Clone)]
pub struct RegularizationState {
    pub mu: f64,
    pub x0: DVector<f64>,
    /// Current distance guess; informational for static solves.
    pub d0_guess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    InnerCap,
    OuterCap,
    NumericFailure,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Converged => write!(f, "converged"),
            Termination::InnerCap => write!(f, "inner_cap"),
            Termination::OuterCap => write!(f, "outer_cap"),
            Termination::NumericFailure => write!(f, "numeric_failure"),
        }
    }
}

/// Full outcome of a solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub certificate: HpeCertificate,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub termination: Termination,
    pub trace: Vec<IterationRecord>,
    /// Static iteration bound evaluated post hoc with the oracle distance
    /// (NaN when the problem has no oracle).
    pub predicted_bound: f64,
    /// Regularization weight of the final round (0 for the baseline).
    pub mu_final: f64,
    /// Smallest effective stepsize observed.
    pub lambda_min: f64,
}

/// `mu(D0, rho) = (rho_bar - rho) / ((1 + 1/sqrt(1 - sigma^2)) D0)`.
pub fn mu_of(d0_guess: f64, rho: f64, rho_bar: f64, sigma: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < rho_bar) {
        return Err(SolverError::InvalidConfig("rho must lie in (0, rho_bar)".into()));
    }
    if d0_guess <= 0.0 {
        return Err(SolverError::InvalidInput("distance guess must be positive".into()));
    }
    let factor = 1.0 + 1.0 / (1.0 - sigma * sigma).sqrt();
    Ok((rho_bar - rho) / (factor * d0_guess))
}

/// Initial distance guess of the dynamic scheme:
/// `D0_bar = 2 lambda_bar (rho_bar - rho) / ((1 - sigma^2)(1 + 1/sqrt(1 - sigma^2)))`.
pub fn d0_bar(lambda_bar: f64, rho: f64, rho_bar: f64, sigma: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < rho_bar) {
        return Err(SolverError::InvalidConfig("rho must lie in (0, rho_bar)".into()));
    }
    if lambda_bar <= 0.0 {
        return Err(SolverError::InvalidConfig("lambda_bar must be positive".into()));
    }
    let s2 = 1.0 - sigma * sigma;
    Ok(2.0 * lambda_bar * (rho_bar - rho) / (s2 * (1.0 + 1.0 / s2.sqrt())))
}

fn log_plus(x: f64) -> f64 {
    x.max(1.0).ln()
}

/// The static iteration bound
/// `(1/(2 lambda_lo mu) + 1/(1 - sigma^2)) *
///  (2 + max(log+([(1+sigma)/(1-sigma)] d^2/(lambda_lo^2 rho^2)),
///           log+(sigma^2 d^2/(2 (1-sigma^2) lambda_lo eps))))`.
pub fn static_iteration_bound(
    lambda_lo: f64,
    mu: f64,
    sigma: f64,
    d: f64,
    rho: f64,
    eps: f64,
) -> f64 {
    let s2 = 1.0 - sigma * sigma;
    let lead = 1.0 / (2.0 * lambda_lo * mu) + 1.0 / s2;
    let t1 = log_plus((1.0 + sigma) / (1.0 - sigma) * d * d / (lambda_lo * lambda_lo * rho * rho));
    let t2 = log_plus(sigma * sigma * d * d / (2.0 * s2 * lambda_lo * eps));
    lead * (2.0 + t1.max(t2))
}

fn step_once(
    engine: EngineKind,
    problem: &ProblemInstance,
    mu: f64,
    x0: &DVector<f64>,
    x_prev: &DVector<f64>,
    lambda: f64,
    sigma: f64,
) -> Result<StepOutcome> {
    match engine {
        EngineKind::Tseng => tseng_step(
            &problem.f,
            &problem.c,
            &problem.omega,
            mu,
            x0,
            x_prev,
            lambda,
            sigma,
        ),
        EngineKind::Korpelevich => {
            korpelevich_step(&problem.f, &problem.c, mu, x0, x_prev, lambda, sigma)
        }
    }
}

struct LoopResult {
    cert: HpeCertificate,
    iterations: usize,
    termination: Termination,
    lambda_min: f64,
}

/// The shared certified inner loop: certified step, stopping test on
/// `(||b + mu (y - x0)|| <= stop_rho, eps <= stop_eps)`, extragradient
/// update, divergence guard.
fn hpe_loop(
    problem: &ProblemInstance,
    mu: f64,
    x0: &DVector<f64>,
    stop_rho: f64,
    stop_eps: f64,
    sigma: f64,
    max_inner: usize,
    engine: EngineKind,
    trace: &mut Vec<IterationRecord>,
    k_offset: usize,
) -> Result<LoopResult> {
    let lambda = sigma / problem.f.lipschitz();
    let guard = 1e12 * (1.0 + x0.norm());
    let mut x = x0.clone();
    let mut gamma = 1.0_f64;
    let mut lambda_min = f64::INFINITY;
    let mut outcome: Option<(HpeCertificate, Termination, usize)> = None;
    let mut last: Option<HpeCertificate> = None;
    for k in 1..=max_inner {
        let step = step_once(engine, problem, mu, x0, &x, lambda, sigma)?;
        let cert = step.cert;
        let (ok, lhs, rhs) = verify_hpe_condition(&x, &cert, sigma);
        if !ok {
            return Err(SolverError::CertificateViolation { lhs, rhs });
        }
        lambda_min = lambda_min.min(cert.lambda);
        let theta_k = if mu > 0.0 { theta(cert.lambda, mu, sigma)? } else { 0.0 };
        gamma *= (1.0 - theta_k).sqrt();
        trace.push(IterationRecord {
            k: k_offset + k,
            lambda: cert.lambda,
            lhs,
            rhs,
            v_norm: cert.v.norm(),
            b_norm: cert.b.norm(),
            eps: cert.eps,
            y_dist_x0: (&cert.y - x0).norm(),
            gamma,
        });
        if cert.v.norm() <= stop_rho && cert.eps <= stop_eps {
            outcome = Some((cert, Termination::Converged, k));
            break;
        }
        x = extragradient_update(&x, cert.lambda, &cert.v);
        if x.norm() > guard {
            outcome = Some((cert, Termination::NumericFailure, k));
            break;
        }
        last = Some(cert);
    }
    let (cert, termination, iterations) = match outcome {
        Some(t) => t,
        None => {
            let cert = last.ok_or_else(|| {
                SolverError::InvalidConfig("max_inner must allow at least one iteration".into())
            })?;
            (cert, Termination::InnerCap, max_inner)
        }
    };
    Ok(LoopResult {
        cert,
        iterations,
        termination,
        lambda_min,
    })
}

/// Post-hoc diagnostic: the static bound evaluated with the oracle
/// distance `d_mu = ||x*_mu - x0||`. NaN when the oracle is unavailable.
pub fn predicted_static_bound(
    problem: &ProblemInstance,
    mu: f64,
    x0: &DVector<f64>,
    lambda_lo: f64,
    sigma: f64,
    rho: f64,
    eps: f64,
) -> f64 {
    match problem.solution_oracle(mu, x0) {
        Ok(xm) => static_iteration_bound(lambda_lo, mu, sigma, (xm - x0).norm(), rho, eps),
        Err(_) => f64::NAN,
    }
}

/// The static mu-regularized method: stopping test
/// `(||b + mu (y - x0)|| <= cfg.rho, eps <= cfg.eps_bar)`.
pub fn static_solve(
    problem: &ProblemInstance,
    reg: &RegularizationState,
    cfg: &SolverConfig,
    engine: EngineKind,
) -> Result<SolveReport> {
    cfg.validate()?;
    if reg.mu <= 0.0 {
        return Err(SolverError::DegenerateRegularization);
    }
    let mut trace = Vec::new();
    let res = hpe_loop(
        problem,
        reg.mu,
        &reg.x0,
        cfg.rho,
        cfg.eps_bar,
        cfg.sigma,
        cfg.max_inner,
        engine,
        &mut trace,
        0,
    )?;
    let predicted = predicted_static_bound(
        problem,
        reg.mu,
        &reg.x0,
        res.lambda_min,
        cfg.sigma,
        cfg.rho,
        cfg.eps_bar,
    );
    Ok(SolveReport {
        certificate: res.cert,
        inner_iterations: res.iterations,
        outer_iterations: 1,
        termination: res.termination,
        trace,
        predicted_bound: predicted,
        mu_final: reg.mu,
        lambda_min: res.lambda_min,
    })
}

/// The dynamic doubling scheme: each round restarts the static method
/// from `x0` with `mu = mu_of(D0, ...)`, accepts when
/// `mu ||y - x0|| <= rho_bar - rho`, and otherwise doubles `D0`.
pub fn dr_hpe_solve(
    problem: &ProblemInstance,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
    engine: EngineKind,
) -> Result<SolveReport> {
    cfg.validate()?;
    let lambda_bar = cfg
        .lambda_bar
        .unwrap_or(cfg.sigma / problem.f.lipschitz());
    let mut d_guess = d0_bar(lambda_bar, cfg.rho, cfg.rho_bar, cfg.sigma)?;
    let mut trace = Vec::new();
    let mut total_inner = 0;
    let mut lambda_min = f64::INFINITY;
    let mut last: Option<(HpeCertificate, f64)> = None;
    for outer in 1..=cfg.max_outer {
        let mu = mu_of(d_guess, cfg.rho, cfg.rho_bar, cfg.sigma)?;
        let res = hpe_loop(
            problem,
            mu,
            x0,
            cfg.rho,
            cfg.eps_bar,
            cfg.sigma,
            cfg.max_inner,
            engine,
            &mut trace,
            total_inner,
        )?;
        total_inner += res.iterations;
        lambda_min = lambda_min.min(res.lambda_min);
        let accept = res.termination == Termination::Converged
            && mu * (&res.cert.y - x0).norm() <= cfg.rho_bar - cfg.rho;
        if accept || res.termination != Termination::Converged {
            let predicted = predicted_static_bound(
                problem,
                mu,
                x0,
                res.lambda_min,
                cfg.sigma,
                cfg.rho,
                cfg.eps_bar,
            );
            return Ok(SolveReport {
                certificate: res.cert,
                inner_iterations: total_inner,
                outer_iterations: outer,
                termination: res.termination,
                trace,
                predicted_bound: predicted,
                mu_final: mu,
                lambda_min,
            });
        }
        last = Some((res.cert, mu));
        d_guess *= 2.0;
    }
    // exit test never passed within the cap; report the last round's output
    let (cert, mu) = last.expect("max_outer >= 1 guarantees at least one round");
    Ok(SolveReport {
        certificate: cert,
        inner_iterations: total_inner,
        outer_iterations: cfg.max_outer,
        termination: Termination::OuterCap,
        trace,
        predicted_bound: f64::NAN,
        mu_final: mu,
        lambda_min,
    })
}

/// The unregularized baseline: the same certified loop with `mu = 0`,
/// stopping directly on `(||b|| <= rho_bar, eps <= eps_bar)`.
pub fn unregularized_hpe_solve(
    problem: &ProblemInstance,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
    engine: EngineKind,
) -> Result<SolveReport> {
    cfg.validate()?;
    let mut trace = Vec::new();
    let res = hpe_loop(
        problem,
        0.0,
        x0,
        cfg.rho_bar,
        cfg.eps_bar,
        cfg.sigma,
        cfg.max_inner,
        engine,
        &mut trace,
        0,
    )?;
    Ok(SolveReport {
        certificate: res.cert,
        inner_iterations: res.iterations,
        outer_iterations: 1,
        termination: res.termination,
        trace,
        predicted_bound: f64::NAN,
        mu_final: 0.0,
        lambda_min: res.lambda_min,
    })
}

/// Oracle comparison of the regularized and original distances; asserts
/// the contraction `d_mu <= d0 + 1e-8`.
pub fn d_mu_gap_check(
    problem: &ProblemInstance,
    x0: &DVector<f64>,
    mu: f64,
) -> Result<(f64, f64)> {
    let d0 = problem
        .d0(x0)
        .ok_or_else(|| SolverError::UnsupportedProblem("no known solution".into()))?;
    let xm = problem.solution_oracle(mu, x0)?;
    let d_mu = (xm - x0).norm();
    debug_assert!(d_mu <= d0 + 1e-8);
    Ok((d_mu, d0))
}
