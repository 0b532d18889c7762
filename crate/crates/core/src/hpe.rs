//! The HPE iteration contract: relative-error condition, extragradient
//! update, and the rate machinery (theta, per-step theta_k, running Gamma_k)
//! used as runtime diagnostics.

use nalgebra::DVector;

use crate::error::{Result, SolverError};

/// Relative slack applied to every floating-point inequality check.
pub const HPE_SLACK: f64 = 1e-10;

/// A certified inexact proximal step: the triple `(y, b, eps)` with
/// stepsize `lambda`, plus the full residual `v = b + mu (y - x0)` of the
/// regularized inclusion.
#[derive(Debug, Clone)]
pub struct HpeCertificate {
    pub y: DVector<f64>,
    /// Full residual of the regularized operator, `v in A(y) + B^[eps](y)`.
    pub v: DVector<f64>,
    /// The B-part of the residual, `b = v - mu (y - x0)`.
    pub b: DVector<f64>,
    pub eps: f64,
    pub lambda: f64,
    /// Relative error actually realized by the step, `sqrt(lhs) / ||y - x_prev||`.
    pub sigma_used: f64,
    /// The element of `C` entering `b` (Tseng residual or Korpelevich
    /// prox subgradient).
    pub c_part: DVector<f64>,
    /// Point at which `c_part` is an exact element of `C`: `y` for Tseng,
    /// the second prox point for Korpelevich.
    pub c_point: DVector<f64>,
}

/// Left- and right-hand sides of the relative-error inequality
/// `||lambda v + y - x_prev||^2 + 2 lambda eps <= sigma^2 ||y - x_prev||^2`.
pub fn hpe_sides(
    x_prev: &DVector<f64>,
    y: &DVector<f64>,
    v: &DVector<f64>,
    eps: f64,
    lambda: f64,
    sigma: f64,
) -> (f64, f64) {
    let lhs = (v * lambda + y - x_prev).norm_squared() + 2.0 * lambda * eps;
    let rhs = sigma * sigma * (y - x_prev).norm_squared();
    (lhs, rhs)
}

/// Checks the HPE relative-error condition with relative slack
/// `HPE_SLACK * max(1, rhs)`. Returns `(passed, lhs, rhs)`.
pub fn verify_hpe_condition(
    x_prev: &DVector<f64>,
    cert: &HpeCertificate,
    sigma: f64,
) -> (bool, f64, f64) {
    let (lhs, rhs) = hpe_sides(x_prev, &cert.y, &cert.v, cert.eps, cert.lambda, sigma);
    (lhs <= rhs + HPE_SLACK * rhs.max(1.0), lhs, rhs)
}

/// The extragradient update `x_next = x_prev - lambda v`.
pub fn extragradient_update(x_prev: &DVector<f64>, lambda: f64, v: &DVector<f64>) -> DVector<f64> {
    x_prev - v * lambda
}

/// Contraction factor `theta = (1/(2 lambda_lo mu) + 1/(1 - sigma^2))^{-1}`.
pub fn theta(lambda_lo: f64, mu: f64, sigma: f64) -> Result<f64> {
    if mu <= 0.0 {
        return Err(SolverError::DegenerateRegularization);
    }
    if lambda_lo <= 0.0 || !(0.0..1.0).contains(&sigma) {
        return Err(SolverError::InvalidInput(
            "theta requires lambda_lo > 0 and sigma in [0, 1)".into(),
        ));
    }
    Ok(1.0 / (1.0 / (2.0 * lambda_lo * mu) + 1.0 / (1.0 - sigma * sigma)))
}

/// The contraction constants of the strongly monotone HPE analysis.
#[derive(Debug, Clone, Copy)]
pub struct RateConstants {
    pub theta: f64,
    pub lambda_lo: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl RateConstants {
    pub fn new(lambda_lo: f64, mu: f64, sigma: f64) -> Result<Self> {
        Ok(Self {
            theta: theta(lambda_lo, mu, sigma)?,
            lambda_lo,
            mu,
            sigma,
        })
    }
}

/// Pointwise rate bounds at iteration `k`:
///
/// * `||v_k|| <= sqrt((1+sigma)/(1-sigma)) (1-theta)^{(k-1)/2} d0 / lambda_lo`
/// * `eps_k  <= sigma^2/(2(1-sigma^2)) (1-theta)^{k-1} d0^2 / lambda_lo`
/// * `||x* - x_k|| <= (1-theta)^{k/2} ||x* - x0||` (returned with `||x*-x0|| = d0`)
pub fn pointwise_rate_bounds(
    k: usize,
    d0: f64,
    lambda_lo: f64,
    mu: f64,
    sigma: f64,
) -> Result<(f64, f64, f64)> {
    if k == 0 {
        return Err(SolverError::InvalidInput("iteration index must be >= 1".into()));
    }
    if d0 < 0.0 {
        return Err(SolverError::InvalidInput("d0 must be nonnegative".into()));
    }
    let th = theta(lambda_lo, mu, sigma)?;
    let decay = (1.0 - th).powf((k as f64 - 1.0) / 2.0);
    let v_bound = ((1.0 + sigma) / (1.0 - sigma)).sqrt() * decay / lambda_lo * d0;
    let eps_bound =
        sigma * sigma / (2.0 * (1.0 - sigma * sigma)) * (1.0 - th).powi(k as i32 - 1) / lambda_lo
            * d0
            * d0;
    let x_bound = (1.0 - th).powf(k as f64 / 2.0) * d0;
    Ok((v_bound, eps_bound, x_bound))
}

/// `Gamma_k = [prod_{j=1..k} (1 - theta_j)]^{1/2}` for a sequence of
/// per-iteration contraction factors.
pub fn gamma_sequence(theta_values: &[f64]) -> Result<Vec<f64>> {
    for &t in theta_values {
        if !(t > 0.0 && t < 1.0) {
            return Err(SolverError::InvalidInput(
                "every theta_j must lie strictly in (0, 1)".into(),
            ));
        }
    }
    let mut out = Vec::with_capacity(theta_values.len());
    let mut prod = 1.0;
    for &t in theta_values {
        prod *= 1.0 - t;
        out.push(prod.sqrt());
    }
    Ok(out)
}

/// Scalar diagnostics of one recorded solver iteration. One row of the
/// trace CSV.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub k: usize,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub v_norm: f64,
    pub b_norm: f64,
    pub eps: f64,
    pub y_dist_x0: f64,
    pub gamma: f64,
}
