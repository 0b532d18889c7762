//! Operator abstractions: Lipschitz vector fields, resolvent-computable
//! maximal monotone maps, closed convex sets, and the shifted-resolvent
//! identity used by the regularized solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SolverError};

/// Tolerance for the positive-semidefiniteness check in [`AffineOperator::new`].
pub const PSD_TOL: f64 = 1e-9;

pub fn check_finite(v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SolverError::NonFiniteInput)
    }
}

pub fn check_same_dim(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(SolverError::DimensionMismatch(a.len(), b.len()))
    }
}

/// Componentwise clamp of `x` into the box `[lo, hi]`. Infinite bounds are
/// allowed and turn the corresponding side into a half-space.
pub fn project_box(lo: &DVector<f64>, hi: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_same_dim(lo, x)?;
    check_same_dim(hi, x)?;
    check_finite(x)?;
    for i in 0..lo.len() {
        if lo[i] > hi[i] {
            return Err(SolverError::InvalidSet(i));
        }
    }
    Ok(DVector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i])))
}

/// Componentwise shrinkage `sign(x_i) * max(|x_i| - lambda*alpha, 0)`,
/// the resolvent of the scaled l1 subdifferential.
pub fn soft_threshold(alpha: f64, lambda: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
    if alpha <= 0.0 || lambda <= 0.0 {
        return Err(SolverError::InvalidInput(
            "soft_threshold requires alpha > 0 and lambda > 0".into(),
        ));
    }
    check_finite(x)?;
    let t = lambda * alpha;
    Ok(DVector::from_fn(x.len(), |i, _| {
        x[i].signum() * (x[i].abs() - t).max(0.0)
    }))
}

/// A closed convex set with exact projection.
#[derive(Debug, Clone)]
pub enum ConvexSet {
    /// The whole space; projection is the identity.
    Whole,
    /// A coordinate box `[lo, hi]`, possibly with infinite bounds.
    Box { lo: DVector<f64>, hi: DVector<f64> },
}

impl ConvexSet {
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ConvexSet::Whole => x.clone(),
            ConvexSet::Box { lo, hi } => {
                DVector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i]))
            }
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        match self {
            ConvexSet::Whole => true,
            ConvexSet::Box { lo, hi } => (0..x.len())
                .all(|i| x[i] >= lo[i] - tol && x[i] <= hi[i] + tol),
        }
    }
}

/// A maximal monotone operator `C` with a computable resolvent
/// `(I + lambda C)^{-1}`. Every variant is also the subdifferential of a
/// proper closed convex function `g`, whose value is used by the
/// Korpelevich engine to form the epsilon gap.
#[derive(Debug, Clone)]
pub enum ProxOperator {
    /// The zero operator; resolvent is the identity, `g = 0`.
    Zero,
    /// Normal cone of a box; resolvent is the projection, `g` the indicator.
    BoxNormalCone { lo: DVector<f64>, hi: DVector<f64> },
    /// Subdifferential of `alpha * ||.||_1`; resolvent is soft thresholding.
    L1 { alpha: f64 },
}

impl ProxOperator {
    pub fn resolvent(&self, lambda: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        if lambda <= 0.0 {
            return Err(SolverError::InvalidInput("resolvent requires lambda > 0".into()));
        }
        check_finite(x)?;
        match self {
            ProxOperator::Zero => Ok(x.clone()),
            ProxOperator::BoxNormalCone { lo, hi } => project_box(lo, hi, x),
            ProxOperator::L1 { alpha } => soft_threshold(*alpha, lambda, x),
        }
    }

    /// Value of the underlying convex function `g` at `x`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            ProxOperator::Zero => 0.0,
            ProxOperator::BoxNormalCone { lo, hi } => {
                let feasible = (0..x.len())
                    .all(|i| x[i] >= lo[i] - 1e-10 && x[i] <= hi[i] + 1e-10);
                if feasible {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxOperator::L1 { alpha } => alpha * x.iter().map(|t| t.abs()).sum::<f64>(),
        }
    }

    /// Exact class-specific membership test `c in C(y)` at tolerance `tol`.
    pub fn membership(&self, c: &DVector<f64>, y: &DVector<f64>, tol: f64) -> bool {
        match self {
            ProxOperator::Zero => c.amax() <= tol,
            ProxOperator::BoxNormalCone { lo, hi } => (0..y.len()).all(|i| {
                let at_lo = y[i] <= lo[i] + tol;
                let at_hi = y[i] >= hi[i] - tol;
                if at_lo && at_hi {
                    true
                } else if at_lo {
                    c[i] <= tol
                } else if at_hi {
                    c[i] >= -tol
                } else {
                    c[i].abs() <= tol
                }
            }),
            ProxOperator::L1 { alpha } => (0..y.len()).all(|i| {
                if y[i] > tol {
                    (c[i] - alpha).abs() <= tol
                } else if y[i] < -tol {
                    (c[i] + alpha).abs() <= tol
                } else {
                    c[i].abs() <= alpha + tol
                }
            }),
        }
    }

    /// Natural domain set of the operator; the engines use it as the
    /// default `Omega` when the problem gives none.
    pub fn domain(&self) -> ConvexSet {
        match self {
            ProxOperator::Zero | ProxOperator::L1 { .. } => ConvexSet::Whole,
            ProxOperator::BoxNormalCone { lo, hi } => ConvexSet::Box {
                lo: lo.clone(),
                hi: hi.clone(),
            },
        }
    }
}

/// Resolvent of the regularized operator `C_mu = C + mu(. - x0)`:
///
/// `(I + lambda C_mu)^{-1} x
///    = (I + [lambda/(1+lambda mu)] C)^{-1} ((x + lambda mu x0)/(1+lambda mu))`.
///
/// With `mu = 0` this is exactly `C.resolvent(lambda, x)`.
pub fn shifted_resolvent(
    c: &ProxOperator,
    lambda: f64,
    mu: f64,
    x0: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    if lambda <= 0.0 || mu < 0.0 {
        return Err(SolverError::InvalidInput(
            "shifted_resolvent requires lambda > 0 and mu >= 0".into(),
        ));
    }
    check_same_dim(x0, x)?;
    check_finite(x0)?;
    check_finite(x)?;
    if mu == 0.0 {
        return c.resolvent(lambda, x);
    }
    let scale = 1.0 + lambda * mu;
    let shifted = (x + x0 * (lambda * mu)) / scale;
    c.resolvent(lambda / scale, &shifted)
}

/// Spectral norm by power iteration on `M^T M`: 200 iterations or relative
/// change below 1e-12.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    if n == 0 {
        return 0.0;
    }
    let mtm = m.transpose() * m;
    // Deterministic start with energy on every coordinate.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64) * 1e-3);
    v /= v.norm();
    let mut prev = 0.0_f64;
    for _ in 0..200 {
        let w = &mtm * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let est = v.dot(&w);
        v = w / norm;
        if (est - prev).abs() <= 1e-12 * est.abs().max(1.0) {
            prev = est;
            break;
        }
        prev = est;
    }
    prev.max(0.0).sqrt()
}

/// A monotone affine vector field `F(x) = M x + q` with its Lipschitz
/// constant (the spectral norm of `M`, computed at construction).
#[derive(Debug, Clone)]
pub struct AffineOperator {
    matrix: DMatrix<f64>,
    offset: DVector<f64>,
    lipschitz: f64,
}

impl AffineOperator {
    /// Builds the map, rejecting matrices whose symmetric part fails
    /// `lambda_min(M + M^T) >= -PSD_TOL`.
    pub fn new(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(SolverError::DimensionMismatch(matrix.nrows(), matrix.ncols()));
        }
        if matrix.nrows() != offset.len() {
            return Err(SolverError::DimensionMismatch(matrix.nrows(), offset.len()));
        }
        check_finite(&offset)?;
        if !matrix.iter().all(|x| x.is_finite()) {
            return Err(SolverError::NonFiniteInput);
        }
        let sym = &matrix + matrix.transpose();
        let eig = sym.symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(SolverError::NotMonotone(min_eig));
        }
        let lipschitz = spectral_norm(&matrix);
        if lipschitz <= 0.0 {
            return Err(SolverError::InvalidInput(
                "affine map has zero Lipschitz constant".into(),
            ));
        }
        Ok(Self { matrix, offset, lipschitz })
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x + &self.offset
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }
}

/// Falsification score for the claim `v in B^[eps](y)` against a sample of
/// graph points of `B`: the maximum of `-<v - v', y - y'> - eps` over the
/// sample. Nonpositive means no sampled pair contradicts membership.
/// An empty sample returns 0 together with a warning flag.
pub fn sample_enlargement_violation(
    pairs: &[(DVector<f64>, DVector<f64>)],
    y: &DVector<f64>,
    v: &DVector<f64>,
    eps: f64,
) -> (f64, bool) {
    if pairs.is_empty() {
        return (0.0, true);
    }
    let score = pairs
        .iter()
        .map(|(yp, vp)| -(v - vp).dot(&(y - yp)) - eps)
        .fold(f64::NEG_INFINITY, f64::max);
    (score, false)
}
