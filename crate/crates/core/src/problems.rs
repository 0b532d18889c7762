//! Test-problem generators with known solutions and distance oracles.
//!
//! Every instance has the split structure `B = F + C` with `F` affine
//! monotone and `C` one of the resolvent-computable operators. Generators
//! are pure functions of `(seed, parameters)`; randomness comes from a
//! seeded ChaCha8 stream so instances reproduce bit-exactly.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::operators::{AffineOperator, ConvexSet, ProxOperator};

/// A monotone inclusion instance `0 in F(x) + C(x)` with optional known
/// solution and a regularized-solution oracle.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub f: AffineOperator,
    pub c: ProxOperator,
    pub omega: ConvexSet,
    pub known_solution: Option<DVector<f64>>,
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// Distance from `x0` to the known solution, when available.
    pub fn d0(&self, x0: &DVector<f64>) -> Option<f64> {
        self.known_solution.as_ref().map(|s| (s - x0).norm())
    }

    /// Solves the regularized inclusion `0 in F(x) + C(x) + mu (x - x0)`
    /// directly (test and diagnostics path, never used by the solvers).
    pub fn solution_oracle(&self, mu: f64, x0: &DVector<f64>) -> Result<DVector<f64>> {
        if mu <= 0.0 {
            return Err(SolverError::DegenerateRegularization);
        }
        let n = self.dim();
        let a = self.f.matrix() + DMatrix::identity(n, n) * mu;
        let rhs = x0 * mu - self.f.offset();
        match &self.c {
            ProxOperator::Zero => a
                .lu()
                .solve(&rhs)
                .ok_or_else(|| SolverError::UnsupportedProblem("singular regularized system".into())),
            ProxOperator::BoxNormalCone { lo, hi } => {
                active_set_box(&a, &rhs, lo, hi)
            }
            ProxOperator::L1 { alpha } => active_set_l1(&a, &rhs, *alpha, self.f.lipschitz() + mu),
        }
    }

    /// Class-specific exact residual test for `0 in F(x) + C(x)`.
    pub fn verify_solution(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        let r = -self.f.evaluate(x);
        match &self.c {
            ProxOperator::Zero => Ok(r.amax() <= tol),
            ProxOperator::BoxNormalCone { lo, hi } => {
                let inside = (0..x.len()).all(|i| x[i] >= lo[i] - tol && x[i] <= hi[i] + tol);
                Ok(inside && self.c.membership(&r, x, tol))
            }
            ProxOperator::L1 { .. } => Ok(self.c.membership(&r, x, tol)),
        }
    }
}

/// Primal active-set solve of the box-constrained strongly monotone
/// affine VI `0 in A x - rhs + N_box(x)`.
fn active_set_box(
    a: &DMatrix<f64>,
    rhs: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = rhs.len();
    // status per coordinate: 0 free, -1 at lo, +1 at hi
    let mut status = vec![0i8; n];
    for _ in 0..1000 {
        let free: Vec<usize> = (0..n).filter(|&i| status[i] == 0).collect();
        let mut x = DVector::zeros(n);
        for i in 0..n {
            if status[i] == -1 {
                x[i] = lo[i];
            } else if status[i] == 1 {
                x[i] = hi[i];
            }
        }
        if !free.is_empty() {
            let m = free.len();
            let mut sub = DMatrix::zeros(m, m);
            let mut sub_rhs = DVector::zeros(m);
            for (r, &i) in free.iter().enumerate() {
                let mut acc = rhs[i];
                for j in 0..n {
                    if status[j] != 0 {
                        acc -= a[(i, j)] * x[j];
                    }
                }
                sub_rhs[r] = acc;
                for (cidx, &j) in free.iter().enumerate() {
                    sub[(r, cidx)] = a[(i, j)];
                }
            }
            let sol = sub.lu().solve(&sub_rhs).ok_or_else(|| {
                SolverError::UnsupportedProblem("singular active-set system".into())
            })?;
            for (r, &i) in free.iter().enumerate() {
                x[i] = sol[r];
            }
        }
        // residual that must lie in the normal cone
        let c = rhs - a * &x;
        let mut changed = false;
        for i in 0..n {
            match status[i] {
                0 => {
                    if x[i] < lo[i] - 1e-12 {
                        status[i] = -1;
                        changed = true;
                    } else if x[i] > hi[i] + 1e-12 {
                        status[i] = 1;
                        changed = true;
                    }
                }
                -1 => {
                    if c[i] > 1e-12 {
                        status[i] = 0;
                        changed = true;
                    }
                }
                _ => {
                    if c[i] < -1e-12 {
                        status[i] = 0;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return Ok(x);
        }
    }
    Err(SolverError::UnsupportedProblem(
        "box active-set sweep did not settle".into(),
    ))
}

/// Support-pattern active-set solve of `0 in A x - rhs + alpha d||.||_1(x)`.
fn active_set_l1(
    a: &DMatrix<f64>,
    rhs: &DVector<f64>,
    alpha: f64,
    lip: f64,
) -> Result<DVector<f64>> {
    let n = rhs.len();
    // warm start the sign pattern with a few prox-gradient sweeps
    let tau = 1.0 / lip;
    let mut x = DVector::zeros(n);
    for _ in 0..200 {
        let grad = a * &x - rhs;
        let z = &x - grad * tau;
        x = DVector::from_fn(n, |i, _| z[i].signum() * (z[i].abs() - tau * alpha).max(0.0));
    }
    let mut sign: Vec<i8> = (0..n)
        .map(|i| {
            if x[i] > 0.0 {
                1
            } else if x[i] < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect();
    for _ in 0..1000 {
        let support: Vec<usize> = (0..n).filter(|&i| sign[i] != 0).collect();
        let mut x = DVector::zeros(n);
        if !support.is_empty() {
            let m = support.len();
            let mut sub = DMatrix::zeros(m, m);
            let mut sub_rhs = DVector::zeros(m);
            for (r, &i) in support.iter().enumerate() {
                sub_rhs[r] = rhs[i] - alpha * sign[i] as f64;
                for (cidx, &j) in support.iter().enumerate() {
                    sub[(r, cidx)] = a[(i, j)];
                }
            }
            let sol = sub.lu().solve(&sub_rhs).ok_or_else(|| {
                SolverError::UnsupportedProblem("singular support system".into())
            })?;
            for (r, &i) in support.iter().enumerate() {
                x[i] = sol[r];
            }
        }
        let resid = rhs - a * &x;
        let mut changed = false;
        for i in 0..n {
            if sign[i] != 0 {
                if x[i] * (sign[i] as f64) < -1e-12 {
                    sign[i] = 0;
                    changed = true;
                }
            } else if resid[i].abs() > alpha + 1e-12 {
                sign[i] = if resid[i] > 0.0 { 1 } else { -1 };
                changed = true;
            }
        }
        if !changed {
            return Ok(x);
        }
    }
    Err(SolverError::UnsupportedProblem(
        "l1 support sweep did not settle".into(),
    ))
}

fn random_split_matrix(rng: &mut ChaCha8Rng, n: usize, skew_fraction: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let s = (&g.transpose() * &g) / n as f64;
    let h = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let k = (&h - h.transpose()) * 0.5;
    s * (1.0 - skew_fraction) + k * skew_fraction
}

/// Box-constrained affine VI with a pre-drawn interior solution:
/// `F(x) = M x + q` with `M = (1 - skew_fraction) S + skew_fraction A`
/// (`S` PSD, `A` skew) and `q = -M x*`, so `F(x*) = 0` at an interior
/// point of the box.
pub fn make_affine_box_vi(
    n: usize,
    seed: u64,
    skew_fraction: f64,
    box_lo: f64,
    box_hi: f64,
) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(SolverError::InvalidInput("dimension must be >= 1".into()));
    }
    if box_lo >= box_hi {
        return Err(SolverError::InvalidSet(0));
    }
    if !(0.0..=1.0).contains(&skew_fraction) {
        return Err(SolverError::InvalidInput("skew_fraction must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = random_split_matrix(&mut rng, n, skew_fraction);
    let width = box_hi - box_lo;
    let star = DVector::from_fn(n, |_, _| {
        rng.gen_range(box_lo + 0.25 * width..box_hi - 0.25 * width)
    });
    let q = -(&m * &star);
    let f = AffineOperator::new(m, q)?;
    let lo = DVector::from_element(n, box_lo);
    let hi = DVector::from_element(n, box_hi);
    Ok(ProblemInstance {
        name: format!("affine-box-{n}-s{seed}"),
        f,
        c: ProxOperator::BoxNormalCone { lo: lo.clone(), hi: hi.clone() },
        omega: ConvexSet::Box { lo, hi },
        known_solution: Some(star),
    })
}

/// The 2D rotation field `F(x) = scale * [[0, 1], [-1, 0]] x` with `C = 0`;
/// unique zero at the origin.
pub fn make_skew_rotation(scale: f64) -> Result<ProblemInstance> {
    if scale <= 0.0 {
        return Err(SolverError::InvalidInput("scale must be positive".into()));
    }
    let m = DMatrix::from_row_slice(2, 2, &[0.0, scale, -scale, 0.0]);
    let f = AffineOperator::new(m, DVector::zeros(2))?;
    Ok(ProblemInstance {
        name: format!("skew-rotation-{scale}"),
        f,
        c: ProxOperator::Zero,
        omega: ConvexSet::Whole,
        known_solution: Some(DVector::zeros(2)),
    })
}

/// l1-regularized affine problem `0 in M x + q + alpha d||.||_1(x)` built
/// around a drawn sparse solution with `ceil(n/4)` nonzeros.
pub fn make_l1_regularized(n: usize, seed: u64, alpha: f64) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(SolverError::InvalidInput("dimension must be >= 1".into()));
    }
    if alpha <= 0.0 {
        return Err(SolverError::InvalidInput("alpha must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = random_split_matrix(&mut rng, n, 0.5);
    let nnz = n.div_ceil(4);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    let mut star: DVector<f64> = DVector::zeros(n);
    for &i in idx.iter().take(nnz) {
        let mag = rng.gen_range(0.5..1.5);
        star[i] = if rng.gen_bool(0.5) { mag } else { -mag };
    }
    // valid subgradient of alpha ||.||_1 at star
    let sub = DVector::from_fn(n, |i, _| {
        if star[i] != 0.0 {
            alpha * star[i].signum()
        } else {
            rng.gen_range(-0.9 * alpha..0.9 * alpha)
        }
    });
    let q = -(&m * &star) - &sub;
    let f = AffineOperator::new(m, q)?;
    Ok(ProblemInstance {
        name: format!("l1-{n}-s{seed}"),
        f,
        c: ProxOperator::L1 { alpha },
        omega: ConvexSet::Whole,
        known_solution: Some(star),
    })
}

// --- JSON problem format -------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ConstraintJson {
    #[serde(rename = "type")]
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    lo: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
}

/// On-disk schema: `{ name, n, M (row-major), q, constraint, known_solution }`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProblemJson {
    name: String,
    n: usize,
    #[serde(rename = "M")]
    m: Vec<f64>,
    q: Vec<f64>,
    constraint: ConstraintJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    known_solution: Option<Vec<f64>>,
}

impl ProblemJson {
    pub fn from_instance(p: &ProblemInstance) -> Self {
        let n = p.dim();
        let mut m = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                m.push(p.f.matrix()[(i, j)]);
            }
        }
        let constraint = match &p.c {
            ProxOperator::Zero => ConstraintJson {
                kind: "none".into(),
                lo: None,
                hi: None,
                alpha: None,
            },
            ProxOperator::BoxNormalCone { lo, hi } => ConstraintJson {
                kind: "box".into(),
                lo: Some(lo.iter().cloned().collect()),
                hi: Some(hi.iter().cloned().collect()),
                alpha: None,
            },
            ProxOperator::L1 { alpha } => ConstraintJson {
                kind: "l1".into(),
                lo: None,
                hi: None,
                alpha: Some(*alpha),
            },
        };
        ProblemJson {
            name: p.name.clone(),
            n,
            m,
            q: p.f.offset().iter().cloned().collect(),
            constraint,
            known_solution: p.known_solution.as_ref().map(|s| s.iter().cloned().collect()),
        }
    }

    pub fn into_instance(self) -> Result<ProblemInstance> {
        let n = self.n;
        if self.m.len() != n * n || self.q.len() != n {
            return Err(SolverError::InvalidInput("inconsistent matrix/vector sizes".into()));
        }
        let m = DMatrix::from_row_slice(n, n, &self.m);
        let q = DVector::from_vec(self.q);
        let f = AffineOperator::new(m, q)?;
        let (c, omega) = match self.constraint.kind.as_str() {
            "none" => (ProxOperator::Zero, ConvexSet::Whole),
            "box" => {
                let lo = DVector::from_vec(self.constraint.lo.ok_or_else(|| {
                    SolverError::InvalidInput("box constraint requires lo".into())
                })?);
                let hi = DVector::from_vec(self.constraint.hi.ok_or_else(|| {
                    SolverError::InvalidInput("box constraint requires hi".into())
                })?);
                (
                    ProxOperator::BoxNormalCone { lo: lo.clone(), hi: hi.clone() },
                    ConvexSet::Box { lo, hi },
                )
            }
            "l1" => {
                let alpha = self.constraint.alpha.ok_or_else(|| {
                    SolverError::InvalidInput("l1 constraint requires alpha".into())
                })?;
                (ProxOperator::L1 { alpha }, ConvexSet::Whole)
            }
            other => {
                return Err(SolverError::InvalidInput(format!(
                    "unknown constraint type '{other}'"
                )))
            }
        };
        Ok(ProblemInstance {
            name: self.name,
            f,
            c,
            omega,
            known_solution: self.known_solution.map(DVector::from_vec),
        })
    }
}

pub fn save_problem(p: &ProblemInstance, path: &std::path::Path) -> Result<()> {
    let json = serde_json::to_string_pretty(&ProblemJson::from_instance(p))
        .map_err(|e| SolverError::InvalidInput(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_problem(path: &std::path::Path) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path)?;
    let json: ProblemJson =
        serde_json::from_str(&text).map_err(|e| SolverError::InvalidInput(e.to_string()))?;
    json.into_instance()
}
