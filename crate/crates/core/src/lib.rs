//! Solvers for monotone inclusion problems `0 in B(x)` based on the
//! hybrid proximal extragradient (HPE) framework with proximal-point
//! regularization.
//!
//! The crate provides:
//!
//! - **operators**: Lipschitz affine fields, resolvent-computable maximal
//!   monotone maps (box normal cones, l1 subdifferentials), projections,
//!   soft thresholding, and the shifted-resolvent identity for the
//!   regularized operator `C + mu(. - x0)`.
//! - **hpe**: the relative-error iteration contract (certificate check,
//!   extragradient update) and the contraction-rate diagnostics.
//! - **engines**: two certified inner engines for the split structure
//!   `B = F + C` — a Tseng forward-backward variant (exact certificate)
//!   and a Korpelevich extragradient variant (eps-subgradient
//!   certificate) — both with stepsize `sigma / L`.
//! - **regularized**: the static mu-regularized driver with its
//!   termination test, the dynamic distance-doubling driver, and the
//!   unregularized baseline.
//! - **problems**: seeded test-problem generators with known solutions
//!   and direct regularized-solution oracles, plus a JSON interchange
//!   format.
//! - **sweep**: a tolerance-sweep harness with log-log slope fits,
//!   parallel over grid points when the `parallel` feature (default) is
//!   enabled.

pub mod engines;
pub mod error;
pub mod hpe;
pub mod operators;
pub mod problems;
pub mod regularized;
pub mod sweep;

pub use engines::{korpelevich_step, tseng_step, EngineKind, StepOutcome};
pub use error::{Result, SolverError};
pub use hpe::{
    extragradient_update, gamma_sequence, pointwise_rate_bounds, theta, verify_hpe_condition,
    HpeCertificate, IterationRecord, RateConstants,
};
pub use operators::{
    project_box, sample_enlargement_violation, shifted_resolvent, soft_threshold, AffineOperator,
    ConvexSet, ProxOperator,
};
pub use problems::{
    load_problem, make_affine_box_vi, make_l1_regularized, make_skew_rotation, save_problem,
    ProblemInstance,
};
pub use regularized::{
    d0_bar, d_mu_gap_check, dr_hpe_solve, mu_of, static_iteration_bound, static_solve,
    unregularized_hpe_solve, RegularizationState, SolveReport, SolverConfig, Termination,
};
pub use sweep::{
    compare, fit_loglog_slope, format_row, format_trace_row, run_sweep, run_sweep_sequential,
    CompareRow, Method, RunSpec, SweepRow, SweepSummary, CSV_HEADER, TRACE_HEADER,
};
