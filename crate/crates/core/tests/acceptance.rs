//! Acceptance suite: end-to-end verification of the certified-solver
//! guarantees on the full problem/engine/method matrix.
//!
//! Every numeric tolerance here is pinned; oracle values come from the
//! closed-form or active-set solution oracles of the problem module,
//! never from the solver under test.

use nalgebra::{dvector, DVector};

use hpe_solvers::{
    d0_bar, d_mu_gap_check, dr_hpe_solve, extragradient_update, gamma_sequence,
    korpelevich_step, make_affine_box_vi, make_l1_regularized, make_skew_rotation, mu_of,
    pointwise_rate_bounds, run_sweep, shifted_resolvent, static_iteration_bound, static_solve,
    theta, tseng_step, unregularized_hpe_solve, AffineOperator, ConvexSet, EngineKind, Method,
    ProblemInstance, ProxOperator, RegularizationState, RunSpec, SolveReport, SolverConfig,
    Termination,
};

const HPE_SLACK: f64 = 1e-10;

/// Engines applicable to a problem: Korpelevich needs an evaluable g,
/// which every generated instance provides (zero, box indicator, l1).
fn engines() -> [EngineKind; 2] {
    [EngineKind::Tseng, EngineKind::Korpelevich]
}

fn test_problems() -> Vec<ProblemInstance> {
    let mut out = vec![make_skew_rotation(1.0).unwrap()];
    for seed in [1, 2, 3] {
        out.push(make_affine_box_vi(6, seed, 0.5, -5.0, 5.0).unwrap());
        out.push(make_l1_regularized(6, seed, 0.2).unwrap());
    }
    out
}

fn start_point(p: &ProblemInstance) -> DVector<f64> {
    let n = p.dim();
    let shift = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    p.known_solution.as_ref().unwrap() + shift
}

fn assert_trace_certified(report: &SolveReport) -> usize {
    for rec in &report.trace {
        assert!(
            rec.lhs <= rec.rhs + HPE_SLACK * rec.rhs.max(1.0),
            "HPE inequality violated at k={}: lhs={} rhs={}",
            rec.k,
            rec.lhs,
            rec.rhs
        );
    }
    report.trace.len()
}

/// Criterion 1: the relative-error inequality holds on every recorded
/// iteration across the full matrix, with at least 1e5 iterations total.
#[test]
fn certificate_validity_across_full_matrix() {
    let start = std::time::Instant::now();
    let mut recorded = 0usize;

    for p in test_problems() {
        let x0 = start_point(&p);
        for engine in engines() {
            for sigma in [0.3, 0.7, 0.9] {
                // the dynamic scheme restarts from x0 each round, so the
                // tighter tolerances supply most of the iteration volume
                for rho_bar in [1e-4, 1e-5, 1e-6] {
                    let cfg = SolverConfig::new(sigma, rho_bar, 1e-7);
                    let rep = dr_hpe_solve(&p, &x0, &cfg, engine).unwrap();
                    recorded += assert_trace_certified(&rep);
                }
                let cfg = SolverConfig::new(sigma, 1e-4, 1e-7);
                let rep = unregularized_hpe_solve(&p, &x0, &cfg, engine).unwrap();
                recorded += assert_trace_certified(&rep);
                let reg = RegularizationState {
                    mu: 0.05,
                    x0: x0.clone(),
                    d0_guess: 1.0,
                };
                let rep = static_solve(&p, &reg, &cfg, engine).unwrap();
                recorded += assert_trace_certified(&rep);
            }
        }
    }

    assert!(recorded >= 100_000, "only {recorded} iterations recorded");
    assert!(start.elapsed().as_secs() < 60);
}

/// Criterion 2: the pointwise linear-rate bounds of the strongly
/// monotone analysis hold with the oracle distance d_mu for every
/// k <= 200 (additive tolerance 1e-8).
#[test]
fn linear_rate_bounds_with_oracle_distance() {
    let start = std::time::Instant::now();
    for (p, sigma, mu) in [
        (make_skew_rotation(1.0).unwrap(), 0.7, 0.5),
        (make_affine_box_vi(4, 9, 0.4, -3.0, 3.0).unwrap(), 0.5, 1.0),
        (make_affine_box_vi(6, 10, 0.8, -5.0, 5.0).unwrap(), 0.9, 0.2),
    ] {
        let x0 = start_point(&p);
        let lambda = sigma / p.f.lipschitz();
        let x_star_mu = p.solution_oracle(mu, &x0).unwrap();
        let d_mu = (&x_star_mu - &x0).norm();
        let mut x = x0.clone();
        for k in 1..=200 {
            let out = tseng_step(&p.f, &p.c, &p.omega, mu, &x0, &x, lambda, sigma).unwrap();
            x = extragradient_update(&x, out.cert.lambda, &out.cert.v);
            let (v_bound, eps_bound, x_bound) =
                pointwise_rate_bounds(k, d_mu, lambda, mu, sigma).unwrap();
            assert!(
                (&x - &x_star_mu).norm() <= x_bound + 1e-8,
                "iterate bound failed at k={k}: {} > {x_bound}",
                (&x - &x_star_mu).norm()
            );
            assert!(out.cert.v.norm() <= v_bound + 1e-8);
            assert!(out.cert.eps <= eps_bound + 1e-8);
        }
    }
    assert!(start.elapsed().as_secs() < 30);
}

/// Criterion 3: the static method's converged iteration count never
/// exceeds the ceiling of its stated bound, evaluated with the oracle
/// distance d_mu.
#[test]
fn static_iteration_count_within_stated_bound() {
    let start = std::time::Instant::now();
    let mut instances = 0;
    for seed in 1..=10u64 {
        for (p, mu) in [
            (make_affine_box_vi(5, seed, 0.3, -4.0, 4.0).unwrap(), 0.5),
            (make_affine_box_vi(7, 100 + seed, 0.8, -2.0, 2.0).unwrap(), 0.1),
        ] {
            let x0 = start_point(&p);
            let mut cfg = SolverConfig::new(0.7, 1e-3, 1e-6);
            cfg.rho = 5e-4;
            let reg = RegularizationState {
                mu,
                x0: x0.clone(),
                d0_guess: 1.0,
            };
            let rep = static_solve(&p, &reg, &cfg, EngineKind::Tseng).unwrap();
            assert_eq!(rep.termination, Termination::Converged);
            let d_mu = (p.solution_oracle(mu, &x0).unwrap() - &x0).norm();
            let bound =
                static_iteration_bound(rep.lambda_min, mu, cfg.sigma, d_mu, cfg.rho, cfg.eps_bar);
            assert!(
                (rep.inner_iterations as f64) <= bound.ceil(),
                "seed {seed}: {} iterations > bound {bound}",
                rep.inner_iterations
            );
            instances += 1;
        }
    }
    assert!(instances >= 20);
    assert!(start.elapsed().as_secs() < 60);
}

/// Criterion 4: the regularized distance never exceeds the original
/// one: d_mu <= d0 + 1e-8 across weights spanning six orders.
#[test]
fn regularized_distance_contraction() {
    let mut instances = 0;
    for seed in 1..=10u64 {
        for p in [
            make_affine_box_vi(6, seed, 0.6, -5.0, 5.0).unwrap(),
            make_l1_regularized(6, seed, 0.3).unwrap(),
        ] {
            let x0 = start_point(&p);
            for mu in [1e-3, 1.0, 1e3] {
                let (d_mu, d0) = d_mu_gap_check(&p, &x0, mu).unwrap();
                assert!(d_mu <= d0 + 1e-8, "seed {seed}, mu {mu}: {d_mu} > {d0}");
            }
            instances += 1;
        }
    }
    assert!(instances >= 20);
}

/// Criterion 5: every converged dynamic-scheme output meets the target
/// tolerances and carries an exactly checkable certificate membership.
#[test]
fn dr_hpe_outputs_are_certified() {
    for p in test_problems() {
        let x0 = start_point(&p);
        for engine in engines() {
            let cfg = SolverConfig::new(0.9, 1e-4, 1e-7);
            let rep = dr_hpe_solve(&p, &x0, &cfg, engine).unwrap();
            assert_eq!(rep.termination, Termination::Converged, "{} {engine}", p.name);
            assert!(rep.certificate.b.norm() <= cfg.rho_bar);
            assert!(rep.certificate.eps <= cfg.eps_bar);
            // class-specific exact membership: Tseng's residual is in
            // C(y); Korpelevich's subgradient is in dg at the second
            // prox point, with a nonnegative convexity gap
            let cert = &rep.certificate;
            assert!(
                p.c.membership(&cert.c_part, &cert.c_point, 1e-10),
                "{} {engine}: certificate membership failed",
                p.name
            );
            match engine {
                EngineKind::Tseng => assert_eq!(cert.eps, 0.0),
                EngineKind::Korpelevich => assert!(cert.eps >= 0.0),
            }
        }
    }
}

/// Criterion 6: the dynamic scheme's outer-round count obeys
/// K <= 1 + ceil(log2+(d0 / D0_bar)) whenever d0 is known.
#[test]
fn outer_round_count_within_bound() {
    for p in test_problems() {
        let x0 = start_point(&p);
        let d0 = p.d0(&x0).unwrap();
        for engine in engines() {
            for rho_bar in [1e-2, 1e-3, 1e-4] {
                let cfg = SolverConfig::new(0.9, rho_bar, 1e-7);
                let rep = dr_hpe_solve(&p, &x0, &cfg, engine).unwrap();
                assert_eq!(rep.termination, Termination::Converged);
                let lambda_bar = cfg.sigma / p.f.lipschitz();
                let dbar = d0_bar(lambda_bar, cfg.rho, cfg.rho_bar, cfg.sigma).unwrap();
                let k_bound = 1.0 + (d0 / dbar).max(1.0).log2().ceil();
                assert!(
                    (rep.outer_iterations as f64) <= k_bound,
                    "{} {engine} rho_bar={rho_bar}: {} rounds > {k_bound}",
                    p.name,
                    rep.outer_iterations
                );
            }
        }
    }
}

fn skew_sweep(method: Method) -> RunSpec {
    let p = make_skew_rotation(1.0).unwrap();
    let mut spec = RunSpec::new(p, dvector![1.0, 0.0], method, EngineKind::Tseng);
    spec.rho_bars = vec![1e-2, 1e-3, 1e-4, 1e-5];
    spec.sigma = 0.9;
    spec.rho_frac = 0.5;
    spec.eps_bar = 1e-7;
    spec
}

/// Criterion 7a: baseline log-log slope of iterations vs 1/rho_bar on
/// the skew rotation is quadratic (accept [1.7, 2.3]).
#[test]
fn complexity_separation_baseline_slope_is_quadratic() {
    let summary = run_sweep(&skew_sweep(Method::Baseline)).unwrap();
    for row in &summary.rows {
        assert_eq!(row.terminated, Termination::Converged);
    }
    let slope = summary.slope.unwrap();
    assert!(
        (1.7..=2.3).contains(&slope),
        "baseline slope {slope} outside [1.7, 2.3]"
    );
}

/// Criterion 7b: the dynamic scheme's slope on the same sweep is at
/// most 1.3 (near-linear in 1/rho_bar up to log factors).
#[test]
fn complexity_separation_dr_hpe_slope_is_subquadratic() {
    let summary = run_sweep(&skew_sweep(Method::DrHpe)).unwrap();
    for row in &summary.rows {
        assert_eq!(row.terminated, Termination::Converged);
    }
    let slope = summary.slope.unwrap();
    assert!(slope <= 1.3, "dr-hpe slope {slope} > 1.3");
}

/// Criterion 7c: at the tightest tolerance the baseline needs more than
/// 10x the iterations of the dynamic scheme.
#[test]
fn complexity_separation_ratio_at_tightest_tolerance() {
    let base = run_sweep(&skew_sweep(Method::Baseline)).unwrap();
    let dr = run_sweep(&skew_sweep(Method::DrHpe)).unwrap();
    let rb = base.rows.last().unwrap();
    let rd = dr.rows.last().unwrap();
    assert_eq!(rb.rho_bar, 1e-5);
    let ratio = rb.inner_iters as f64 / rd.inner_iters as f64;
    assert!(
        ratio > 10.0,
        "baseline/dr-hpe iteration ratio {ratio} <= 10 at rho_bar=1e-5 ({} vs {})",
        rb.inner_iters,
        rd.inner_iters
    );
}

/// Criterion 8: the 1D Tseng worked example is reproduced exactly, with
/// the relative-error inequality tight to 1e-14.
#[test]
fn tseng_1d_equality_case() {
    let f = AffineOperator::new(nalgebra::DMatrix::identity(1, 1), DVector::zeros(1)).unwrap();
    let out = tseng_step(
        &f,
        &ProxOperator::Zero,
        &ConvexSet::Whole,
        0.0,
        &dvector![0.0],
        &dvector![1.0],
        0.5,
        0.5,
    )
    .unwrap();
    assert!((out.cert.y[0] - 0.5).abs() <= 1e-14);
    assert!((out.cert.b[0] - 0.5).abs() <= 1e-14);
    assert!((out.x_next[0] - 0.75).abs() <= 1e-14);
    let lhs = (0.5 * out.cert.v[0] + out.cert.y[0] - 1.0).abs();
    let rhs = 0.5 * (out.cert.y[0] - 1.0).abs();
    assert!((lhs - rhs).abs() <= 1e-14, "sigma-inequality not tight: {lhs} vs {rhs}");
}

/// Criterion 9: degenerate-parameter reductions recover the classical
/// objects to 1e-14.
#[test]
fn reduction_identities() {
    // shifted resolvent at mu = 0 equals the plain resolvent
    let g = ProxOperator::L1 { alpha: 0.7 };
    let x0 = dvector![5.0, -5.0, 0.0];
    for v in [dvector![2.0, -0.4, 0.1], dvector![-1.3, 0.9, 3.0]] {
        let shifted = shifted_resolvent(&g, 0.8, 0.0, &x0, &v).unwrap();
        let plain = g.resolvent(0.8, &v).unwrap();
        assert!((shifted - plain).amax() <= 1e-14);
    }

    // Korpelevich with g = 0, mu = 0 equals plain extragradient
    let m = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 0.5]);
    let f = AffineOperator::new(m, dvector![0.2, -0.1]).unwrap();
    let x_prev = dvector![1.0, -2.0];
    let lambda = 0.3;
    let out = korpelevich_step(
        &f,
        &ProxOperator::Zero,
        0.0,
        &dvector![0.0, 0.0],
        &x_prev,
        lambda,
        0.9,
    )
    .unwrap();
    let y_ref = &x_prev - f.evaluate(&x_prev) * lambda;
    let x_ref = &x_prev - f.evaluate(&y_ref) * lambda;
    assert!((&out.cert.y - y_ref).amax() <= 1e-14);
    assert!((&out.x_next - x_ref).amax() <= 1e-14);
    assert_eq!(out.cert.eps, 0.0);

    // constant-theta Gamma_k equals (1 - theta)^{k/2}
    let th = theta(0.9, 0.5, 0.7).unwrap();
    let gamma = gamma_sequence(&vec![th; 12]).unwrap();
    for (k, g) in gamma.iter().enumerate() {
        let expected = (1.0 - th).powf((k as f64 + 1.0) / 2.0);
        assert!((g - expected).abs() <= 1e-14);
    }
}

/// Criterion 10: at every static-method termination, the accepted point
/// and residual obey the auxiliary distance bounds with the oracle d_mu.
#[test]
fn termination_auxiliary_bounds() {
    for p in test_problems() {
        let x0 = start_point(&p);
        for engine in engines() {
            for (sigma, mu) in [(0.3, 1.0), (0.7, 0.3), (0.9, 0.05)] {
                let mut cfg = SolverConfig::new(sigma, 1e-3, 1e-6);
                cfg.rho = 5e-4;
                let reg = RegularizationState {
                    mu,
                    x0: x0.clone(),
                    d0_guess: 1.0,
                };
                let rep = static_solve(&p, &reg, &cfg, engine).unwrap();
                assert_eq!(rep.termination, Termination::Converged);
                let d_mu = (p.solution_oracle(mu, &x0).unwrap() - &x0).norm();
                let factor = 1.0 + 1.0 / (1.0 - sigma * sigma).sqrt();
                let y_dist = (&rep.certificate.y - &x0).norm();
                assert!(
                    y_dist <= factor * d_mu + 1e-8,
                    "{} {engine}: ||y - x0|| = {y_dist} > {}",
                    p.name,
                    factor * d_mu
                );
                let b_bound = cfg.rho + mu * factor * d_mu;
                assert!(
                    rep.certificate.b.norm() <= b_bound + 1e-8,
                    "{} {engine}: ||b|| = {} > {b_bound}",
                    p.name,
                    rep.certificate.b.norm()
                );
            }
        }
    }
}

/// Sanity companion to criterion 6/5: mu_of halves when the distance
/// guess doubles, tying the round bound to the doubling schedule.
#[test]
fn mu_halving_matches_doubling() {
    let mu1 = mu_of(1.0, 0.5, 1.0, 0.9).unwrap();
    let mu2 = mu_of(2.0, 0.5, 1.0, 0.9).unwrap();
    assert!((mu2 - mu1 / 2.0).abs() <= 1e-15);
}
