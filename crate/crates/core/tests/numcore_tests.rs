//! Solver-level tests: the ADMM QP solver is checked against an
//! independent primal active-set oracle on randomized instances, plus
//! hand-solvable problems and infeasibility certificates. The Riccati
//! solver is checked against closed-form scalar solutions and its own
//! fixed-point residual.

mod support;

use approx::assert_abs_diff_eq;
use msnt_core::numcore::{dare, QpProblem, QpSettings, QpStatus};
use nalgebra::{DMatrix, DVector};
use support::{active_set_qp, random_qp};

fn solve_default(
    h: &DMatrix<f64>,
    q: &DVector<f64>,
    c: &DMatrix<f64>,
    l: &DVector<f64>,
    u: &DVector<f64>,
) -> msnt_core::numcore::QpSolution {
    let mut prob = QpProblem::new(h.clone(), c.clone(), QpSettings::default()).unwrap();
    prob.solve(q, l, u, None).unwrap()
}

#[test]
fn qp_matches_active_set_oracle_on_random_instances() {
    for seed in 0..12u64 {
        let n = 3 + (seed as usize % 5);
        let m = n + 2 + (seed as usize % 7);
        let inst = random_qp(seed, n, m);
        let sol = solve_default(&inst.h, &inst.q, &inst.c, &inst.l, &inst.u);
        assert!(
            sol.status.is_solved(),
            "seed {seed}: solver returned {:?}",
            sol.status
        );
        let oracle = active_set_qp(&inst.h, &inst.q, &inst.c, &inst.l, &inst.u, &inst.x0);
        let scale = 1.0 + oracle.x.amax();
        assert!(
            (&sol.x - &oracle.x).amax() <= 1e-5 * scale,
            "seed {seed}: x mismatch {:?} vs {:?}",
            sol.x.as_slice(),
            oracle.x.as_slice()
        );
        let obj_scale = 1.0 + oracle.objective.abs();
        assert!(
            (sol.objective - oracle.objective).abs() <= 1e-6 * obj_scale,
            "seed {seed}: objective {} vs oracle {}",
            sol.objective,
            oracle.objective
        );
        let y_scale = 1.0 + oracle.y.amax();
        assert!(
            (&sol.y - &oracle.y).amax() <= 1e-4 * y_scale,
            "seed {seed}: multiplier mismatch {:?} vs {:?}",
            sol.y.as_slice(),
            oracle.y.as_slice()
        );
    }
}

#[test]
fn qp_solves_box_constrained_quadratic() {
    // min x1^2 + x2^2 - 2 x1 - 4 x2  s.t.  0 <= x <= 1.
    // Coordinate 1 sits exactly on its unconstrained minimum; coordinate 2
    // is clipped by the upper bound.
    let h = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0]));
    let q = DVector::from_vec(vec![-2.0, -4.0]);
    let c = DMatrix::identity(2, 2);
    let l = DVector::zeros(2);
    let u = DVector::from_element(2, 1.0);
    let sol = solve_default(&h, &q, &c, &l, &u);
    assert!(sol.status.is_solved());
    assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(sol.x[1], 1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(sol.objective, -4.0, epsilon = 1e-6);
    // The multiplier on the active upper bound carries the full gradient.
    assert_abs_diff_eq!(sol.y[1], 2.0, epsilon = 1e-4);
}

#[test]
fn qp_handles_equality_rows() {
    // min ||x||^2 subject to x1 + x2 = 1 -> x = (0.5, 0.5).
    let h = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0]));
    let q = DVector::zeros(2);
    let c = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let l = DVector::from_vec(vec![1.0]);
    let u = DVector::from_vec(vec![1.0]);
    let sol = solve_default(&h, &q, &c, &l, &u);
    assert!(sol.status.is_solved());
    assert_abs_diff_eq!(sol.x[0], 0.5, epsilon = 1e-7);
    assert_abs_diff_eq!(sol.x[1], 0.5, epsilon = 1e-7);
}

#[test]
fn qp_reports_primal_infeasibility() {
    // x <= -1 and x >= 1 cannot both hold.
    let h = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0]));
    let q = DVector::zeros(1);
    let c = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
    let l = DVector::from_vec(vec![f64::NEG_INFINITY, 1.0]);
    let u = DVector::from_vec(vec![-1.0, f64::INFINITY]);
    let sol = solve_default(&h, &q, &c, &l, &u);
    assert_eq!(sol.status, QpStatus::PrimalInfeasible);
}

#[test]
fn qp_reports_dual_infeasibility_for_unbounded_problem() {
    // Zero curvature, cost pushes x down, constraint only bounds above.
    let h = DMatrix::zeros(1, 1);
    let q = DVector::from_vec(vec![1.0]);
    let c = DMatrix::from_row_slice(1, 1, &[1.0]);
    let l = DVector::from_vec(vec![f64::NEG_INFINITY]);
    let u = DVector::from_vec(vec![5.0]);
    let sol = solve_default(&h, &q, &c, &l, &u);
    assert_eq!(sol.status, QpStatus::DualInfeasible);
}

#[test]
fn qp_warm_start_reuses_previous_solution() {
    let inst = random_qp(99, 6, 12);
    let mut prob = QpProblem::new(inst.h.clone(), inst.c.clone(), QpSettings::default()).unwrap();
    let cold = prob.solve(&inst.q, &inst.l, &inst.u, None).unwrap();
    assert!(cold.status.is_solved());
    let warm = prob
        .solve(&inst.q, &inst.l, &inst.u, Some((&cold.x, &cold.y)))
        .unwrap();
    assert!(warm.status.is_solved());
    assert!(
        warm.iterations <= cold.iterations,
        "warm start took {} iterations vs {} cold",
        warm.iterations,
        cold.iterations
    );
    assert!((&warm.x - &cold.x).amax() <= 1e-4 * (1.0 + cold.x.amax()));
}

#[test]
fn qp_rejects_mismatched_vector_lengths() {
    let h = DMatrix::identity(2, 2);
    let c = DMatrix::identity(2, 2);
    let mut prob = QpProblem::new(h, c, QpSettings::default()).unwrap();
    let bad_q = DVector::zeros(3);
    let l = DVector::zeros(2);
    let u = DVector::from_element(2, 1.0);
    assert!(prob.solve(&bad_q, &l, &u, None).is_err());
}

#[test]
fn dare_scalar_without_control_matches_geometric_series() {
    // P = F^2 P + Q with F = 0.5, Q = 1 -> P = 1 / (1 - 0.25) = 4/3.
    let f = DMatrix::from_element(1, 1, 0.5);
    let g = DMatrix::zeros(1, 1);
    let q = DMatrix::identity(1, 1);
    let r = DMatrix::identity(1, 1);
    let sol = dare(&f, &g, &q, &r, 1e-12, 10_000).unwrap();
    assert_abs_diff_eq!(sol.p[(0, 0)], 4.0 / 3.0, epsilon = 1e-11);
    assert_abs_diff_eq!(sol.k[(0, 0)], 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.spectral_radius, 0.5, epsilon = 1e-12);
}

#[test]
fn dare_scalar_unit_system_converges_to_golden_ratio() {
    // F = G = Q = R = 1 gives P^2 - P - 1 = 0, i.e. P = (1 + sqrt 5) / 2,
    // and K = P / (1 + P) = 1 / P.
    let ones = DMatrix::from_element(1, 1, 1.0);
    let sol = dare(&ones, &ones, &ones, &ones, 1e-12, 10_000).unwrap();
    let phi = 0.5 * (1.0 + 5.0f64.sqrt());
    assert_abs_diff_eq!(sol.p[(0, 0)], phi, epsilon = 1e-11);
    assert_abs_diff_eq!(sol.k[(0, 0)], 1.0 / phi, epsilon = 1e-11);
    assert!(sol.spectral_radius < 1.0);
}

#[test]
fn dare_solution_satisfies_fixed_point_on_random_stable_system() {
    let inst = random_qp(7, 4, 4);
    // Reuse the random generator's PSD matrix as Q and cook up a stable F.
    let mut f = inst.c.view((0, 0), (4, 4)).into_owned();
    let norm = f.amax();
    f /= 2.0 * norm.max(1.0);
    let g = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.5]);
    let q = inst.h.clone();
    let r = DMatrix::identity(2, 2);
    let sol = dare(&f, &g, &q, &r, 1e-12, 100_000).unwrap();

    let pg = &sol.p * &g;
    let inner = &r + g.transpose() * &pg;
    let pf = &sol.p * &f;
    let rhs =
        f.transpose() * &pf + &q - f.transpose() * &pg * inner.try_inverse().unwrap() * g.transpose() * &pf;
    assert!((&sol.p - rhs).amax() <= 1e-9, "Riccati residual too large");
    assert!(sol.spectral_radius < 1.0);
    // Symmetric positive semidefinite cost-to-go.
    assert!((&sol.p - sol.p.transpose()).amax() <= 1e-12);
    let eigs = sol.p.clone().symmetric_eigenvalues();
    assert!(eigs.iter().all(|&e| e >= -1e-10));
}

#[test]
fn dare_rejects_dimension_mismatch() {
    let f = DMatrix::identity(2, 2);
    let g = DMatrix::zeros(3, 1);
    let q = DMatrix::identity(2, 2);
    let r = DMatrix::identity(1, 1);
    assert!(dare(&f, &g, &q, &r, 1e-12, 100).is_err());
}
