//! Shared helpers for the integration tests: an independent dense
//! active-set QP reference solver and a seeded random-instance generator.
//!
//! The active-set solver shares no code with the library's splitting
//! solver, so agreement between the two is meaningful evidence of
//! correctness.

use msnt_core::nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One-sided row of the expanded inequality system `a'x <= b`.
struct Row {
    a: DVector<f64>,
    b: f64,
    eq: bool,
    /// Index of the originating range constraint.
    src: usize,
    /// +1 if this row came from the upper bound, -1 from the lower.
    side: f64,
}

pub struct OracleSolution {
    pub x: DVector<f64>,
    /// Range-constraint duals in the library's sign convention (positive
    /// pushes against the upper bound).
    pub y: DVector<f64>,
    pub objective: f64,
}

/// Primal active-set solve of
///     minimize 0.5 x'Hx + q'x  subject to  l <= Cx <= u
/// starting from a strictly feasible `x0`. H must be positive definite.
/// Panics when the iteration limit is exceeded or the KKT conditions of
/// the returned point fail an internal audit, so a bad reference can never
/// silently validate the solver under test.
pub fn active_set_qp(
    h: &DMatrix<f64>,
    q: &DVector<f64>,
    c: &DMatrix<f64>,
    l: &DVector<f64>,
    u: &DVector<f64>,
    x0: &DVector<f64>,
) -> OracleSolution {
    let n = h.nrows();
    let m = c.nrows();
    let mut rows: Vec<Row> = Vec::new();
    for i in 0..m {
        let ci = c.row(i).transpose().into_owned();
        if l[i] == u[i] {
            rows.push(Row {
                a: ci,
                b: u[i],
                eq: true,
                src: i,
                side: 1.0,
            });
            continue;
        }
        if u[i].is_finite() {
            rows.push(Row {
                a: ci.clone(),
                b: u[i],
                eq: false,
                src: i,
                side: 1.0,
            });
        }
        if l[i].is_finite() {
            rows.push(Row {
                a: -ci,
                b: -l[i],
                eq: false,
                src: i,
                side: -1.0,
            });
        }
    }

    let mut x = x0.clone();
    // Equality rows stay in the working set for the whole solve.
    let mut working: Vec<usize> = (0..rows.len()).filter(|&r| rows[r].eq).collect();
    let max_iter = 50 * (n + rows.len() + 1);
    let mut lambda = DVector::zeros(0);

    for _ in 0..max_iter {
        // Equality-constrained subproblem: step p with A_W p = 0.
        let k = working.len();
        let dim = n + k;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(h);
        for (wi, &r) in working.iter().enumerate() {
            for j in 0..n {
                kkt[(n + wi, j)] = rows[r].a[j];
                kkt[(j, n + wi)] = rows[r].a[j];
            }
        }
        let grad = h * &x + q;
        let mut rhs = DVector::zeros(dim);
        for i in 0..n {
            rhs[i] = -grad[i];
        }
        let sol = kkt
            .lu()
            .solve(&rhs)
            .expect("singular working-set KKT system in oracle");
        let p = sol.rows(0, n).into_owned();
        lambda = sol.rows(n, k).into_owned();

        if p.amax() <= 1e-11 {
            // Stationary on the working set; inspect the multipliers.
            let mut worst = -1e-9;
            let mut drop_at = None;
            for (wi, &r) in working.iter().enumerate() {
                if !rows[r].eq && lambda[wi] < worst {
                    worst = lambda[wi];
                    drop_at = Some(wi);
                }
            }
            match drop_at {
                Some(wi) => {
                    working.remove(wi);
                }
                None => {
                    // Optimal: map the one-sided multipliers back to the
                    // range-constraint sign convention.
                    let mut y = DVector::zeros(m);
                    for (wi, &r) in working.iter().enumerate() {
                        y[rows[r].src] += rows[r].side * lambda[wi];
                    }
                    let objective = 0.5 * (h * &x).dot(&x) + q.dot(&x);
                    audit_kkt(h, q, c, l, u, &x, &y);
                    return OracleSolution { x, y, objective };
                }
            }
            continue;
        }

        // Step length limited by the nearest blocking constraint.
        let mut alpha = 1.0;
        let mut blocker = None;
        for (r, row) in rows.iter().enumerate() {
            if working.contains(&r) {
                continue;
            }
            let ap = row.a.dot(&p);
            if ap > 1e-13 {
                let slack = row.b - row.a.dot(&x);
                let a_i = slack / ap;
                if a_i < alpha {
                    alpha = a_i;
                    blocker = Some(r);
                }
            }
        }
        x += alpha * &p;
        if let Some(r) = blocker {
            working.push(r);
        }
    }
    let _ = lambda;
    panic!("active-set oracle exceeded its iteration limit");
}

/// Asserts the KKT conditions of (x, y) to tight tolerances.
fn audit_kkt(
    h: &DMatrix<f64>,
    q: &DVector<f64>,
    c: &DMatrix<f64>,
    l: &DVector<f64>,
    u: &DVector<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
) {
    let stat = h * x + q + c.transpose() * y;
    assert!(
        stat.amax() <= 1e-7 * (1.0 + q.amax()),
        "oracle stationarity residual {:.3e}",
        stat.amax()
    );
    let cx = c * x;
    for i in 0..c.nrows() {
        assert!(
            cx[i] >= l[i] - 1e-8 && cx[i] <= u[i] + 1e-8,
            "oracle primal feasibility violated on row {i}"
        );
        if y[i] > 1e-9 {
            assert!(
                (cx[i] - u[i]).abs() <= 1e-6,
                "oracle complementarity (upper) violated on row {i}"
            );
        }
        if y[i] < -1e-9 {
            assert!(
                (cx[i] - l[i]).abs() <= 1e-6,
                "oracle complementarity (lower) violated on row {i}"
            );
        }
    }
}

pub struct RandomQp {
    pub h: DMatrix<f64>,
    pub q: DVector<f64>,
    pub c: DMatrix<f64>,
    pub l: DVector<f64>,
    pub u: DVector<f64>,
    /// A strictly feasible point, usable as the oracle's start.
    pub x0: DVector<f64>,
}

/// Seeded strictly convex QP with a mix of two-sided, one-sided, and
/// equality rows, feasible by construction.
pub fn random_qp(seed: u64, n: usize, m: usize) -> RandomQp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = move |rng: &mut ChaCha8Rng| {
        // Box-Muller from two uniforms; quality is ample for test data.
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let a = DMatrix::from_fn(n, n, |_, _| normal(&mut rng));
    let h = &a * a.transpose() + DMatrix::identity(n, n) * (n as f64);
    let q = DVector::from_fn(n, |_, _| normal(&mut rng));
    let c = DMatrix::from_fn(m, n, |_, _| normal(&mut rng));
    let x0 = DVector::from_fn(n, |_, _| 0.5 * normal(&mut rng));
    let cx = &c * &x0;
    let mut l = DVector::zeros(m);
    let mut u = DVector::zeros(m);
    for i in 0..m {
        let kind: f64 = rng.random();
        let lo_margin = 0.1 + rng.random::<f64>();
        let up_margin = 0.1 + rng.random::<f64>();
        if kind < 0.1 {
            // Equality pinned at the feasible point.
            l[i] = cx[i];
            u[i] = cx[i];
        } else if kind < 0.25 {
            l[i] = f64::NEG_INFINITY;
            u[i] = cx[i] + up_margin;
        } else if kind < 0.4 {
            l[i] = cx[i] - lo_margin;
            u[i] = f64::INFINITY;
        } else {
            l[i] = cx[i] - lo_margin;
            u[i] = cx[i] + up_margin;
        }
    }
    RandomQp { h, q, c, l, u, x0 }
}
