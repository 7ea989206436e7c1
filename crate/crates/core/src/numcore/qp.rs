//! Dense convex QP solver: operator splitting (ADMM) with Ruiz
//! equilibration, adaptive step size, a cached reduced-system Cholesky
//! factorization, an active-set polish step, and infeasibility
//! certificates.
//!
//! Solves
//! ```text
//!     minimize    0.5 x'Hx + q'x
//!     subject to  l <= Cx <= u
//! ```
//! with `H` symmetric positive semidefinite. The constraint matrix and
//! Hessian are fixed per [`QpProblem`]; `q`, `l`, `u` vary per solve, so
//! the factorization is computed once and reused across solves. That
//! split matches receding-horizon control, where the same problem shape
//! is solved at every step with fresh data.
//!
//! The splitting iteration is first order, so reaching tight tolerances
//! can take many iterations on badly curved problems. Two standard
//! remedies are built in: the step size adapts to the primal/dual
//! residual ratio, and once the iterate is close the solver attempts to
//! identify the active set and jump to the exact KKT point (polish). A
//! polished point is accepted only when its own residuals meet the full
//! tolerances and the multiplier signs are consistent, so early exits
//! never weaken the returned accuracy.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("dimension mismatch: H is {h_rows}x{h_cols}, C is {c_rows}x{c_cols}")]
    Dimensions {
        h_rows: usize,
        h_cols: usize,
        c_rows: usize,
        c_cols: usize,
    },
    #[error("reduced system factorization failed (Hessian not positive semidefinite?)")]
    Factorization,
    #[error("solve called with wrong data sizes: q has {q_len}, l has {l_len}, u has {u_len}; expected n={n}, m={m}")]
    DataSize {
        q_len: usize,
        l_len: usize,
        u_len: usize,
        n: usize,
        m: usize,
    },
}

/// Solver tuning knobs. The defaults are appropriate for well-scaled
/// control problems; only `max_iter` normally needs adjusting.
#[derive(Debug, Clone)]
pub struct QpSettings {
    /// Absolute tolerance on primal/dual residuals.
    pub eps_abs: f64,
    /// Relative tolerance on primal/dual residuals.
    pub eps_rel: f64,
    /// Tolerance for primal/dual infeasibility certificates.
    pub eps_infeasible: f64,
    /// Iteration cap; on hit, the best iterate so far is returned with
    /// [`QpStatus::MaxIterations`].
    pub max_iter: usize,
    /// Regularization added to the Hessian block of the reduced system.
    pub sigma: f64,
    /// Over-relaxation parameter in (0, 2).
    pub alpha: f64,
    /// Initial ADMM step size.
    pub rho0: f64,
    /// Scale the step size from the primal/dual residual ratio,
    /// refactoring the reduced system when the change is large enough to
    /// matter.
    pub adaptive_rho: bool,
    /// Residuals (and rho updates) are evaluated every this many iterations.
    pub check_interval: usize,
    /// Refine converged iterates by solving the KKT system restricted to
    /// the active constraints, and allow early exit through the same
    /// mechanism once the iterate is close enough to identify the active
    /// set.
    pub polish: bool,
    /// Ruiz equilibration sweeps at setup.
    pub scaling_iters: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        QpSettings {
            eps_abs: 1e-6,
            eps_rel: 1e-6,
            eps_infeasible: 1e-7,
            max_iter: 20000,
            sigma: 1e-6,
            alpha: 1.6,
            rho0: 0.1,
            adaptive_rho: true,
            check_interval: 25,
            polish: true,
            scaling_iters: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    /// Residuals met the requested tolerances.
    Solved,
    /// The active-set polish produced an exact KKT point (within the
    /// requested tolerances or better).
    SolvedPolished,
    /// Iteration cap reached; the returned iterate is the last one.
    MaxIterations,
    /// A certificate of primal infeasibility was found.
    PrimalInfeasible,
    /// A certificate of dual infeasibility (unboundedness) was found.
    DualInfeasible,
}

impl QpStatus {
    /// True for both plain and polished convergence.
    pub fn is_solved(self) -> bool {
        matches!(self, QpStatus::Solved | QpStatus::SolvedPolished)
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    /// Primal solution.
    pub x: DVector<f64>,
    /// Dual solution for the range constraints; positive entries push
    /// against upper bounds, negative against lower bounds.
    pub y: DVector<f64>,
    /// Objective value at `x`.
    pub objective: f64,
    pub status: QpStatus,
    pub iterations: usize,
    /// Max-norm of `Cx - z` at the returned iterate.
    pub primal_residual: f64,
    /// Max-norm of `Hx + q + C'y` at the returned iterate.
    pub dual_residual: f64,
}

/// A QP with fixed `H` and `C`, reusable across many right-hand sides.
#[derive(Clone)]
pub struct QpProblem {
    n: usize,
    m: usize,
    settings: QpSettings,
    /// Scaled Hessian `gamma * D H D`.
    hs: DMatrix<f64>,
    /// Scaled constraint matrix `E C D`.
    cs: DMatrix<f64>,
    /// Column scaling (applied to x).
    d: DVector<f64>,
    /// Row scaling (applied to constraint rows).
    e: DVector<f64>,
    /// Cost scaling.
    gamma: f64,
    rho: f64,
    /// Per-row step sizes (boosted on equality rows).
    rho_vec: DVector<f64>,
    /// Which rows were treated as equalities when the reduced system was
    /// last built.
    eq_mask: Vec<bool>,
    chol: nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>,
    /// Number of factorizations performed (setup + rho updates).
    pub factorizations: usize,
}

impl QpProblem {
    /// Validates shapes, equilibrates, and factors the reduced system once.
    pub fn new(h: DMatrix<f64>, c: DMatrix<f64>, settings: QpSettings) -> Result<Self, QpError> {
        let n = h.nrows();
        let m = c.nrows();
        if h.ncols() != n || (m > 0 && c.ncols() != n) {
            return Err(QpError::Dimensions {
                h_rows: h.nrows(),
                h_cols: h.ncols(),
                c_rows: c.nrows(),
                c_cols: c.ncols(),
            });
        }
        // Symmetrize defensively; callers assemble H from products that can
        // carry round-off asymmetry.
        let h = (&h + h.transpose()) * 0.5;

        let (hs, cs, d, e, gamma) = equilibrate(h, c, settings.scaling_iters);

        let rho = settings.rho0;
        let eq_mask = vec![false; m];
        let rho_vec = DVector::from_element(m, rho);
        let chol =
            factor_reduced(&hs, &cs, settings.sigma, &rho_vec).ok_or(QpError::Factorization)?;

        Ok(QpProblem {
            n,
            m,
            settings,
            hs,
            cs,
            d,
            e,
            gamma,
            rho,
            rho_vec,
            eq_mask,
            chol,
            factorizations: 1,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_constraints(&self) -> usize {
        self.m
    }

    /// Solves for the given linear cost and bounds. `warm` carries a primal
    /// and dual starting point (typically the previous solution, shifted).
    pub fn solve(
        &mut self,
        q: &DVector<f64>,
        l: &DVector<f64>,
        u: &DVector<f64>,
        warm: Option<(&DVector<f64>, &DVector<f64>)>,
    ) -> Result<QpSolution, QpError> {
        let (n, m) = (self.n, self.m);
        if q.len() != n || l.len() != m || u.len() != m {
            return Err(QpError::DataSize {
                q_len: q.len(),
                l_len: l.len(),
                u_len: u.len(),
                n,
                m,
            });
        }

        // Scale the data into the equilibrated space.
        let qs = DVector::from_fn(n, |i, _| self.gamma * self.d[i] * q[i]);
        let ls = DVector::from_fn(m, |i, _| self.e[i] * l[i]);
        let us = DVector::from_fn(m, |i, _| self.e[i] * u[i]);

        // Rows with l == u benefit from a much larger step size. Refactor
        // only if the equality pattern changed since the reduced system was
        // last built.
        let eq_mask: Vec<bool> = (0..m).map(|i| l[i] == u[i] && l[i].is_finite()).collect();
        if eq_mask != self.eq_mask {
            self.eq_mask = eq_mask;
            self.rebuild_reduced()?;
        }

        let mut x = DVector::zeros(n);
        let mut y = DVector::zeros(m);
        if let Some((xw, yw)) = warm {
            if xw.len() == n && yw.len() == m {
                for i in 0..n {
                    x[i] = xw[i] / self.d[i];
                }
                for i in 0..m {
                    y[i] = self.gamma * yw[i] / self.e[i];
                }
            }
        }
        let mut z = clamp_vec(&(&self.cs * &x), &ls, &us);

        let mut iterations = 0;
        let mut status = QpStatus::MaxIterations;
        let mut primal_residual = f64::INFINITY;
        let mut dual_residual = f64::INFINITY;
        // Scaled-space solution accepted from the polish step, if any.
        let mut polished: Option<(DVector<f64>, DVector<f64>)> = None;

        let mut prev_x = x.clone();
        let mut prev_y = y.clone();

        let mut tmp_m = DVector::zeros(m);
        let mut x_tilde = DVector::zeros(n);
        let mut z_tilde = DVector::zeros(m);

        // Polish attempts are rationed: first when the residuals come
        // within three orders of magnitude of the target, then backing off
        // geometrically while unsuccessful.
        let mut next_polish = 0usize;
        let mut polish_backoff = self.settings.check_interval;

        while iterations < self.settings.max_iter {
            iterations += 1;

            // Reduced-system solve for the affine step:
            //   (H + sigma I + C' diag(rho) C) x~ = sigma x - q + C'(rho z - y)
            //   z~ = C x~
            for i in 0..m {
                tmp_m[i] = self.rho_vec[i] * z[i] - y[i];
            }
            x_tilde.gemv_tr(1.0, &self.cs, &tmp_m, 0.0);
            for i in 0..n {
                x_tilde[i] += self.settings.sigma * x[i] - qs[i];
            }
            self.chol.solve_mut(&mut x_tilde);
            z_tilde.gemv(1.0, &self.cs, &x_tilde, 0.0);

            // Over-relaxed updates with projection onto the bounds.
            let a = self.settings.alpha;
            for i in 0..n {
                x[i] = a * x_tilde[i] + (1.0 - a) * x[i];
            }
            for i in 0..m {
                let zr = a * z_tilde[i] + (1.0 - a) * z[i];
                let z_new = (zr + y[i] / self.rho_vec[i]).clamp(ls[i], us[i]);
                y[i] += self.rho_vec[i] * (zr - z_new);
                z[i] = z_new;
            }

            let check_now = iterations % self.settings.check_interval == 0
                || iterations == self.settings.max_iter;
            if !check_now {
                continue;
            }

            let res = self.residuals(&x, &z, &y, &qs);
            primal_residual = res.prim;
            dual_residual = res.dual;
            let eps_prim = self.settings.eps_abs + self.settings.eps_rel * res.prim_scale;
            let eps_dual = self.settings.eps_abs + self.settings.eps_rel * res.dual_scale;
            if res.prim <= eps_prim && res.dual <= eps_dual {
                status = QpStatus::Solved;
                break;
            }

            // Infeasibility certificates from the one-interval deltas.
            let dx = &x - &prev_x;
            let dy = &y - &prev_y;
            if self.primal_infeasible(&dy, l, u) {
                status = QpStatus::PrimalInfeasible;
                break;
            }
            if self.dual_infeasible(&dx, &qs, l, u) {
                status = QpStatus::DualInfeasible;
                break;
            }
            prev_x.copy_from(&x);
            prev_y.copy_from(&y);

            // The support of y is the splitting's current guess of the
            // active set; once the iterate is close, jumping to the exact
            // KKT point of that guess usually finishes the job.
            if self.settings.polish
                && m > 0
                && iterations >= next_polish
                && res.prim <= 1e3 * eps_prim
                && res.dual <= 1e3 * eps_dual
            {
                if let Some((xp, yp, resp)) = self.polish_candidate(&qs, &ls, &us, &y) {
                    let ep = self.settings.eps_abs + self.settings.eps_rel * resp.prim_scale;
                    let ed = self.settings.eps_abs + self.settings.eps_rel * resp.dual_scale;
                    if resp.prim <= ep && resp.dual <= ed {
                        primal_residual = resp.prim;
                        dual_residual = resp.dual;
                        polished = Some((xp, yp));
                        status = QpStatus::SolvedPolished;
                        break;
                    }
                }
                next_polish = iterations + polish_backoff;
                polish_backoff *= 2;
            }

            if self.settings.adaptive_rho {
                let ratio = ((res.prim / res.prim_scale.max(1e-30))
                    / (res.dual / res.dual_scale.max(1e-30)).max(1e-30))
                .sqrt();
                if ratio > 5.0 || ratio < 0.2 {
                    self.rho = (self.rho * ratio).clamp(1e-6, 1e6);
                    self.rebuild_reduced()?;
                }
            }
        }

        // A converged splitting iterate can still be refined; a truncated
        // run can sometimes be rescued. Both reuse the polish step, with
        // acceptance rules that never make the returned point worse.
        if self.settings.polish && m > 0 && polished.is_none() {
            if let Some((xp, yp, resp)) = self.polish_candidate(&qs, &ls, &us, &y) {
                let ep = self.settings.eps_abs + self.settings.eps_rel * resp.prim_scale;
                let ed = self.settings.eps_abs + self.settings.eps_rel * resp.dual_scale;
                let accept = match status {
                    QpStatus::Solved => {
                        resp.prim.max(resp.dual) < primal_residual.max(dual_residual)
                    }
                    QpStatus::MaxIterations => resp.prim <= ep && resp.dual <= ed,
                    _ => false,
                };
                if accept {
                    primal_residual = resp.prim;
                    dual_residual = resp.dual;
                    polished = Some((xp, yp));
                    status = QpStatus::SolvedPolished;
                }
            }
        }

        if let Some((xp, yp)) = polished {
            x = xp;
            y = yp;
        }

        // Back to the original space.
        let x_out = DVector::from_fn(n, |i, _| self.d[i] * x[i]);
        let y_out = DVector::from_fn(m, |i, _| self.e[i] * y[i] / self.gamma);

        // Objective in the original space, computed from scaled quantities:
        // obj = (0.5 x_s'Hs x_s + qs'x_s) / gamma.
        let objective = (0.5 * (&self.hs * &x).dot(&x) + qs.dot(&x)) / self.gamma;

        Ok(QpSolution {
            x: x_out,
            y: y_out,
            objective,
            status,
            iterations,
            primal_residual,
            dual_residual,
        })
    }

    fn rebuild_reduced(&mut self) -> Result<(), QpError> {
        self.rho_vec = DVector::from_fn(self.m, |i, _| {
            let r = if self.eq_mask[i] {
                self.rho * 1e3
            } else {
                self.rho
            };
            r.clamp(1e-6, 1e6)
        });
        self.chol = factor_reduced(&self.hs, &self.cs, self.settings.sigma, &self.rho_vec)
            .ok_or(QpError::Factorization)?;
        self.factorizations += 1;
        Ok(())
    }

    fn residuals(
        &self,
        xs: &DVector<f64>,
        zs: &DVector<f64>,
        ys: &DVector<f64>,
        qs: &DVector<f64>,
    ) -> Residuals {
        let (n, m) = (self.n, self.m);
        // Unscaled primal residual: E^-1 (Cs x - z).
        let cx = &self.cs * xs;
        let mut prim = 0.0f64;
        let mut prim_scale = 0.0f64;
        for i in 0..m {
            prim = prim.max(((cx[i] - zs[i]) / self.e[i]).abs());
            prim_scale = prim_scale
                .max((cx[i] / self.e[i]).abs())
                .max((zs[i] / self.e[i]).abs());
        }
        // Unscaled dual residual: D^-1 (Hs x + qs + Cs'y) / gamma.
        let hx = &self.hs * xs;
        let cty = self.cs.transpose() * ys;
        let mut dual = 0.0f64;
        let mut dual_scale = 0.0f64;
        for i in 0..n {
            let di = self.d[i] * self.gamma;
            dual = dual.max(((hx[i] + qs[i] + cty[i]) / di).abs());
            dual_scale = dual_scale
                .max((hx[i] / di).abs())
                .max((qs[i] / di).abs())
                .max((cty[i] / di).abs());
        }
        Residuals {
            prim,
            dual,
            prim_scale,
            dual_scale,
        }
    }

    fn primal_infeasible(&self, dys: &DVector<f64>, l: &DVector<f64>, u: &DVector<f64>) -> bool {
        let m = self.m;
        if m == 0 {
            return false;
        }
        // Unscale the dual delta.
        let dy = DVector::from_fn(m, |i, _| self.e[i] * dys[i] / self.gamma);
        let norm = dy.amax();
        if norm <= 1e-14 {
            return false;
        }
        let eps = self.settings.eps_infeasible * norm;
        // C' dy must vanish.
        let ct_dy = self.cs.transpose() * dys;
        for i in 0..self.n {
            if (ct_dy[i] / (self.d[i] * self.gamma)).abs() > eps {
                return false;
            }
        }
        // Support function of the constraint set along dy must be negative.
        let mut support = 0.0;
        for i in 0..m {
            if dy[i] > 0.0 {
                if !u[i].is_finite() {
                    if dy[i] > eps {
                        return false;
                    }
                } else {
                    support += u[i] * dy[i];
                }
            } else if dy[i] < 0.0 {
                if !l[i].is_finite() {
                    if -dy[i] > eps {
                        return false;
                    }
                } else {
                    support += l[i] * dy[i];
                }
            }
        }
        support < -eps
    }

    fn dual_infeasible(
        &self,
        dxs: &DVector<f64>,
        qs: &DVector<f64>,
        l: &DVector<f64>,
        u: &DVector<f64>,
    ) -> bool {
        let dx = DVector::from_fn(self.n, |i, _| self.d[i] * dxs[i]);
        let norm = dx.amax();
        if norm <= 1e-14 {
            return false;
        }
        let eps = self.settings.eps_infeasible * norm;
        // H dx must vanish and the cost must strictly improve along dx.
        let h_dx = &self.hs * dxs;
        for i in 0..self.n {
            if (h_dx[i] / (self.d[i] * self.gamma)).abs() > eps {
                return false;
            }
        }
        if qs.dot(dxs) / self.gamma >= -eps {
            return false;
        }
        // C dx must be a recession direction of the constraint box.
        let c_dx = &self.cs * dxs;
        for i in 0..self.m {
            let v = c_dx[i] / self.e[i];
            if u[i].is_finite() && v > eps {
                return false;
            }
            if l[i].is_finite() && v < -eps {
                return false;
            }
        }
        true
    }

    /// Solves the KKT system restricted to the rows where the current dual
    /// iterate is nonzero (the splitting keeps exact zeros on inactive
    /// rows), with light regularization plus iterative refinement against
    /// the unregularized system. Returns a scaled-space candidate and its
    /// residuals, or None when the reduced system is singular or the
    /// multiplier signs contradict the assumed active bounds.
    fn polish_candidate(
        &self,
        qs: &DVector<f64>,
        ls: &DVector<f64>,
        us: &DVector<f64>,
        ys: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, Residuals)> {
        let n = self.n;
        let eps_act = 1e-10 * ys.amax().max(1.0);
        // (row, pinned bound, pinned at upper?)
        let mut active: Vec<(usize, f64, bool)> = Vec::new();
        for i in 0..self.m {
            if ys[i] < -eps_act {
                active.push((i, ls[i], false));
            } else if ys[i] > eps_act {
                active.push((i, us[i], true));
            }
        }
        if active.iter().any(|&(_, b, _)| !b.is_finite()) {
            return None;
        }
        let k = active.len();
        let delta = 1e-9;
        let dim = n + k;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(&self.hs);
        for i in 0..n {
            kkt[(i, i)] += delta;
        }
        for (row, &(ci, _, _)) in active.iter().enumerate() {
            for j in 0..n {
                kkt[(n + row, j)] = self.cs[(ci, j)];
                kkt[(j, n + row)] = self.cs[(ci, j)];
            }
            kkt[(n + row, n + row)] = -delta;
        }
        let lu = kkt.lu();
        let mut rhs = DVector::zeros(dim);
        for i in 0..n {
            rhs[i] = -qs[i];
        }
        for (row, &(_, b, _)) in active.iter().enumerate() {
            rhs[n + row] = b;
        }
        let mut sol = lu.solve(&rhs)?;
        // Refine against the unregularized KKT operator.
        for _ in 0..3 {
            let mut resid = rhs.clone();
            let xs = sol.rows(0, n).into_owned();
            let ya = sol.rows(n, k).into_owned();
            let hx = &self.hs * &xs;
            for i in 0..n {
                resid[i] -= hx[i];
            }
            for (row, &(ci, _, _)) in active.iter().enumerate() {
                let mut cx = 0.0;
                for j in 0..n {
                    cx += self.cs[(ci, j)] * xs[j];
                }
                resid[n + row] -= cx;
                for j in 0..n {
                    resid[j] -= self.cs[(ci, j)] * ya[row];
                }
            }
            let corr = lu.solve(&resid)?;
            sol += corr;
        }
        // A multiplier pushing away from its pinned bound means the active
        // set was misidentified.
        for (row, &(ci, _, at_upper)) in active.iter().enumerate() {
            if ls[ci] == us[ci] {
                continue;
            }
            let y_unscaled = self.e[ci] * sol[n + row] / self.gamma;
            if at_upper && y_unscaled < -self.settings.eps_abs {
                return None;
            }
            if !at_upper && y_unscaled > self.settings.eps_abs {
                return None;
            }
        }
        let xs = sol.rows(0, n).into_owned();
        let mut ys_full = DVector::zeros(self.m);
        for (row, &(ci, _, _)) in active.iter().enumerate() {
            ys_full[ci] = sol[n + row];
        }
        let zs = clamp_vec(&(&self.cs * &xs), ls, us);
        let res = self.residuals(&xs, &zs, &ys_full, qs);
        Some((xs, ys_full, res))
    }
}

struct Residuals {
    prim: f64,
    dual: f64,
    prim_scale: f64,
    dual_scale: f64,
}

fn clamp_vec(v: &DVector<f64>, l: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| v[i].clamp(l[i], u[i]))
}

/// Modified Ruiz equilibration of the stacked matrix [[H, C'], [C, 0]],
/// followed by a single cost scaling derived from the equilibrated H.
/// Returns (Hs, Cs, D, E, gamma) with Hs = gamma*D H D and Cs = E C D.
fn equilibrate(
    h: DMatrix<f64>,
    c: DMatrix<f64>,
    iters: usize,
) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>, DVector<f64>, f64) {
    let n = h.nrows();
    let m = c.nrows();
    let mut hs = h;
    let mut cs = c;
    let mut d = DVector::from_element(n, 1.0);
    let mut e = DVector::from_element(m, 1.0);

    for _ in 0..iters {
        // Column norms over the stacked matrix for the x block.
        let mut dx = DVector::from_element(n, 1.0);
        for j in 0..n {
            let mut norm = 0.0f64;
            for i in 0..n {
                norm = norm.max(hs[(i, j)].abs());
            }
            for i in 0..m {
                norm = norm.max(cs[(i, j)].abs());
            }
            if norm > 1e-12 {
                dx[j] = 1.0 / norm.sqrt();
            }
        }
        // Row norms of C for the constraint block (the (2,2) block is zero,
        // and the C' block mirrors C).
        let mut de = DVector::from_element(m, 1.0);
        for i in 0..m {
            let mut norm = 0.0f64;
            for j in 0..n {
                norm = norm.max(cs[(i, j)].abs());
            }
            if norm > 1e-12 {
                de[i] = 1.0 / norm.sqrt();
            }
        }
        for i in 0..n {
            for j in 0..n {
                hs[(i, j)] *= dx[i] * dx[j];
            }
        }
        for i in 0..m {
            for j in 0..n {
                cs[(i, j)] *= de[i] * dx[j];
            }
        }
        for j in 0..n {
            d[j] *= dx[j];
        }
        for i in 0..m {
            e[i] *= de[i];
        }
    }

    // Cost normalization from the mean column norm of the equilibrated H.
    let mut mean = 0.0;
    for j in 0..n {
        let mut norm = 0.0f64;
        for i in 0..n {
            norm = norm.max(hs[(i, j)].abs());
        }
        mean += norm;
    }
    mean /= n.max(1) as f64;
    let gamma = if mean > 1e-12 { 1.0 / mean } else { 1.0 };
    hs *= gamma;

    (hs, cs, d, e, gamma)
}

/// Factors H + sigma*I + C' diag(rho) C.
fn factor_reduced(
    hs: &DMatrix<f64>,
    cs: &DMatrix<f64>,
    sigma: f64,
    rho_vec: &DVector<f64>,
) -> Option<nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>> {
    let n = hs.nrows();
    let m = cs.nrows();
    let mut reduced = hs.clone();
    for i in 0..n {
        reduced[(i, i)] += sigma;
    }
    if m > 0 {
        // reduced += C' diag(rho) C, built column-block-wise.
        let mut scaled = cs.clone();
        for i in 0..m {
            for j in 0..n {
                scaled[(i, j)] *= rho_vec[i];
            }
        }
        reduced.gemm_tr(1.0, cs, &scaled, 1.0);
    }
    nalgebra::linalg::Cholesky::new(reduced)
}
