//! Path-following controllers: a linear MPC over the spatial error
//! dynamics, and a saturated LQ baseline.
//!
//! The MPC predicts the error state over a lookahead window of `horizon`
//! steps of `ds` meters along the path, using models linearized at the
//! reference points of the window. The decision variables are control
//! deviations from the reference controls plus, when soft joint
//! constraints are enabled, two slack variables per joint per predicted
//! step. Hard constraints keep the *absolute* controls inside their
//! magnitude and rate bounds; joint-angle bounds are softened so the QP
//! stays feasible in emergencies.
//!
//! Because the Hessian and constraint matrix only depend on the model
//! sequence, both are cached together with the KKT factorization and
//! reused as long as the models along the window are unchanged — on a
//! straight path that means a single factorization per episode.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error_model::ErrorModel;
use crate::numcore::{dare, DareError, QpError, QpProblem, QpSettings, QpStatus};
use crate::path::{Path, PathPoint, Projection};
use crate::vehicle::Vehicle;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("error weight vector has length {got}, expected {expected}")]
    ErrorWeightLength { got: usize, expected: usize },
    #[error("control weight vector has length {got}, expected {expected}")]
    ControlWeightLength { got: usize, expected: usize },
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("step length must be positive, got {0}")]
    BadStep(f64),
    #[error("speed must be nonzero")]
    ZeroSpeed,
    #[error("terminal cost computation failed: {0}")]
    Dare(#[from] DareError),
    #[error("QP setup failed: {0}")]
    Qp(#[from] QpError),
}

/// Tuning for both controllers. Weight vectors are diagonals: the error
/// weights act on the output vector produced by [`z_map`] (lateral offset,
/// heading error, and joint errors of every body, rear to front), the
/// control weights on the control deviation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    /// Prediction steps.
    pub horizon: usize,
    /// Arc-length per prediction step (meters).
    pub ds: f64,
    /// Diagonal of the output weight, in z-map order.
    pub error_weights: Vec<f64>,
    /// Common scale applied to all error weights.
    pub error_weight_scale: f64,
    /// Diagonal of the control-deviation weight.
    pub control_weights: Vec<f64>,
    /// Enable softened joint-angle bounds over the prediction window.
    pub soft_constraints: bool,
    /// Quadratic penalty on each joint-bound slack.
    pub soft_weight_quadratic: f64,
    /// Linear penalty on each joint-bound slack.
    pub soft_weight_linear: f64,
    /// QP iteration cap per control step.
    pub qp_max_iter: usize,
    /// QP primal/dual tolerance.
    pub qp_tolerance: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            horizon: 40,
            ds: 0.2,
            error_weights: vec![0.5, 1.0, 4.0, 4.0, 0.5, 1.0, 0.5, 1.0],
            error_weight_scale: 1.0 / 35.0,
            control_weights: vec![4.0, 3.0],
            soft_constraints: true,
            soft_weight_quadratic: 1e3,
            soft_weight_linear: 1e2,
            qp_max_iter: 20000,
            qp_tolerance: 1e-6,
        }
    }
}

impl ControllerConfig {
    /// Default tuning with weight vectors sized for the given vehicle.
    pub fn default_for(vehicle: &Vehicle) -> Self {
        let mut cfg = ControllerConfig::default();
        let nu = vehicle.n_controls();
        if cfg.control_weights.len() != nu {
            cfg.control_weights.truncate(nu);
            while cfg.control_weights.len() < nu {
                cfg.control_weights.push(1.0);
            }
        }
        let nz = 2 + 3 * vehicle.n_trailers();
        if cfg.error_weights.len() != nz {
            cfg.error_weights = vec![1.0; nz];
        }
        cfg
    }
}

/// Output map from the error state to per-body tracking errors.
///
/// The error state is `[z, theta, beta_N..beta_1]` for the last trailer.
/// Each preceding body's lateral and heading error follows from rigid-body
/// geometry: walking one hitch forward adds the trailer length times the
/// rear body's heading error plus the hitch offset times the front body's,
/// and the heading error grows by the joint error. Rows are ordered: the
/// full error state first, then (lateral, heading) pairs for each body
/// from trailer N-1 down to the tractor.
pub fn z_map(vehicle: &Vehicle) -> DMatrix<f64> {
    let n = vehicle.n_trailers();
    let nx = 2 + n;
    let nz = 2 + 3 * n;
    let mut m = DMatrix::zeros(nz, nx);
    for i in 0..nx {
        m[(i, i)] = 1.0;
    }
    // Row vectors for the current body's lateral and heading errors,
    // starting at trailer N and walking forward to the tractor.
    let mut z_row = DVector::zeros(nx);
    z_row[0] = 1.0;
    let mut th_row = DVector::zeros(nx);
    th_row[1] = 1.0;
    let mut out = nx;
    for i in (1..=n).rev() {
        // Index of joint i in the error state.
        let beta_idx = 2 + (n - i);
        let mut th_front = th_row.clone();
        th_front[beta_idx] += 1.0;
        let z_front = &z_row + vehicle.lengths[i - 1] * &th_row + vehicle.hitch_offsets[i - 1] * &th_front;
        for j in 0..nx {
            m[(out, j)] = z_front[j];
            m[(out + 1, j)] = th_front[j];
        }
        z_row = z_front;
        th_row = th_front;
        out += 2;
    }
    m
}

/// Stacks one-step models into prediction matrices: with models
/// `(F_k, G_k)` for `k = 0..N-1`, returns `(Phi, Gamma)` such that the
/// stacked prediction `[x_1; ...; x_N] = Phi x_0 + Gamma [u_0; ...; u_{N-1}]`.
pub fn condense(models: &[(DMatrix<f64>, DMatrix<f64>)]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = models.len();
    assert!(n > 0, "condense needs at least one model");
    let nx = models[0].0.nrows();
    let nu = models[0].1.ncols();
    let mut phi = DMatrix::zeros(n * nx, nx);
    let mut gamma = DMatrix::zeros(n * nx, n * nu);

    let mut phi_k = models[0].0.clone();
    phi.view_mut((0, 0), (nx, nx)).copy_from(&phi_k);
    gamma.view_mut((0, 0), (nx, nu)).copy_from(&models[0].1);
    for k in 1..n {
        let (f_k, g_k) = &models[k];
        // Gamma block row k = F_k * block row k-1, plus G_k in column k.
        let prev = gamma.view((nx * (k - 1), 0), (nx, nu * k)).into_owned();
        let updated = f_k * prev;
        gamma.view_mut((nx * k, 0), (nx, nu * k)).copy_from(&updated);
        gamma.view_mut((nx * k, nu * k), (nx, nu)).copy_from(g_k);
        phi_k = f_k * phi_k;
        phi.view_mut((nx * k, 0), (nx, nx)).copy_from(&phi_k);
    }
    (phi, gamma)
}

/// Result of one MPC control step.
#[derive(Debug, Clone)]
pub struct MpcStepInfo {
    /// Absolute control to apply, already clamped to the magnitude and
    /// rate bounds.
    pub u: DVector<f64>,
    /// Control deviation from the reference at the projected point.
    pub u_dev: DVector<f64>,
    /// Projection of the last trailer's axle onto the path.
    pub projection: Projection,
    /// Error state at the projected point.
    pub error: DVector<f64>,
    pub qp_iterations: usize,
    pub qp_status: QpStatus,
    /// Largest joint-bound slack in the accepted QP solution; zero when
    /// every predicted joint angle stays within bounds.
    pub slack_max: f64,
}

struct QpCache {
    models: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    soft: bool,
    direction: f64,
    qp: QpProblem,
    phi: DMatrix<f64>,
    /// W * Gamma precomputed for the linear cost term, with W applied
    /// block-wise (Q per stage, the terminal weight at the end).
    w_gamma: DMatrix<f64>,
}

/// Model predictive path-following controller.
pub struct MpcController {
    vehicle: Vehicle,
    error_model: ErrorModel,
    config: ControllerConfig,
    speed: f64,
    /// Error-state weight, `M' Qbar M` for the z-map `M`.
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    p_forward: DMatrix<f64>,
    p_backward: DMatrix<f64>,
    cache: Option<QpCache>,
    warm: Option<(DVector<f64>, DVector<f64>)>,
}

impl MpcController {
    /// `speed` is the tractor's longitudinal velocity; its magnitude
    /// converts the per-second control rate bounds into per-meter slew
    /// limits, its sign selects the terminal cost.
    pub fn new(vehicle: Vehicle, config: ControllerConfig, speed: f64) -> Result<Self, ControllerError> {
        if config.horizon == 0 {
            return Err(ControllerError::EmptyHorizon);
        }
        if !(config.ds > 0.0) {
            return Err(ControllerError::BadStep(config.ds));
        }
        if speed == 0.0 {
            return Err(ControllerError::ZeroSpeed);
        }
        let nz = 2 + 3 * vehicle.n_trailers();
        if config.error_weights.len() != nz {
            return Err(ControllerError::ErrorWeightLength {
                got: config.error_weights.len(),
                expected: nz,
            });
        }
        let nu = vehicle.n_controls();
        if config.control_weights.len() != nu {
            return Err(ControllerError::ControlWeightLength {
                got: config.control_weights.len(),
                expected: nu,
            });
        }

        let m = z_map(&vehicle);
        let qbar = DMatrix::from_diagonal(&DVector::from_iterator(
            nz,
            config.error_weights.iter().map(|w| w * config.error_weight_scale),
        ));
        let q = m.transpose() * qbar * m;
        let r = DMatrix::from_diagonal(&DVector::from_vec(config.control_weights.clone()));

        let error_model = ErrorModel::new(vehicle.clone());
        let p_forward = terminal_cost(&error_model, &q, &r, config.ds, 1.0)?;
        let p_backward = terminal_cost(&error_model, &q, &r, config.ds, -1.0)?;

        Ok(MpcController {
            vehicle,
            error_model,
            config,
            speed,
            q,
            r,
            p_forward,
            p_backward,
            cache: None,
            warm: None,
        })
    }

    pub fn vehicle(&self) -> &Vehicle {
        &self.vehicle
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    /// Error-state weight matrix used in the stage cost.
    pub fn state_weight(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Terminal weight for the given travel direction.
    pub fn terminal_weight(&self, direction: f64) -> &DMatrix<f64> {
        if direction >= 0.0 {
            &self.p_forward
        } else {
            &self.p_backward
        }
    }

    /// Drops the cached QP and warm start (e.g. when switching paths).
    pub fn reset(&mut self) {
        self.cache = None;
        self.warm = None;
    }

    /// Computes one control from the current vehicle state. `s_guess`
    /// seeds the path projection (pass the previous projection to keep it
    /// monotone); `u_prev` is the control applied at the previous step and
    /// anchors the rate constraint.
    pub fn step(
        &mut self,
        state: &DVector<f64>,
        path: &Path,
        s_guess: f64,
        u_prev: &DVector<f64>,
    ) -> Result<MpcStepInfo, ControllerError> {
        let (projection, x0) = self.error_model.compute_error(state.as_slice(), path, s_guess);
        let nb = self.config.horizon;
        let nu = self.vehicle.n_controls();
        let nx = 2 + self.vehicle.n_trailers();
        let nj = self.vehicle.n_trailers();
        let ds = self.config.ds;
        let dir = path.direction;

        // Reference points over the window: k = 0..=N.
        let points: Vec<PathPoint> = (0..=nb)
            .map(|k| path.sample_at(projection.s + k as f64 * ds))
            .collect();
        let models: Vec<(DMatrix<f64>, DMatrix<f64>)> = points[..nb]
            .iter()
            .map(|p| {
                let (a, b) = self.error_model.models(p);
                ErrorModel::discretize(&a, &b, ds, dir)
            })
            .collect();

        let soft = self.config.soft_constraints;
        let cache_ok = match &self.cache {
            Some(c) => c.soft == soft && c.direction == dir && c.models == models,
            None => false,
        };
        if !cache_ok {
            self.rebuild_cache(models, soft, dir)?;
        }
        let n_slack = if soft { 2 * nj * nb } else { 0 };
        let nv = nb * nu + n_slack;
        let n_rows = 2 * nb * nu + 2 * n_slack;

        // Linear cost: 2 Gamma' W Phi x0 on the controls, the linear slack
        // penalty on the slacks.
        let cache = self.cache.as_ref().expect("cache was just rebuilt");
        let phi_x0 = &cache.phi * &x0;
        let gu = 2.0 * cache.w_gamma.transpose() * &phi_x0;
        let mut qlin = DVector::zeros(nv);
        for i in 0..nb * nu {
            qlin[i] = gu[i];
        }
        for i in nb * nu..nv {
            qlin[i] = self.config.soft_weight_linear;
        }

        // Bounds.
        let u_max = self.vehicle.control_bounds();
        let rate_max = self.vehicle.control_rate_bounds();
        let mut l = DVector::from_element(n_rows, f64::NEG_INFINITY);
        let mut u = DVector::from_element(n_rows, f64::INFINITY);
        // Magnitude rows: -u_max - u_r(k) <= u_dev_k <= u_max - u_r(k).
        for k in 0..nb {
            for j in 0..nu {
                let row = k * nu + j;
                l[row] = -u_max[j] - points[k].u[j];
                u[row] = u_max[j] - points[k].u[j];
            }
        }
        // Rate rows. The per-meter slew bound divides the per-second rate
        // by the path speed of the last trailer, |v0| * f_vN.
        let mut cbar0 = vec![0.0; nu];
        for k in 0..nb {
            let fv = points[k].speed_ratio.abs().max(1e-9);
            for j in 0..nu {
                let row = nb * nu + k * nu + j;
                let cbar = rate_max[j] / (self.speed.abs() * fv) * ds;
                if k == 0 {
                    cbar0[j] = cbar;
                    let anchor = u_prev[j] - points[0].u[j];
                    l[row] = anchor - cbar;
                    u[row] = anchor + cbar;
                } else {
                    let dur = points[k].u[j] - points[k - 1].u[j];
                    l[row] = -dur - cbar;
                    u[row] = -dur + cbar;
                }
            }
        }
        // Soft joint rows: upper then lower per (step, joint), matching the
        // constraint matrix layout, then slack nonnegativity.
        if soft {
            let base = 2 * nb * nu;
            for k in 1..=nb {
                for j in 0..nj {
                    // Joint j here counts from the last trailer's joint
                    // backward-to-front as stored in the error state.
                    let beta_idx = 2 + j;
                    let joint_no = nj - j; // 1-based joint number
                    let beta_ref = points[k].betas[joint_no - 1];
                    let bound = self.vehicle.beta_max[joint_no - 1];
                    let phi_val = phi_x0[(k - 1) * nx + beta_idx];
                    let row_up = base + 2 * ((k - 1) * nj + j);
                    let row_low = row_up + 1;
                    u[row_up] = bound - beta_ref - phi_val;
                    l[row_low] = -bound - beta_ref - phi_val;
                }
            }
            let nn_base = base + 2 * nj * nb;
            for i in 0..n_slack {
                l[nn_base + i] = 0.0;
            }
        }

        // Warm start: shift the previous solution one step toward the
        // window start, padding the tail with zeros.
        let warm_shifted = self.warm.as_ref().map(|(x, y)| {
            let xs = shift_primal(x, nb, nu, nj, soft);
            let ys = shift_dual(y, nb, nu, nj, soft);
            (xs, ys)
        });

        let cache = self.cache.as_mut().expect("cache was just rebuilt");
        let sol = cache.qp.solve(
            &qlin,
            &l,
            &u,
            warm_shifted.as_ref().map(|(x, y)| (x, y)),
        )?;
        self.warm = Some((sol.x.clone(), sol.y.clone()));

        let mut u_dev = DVector::zeros(nu);
        for j in 0..nu {
            u_dev[j] = sol.x[j];
        }
        let mut slack_max = 0.0f64;
        for i in nb * nu..nv {
            slack_max = slack_max.max(sol.x[i].max(0.0));
        }

        // Apply: absolute control, clamped to the magnitude box and the
        // rate interval around the previously applied control. Both clamps
        // together land inside the intersection because u_prev is feasible.
        let mut u_apply = DVector::zeros(nu);
        for j in 0..nu {
            let raw = points[0].u[j] + u_dev[j];
            let boxed = raw.clamp(-u_max[j], u_max[j]);
            u_apply[j] = boxed.clamp(u_prev[j] - cbar0[j], u_prev[j] + cbar0[j]);
        }

        Ok(MpcStepInfo {
            u: u_apply,
            u_dev,
            projection,
            error: x0,
            qp_iterations: sol.iterations,
            qp_status: sol.status,
            slack_max,
        })
    }

    fn rebuild_cache(
        &mut self,
        models: Vec<(DMatrix<f64>, DMatrix<f64>)>,
        soft: bool,
        direction: f64,
    ) -> Result<(), ControllerError> {
        let nb = self.config.horizon;
        let nu = self.vehicle.n_controls();
        let nx = 2 + self.vehicle.n_trailers();
        let nj = self.vehicle.n_trailers();
        let (phi, gamma) = condense(&models);

        // W = blockdiag(Q, ..., Q, P).
        let p = self.terminal_weight(direction).clone();
        let mut w_gamma = gamma.clone();
        for k in 0..nb {
            let wk = if k + 1 < nb { &self.q } else { &p };
            let gb = wk * gamma.view((k * nx, 0), (nx, nb * nu));
            w_gamma.view_mut((k * nx, 0), (nx, nb * nu)).copy_from(&gb);
        }

        let n_slack = if soft { 2 * nj * nb } else { 0 };
        let nv = nb * nu + n_slack;
        let mut h = DMatrix::zeros(nv, nv);
        let huu = 2.0 * gamma.transpose() * &w_gamma;
        h.view_mut((0, 0), (nb * nu, nb * nu)).copy_from(&huu);
        for k in 0..nb {
            for j in 0..nu {
                h[(k * nu + j, k * nu + j)] += 2.0 * self.r[(j, j)];
            }
        }
        for i in nb * nu..nv {
            h[(i, i)] = 2.0 * self.config.soft_weight_quadratic;
        }

        let n_rows = 2 * nb * nu + 2 * n_slack;
        let mut c = DMatrix::zeros(n_rows, nv);
        // Magnitude rows: identity on each control block.
        for k in 0..nb {
            for j in 0..nu {
                c[(k * nu + j, k * nu + j)] = 1.0;
            }
        }
        // Rate rows: difference between consecutive control blocks.
        for k in 0..nb {
            for j in 0..nu {
                let row = nb * nu + k * nu + j;
                c[(row, k * nu + j)] = 1.0;
                if k > 0 {
                    c[(row, (k - 1) * nu + j)] = -1.0;
                }
            }
        }
        if soft {
            let base = 2 * nb * nu;
            for k in 1..=nb {
                for j in 0..nj {
                    let beta_idx = 2 + j;
                    let g_row = (k - 1) * nx + beta_idx;
                    let row_up = base + 2 * ((k - 1) * nj + j);
                    let row_low = row_up + 1;
                    for col in 0..nb * nu {
                        let v = gamma[(g_row, col)];
                        c[(row_up, col)] = v;
                        c[(row_low, col)] = v;
                    }
                    let slack_up = nb * nu + 2 * ((k - 1) * nj + j);
                    let slack_low = slack_up + 1;
                    c[(row_up, slack_up)] = -1.0;
                    c[(row_low, slack_low)] = 1.0;
                }
            }
            let nn_base = base + 2 * nj * nb;
            for i in 0..n_slack {
                c[(nn_base + i, nb * nu + i)] = 1.0;
            }
        }

        let settings = QpSettings {
            max_iter: self.config.qp_max_iter,
            eps_abs: self.config.qp_tolerance,
            eps_rel: self.config.qp_tolerance,
            ..QpSettings::default()
        };
        let qp = QpProblem::new(h, c, settings)?;
        self.cache = Some(QpCache {
            models,
            soft,
            direction,
            qp,
            phi,
            w_gamma,
        });
        // A different problem shape invalidates the warm start.
        if let Some((x, _)) = &self.warm {
            if x.len() != nv {
                self.warm = None;
            }
        }
        Ok(())
    }
}

fn shift_primal(x: &DVector<f64>, nb: usize, nu: usize, nj: usize, soft: bool) -> DVector<f64> {
    let mut out = DVector::zeros(x.len());
    for k in 0..nb - 1 {
        for j in 0..nu {
            out[k * nu + j] = x[(k + 1) * nu + j];
        }
    }
    // Hold the final control.
    for j in 0..nu {
        out[(nb - 1) * nu + j] = x[(nb - 1) * nu + j];
    }
    if soft {
        let base = nb * nu;
        for k in 0..nb - 1 {
            for i in 0..2 * nj {
                out[base + k * 2 * nj + i] = x[base + (k + 1) * 2 * nj + i];
            }
        }
    }
    out
}

fn shift_dual(y: &DVector<f64>, nb: usize, nu: usize, nj: usize, soft: bool) -> DVector<f64> {
    let mut out = DVector::zeros(y.len());
    // Magnitude and rate blocks.
    for group in 0..2 {
        let base = group * nb * nu;
        for k in 0..nb - 1 {
            for j in 0..nu {
                out[base + k * nu + j] = y[base + (k + 1) * nu + j];
            }
        }
    }
    if soft {
        for group in 0..2 {
            let base = 2 * nb * nu + group * 2 * nj * nb;
            for k in 0..nb - 1 {
                for i in 0..2 * nj {
                    out[base + k * 2 * nj + i] = y[base + (k + 1) * 2 * nj + i];
                }
            }
        }
    }
    out
}

/// Terminal cost: infinite-horizon cost-to-go of the straight-path model
/// in the given direction.
fn terminal_cost(
    error_model: &ErrorModel,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    ds: f64,
    direction: f64,
) -> Result<DMatrix<f64>, DareError> {
    let (f, g) = straight_discrete(error_model, ds, direction);
    let sol = dare(&f, &g, q, r, 1e-12, 200_000)?;
    Ok(sol.p)
}

/// One-step model on a straight reference in the given direction.
pub fn straight_discrete(
    error_model: &ErrorModel,
    ds: f64,
    direction: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let point = PathPoint::straight_origin(&error_model.vehicle);
    let (a, b) = error_model.models(&point);
    ErrorModel::discretize(&a, &b, ds, direction)
}

/// Saturated LQ baseline: `u = u_r + K x` with the infinite-horizon gain
/// of the straight-path model, clamped to the control magnitude bounds.
/// No rate limiting and no constraint handling — this is the comparison
/// policy, not a safe controller.
pub struct LqController {
    vehicle: Vehicle,
    error_model: ErrorModel,
    /// Feedback gain (already negated: `u = u_r + K x`).
    gain: DMatrix<f64>,
}

impl LqController {
    pub fn new(vehicle: Vehicle, config: &ControllerConfig, speed: f64) -> Result<Self, ControllerError> {
        if speed == 0.0 {
            return Err(ControllerError::ZeroSpeed);
        }
        let nz = 2 + 3 * vehicle.n_trailers();
        if config.error_weights.len() != nz {
            return Err(ControllerError::ErrorWeightLength {
                got: config.error_weights.len(),
                expected: nz,
            });
        }
        let nu = vehicle.n_controls();
        if config.control_weights.len() != nu {
            return Err(ControllerError::ControlWeightLength {
                got: config.control_weights.len(),
                expected: nu,
            });
        }
        let m = z_map(&vehicle);
        let qbar = DMatrix::from_diagonal(&DVector::from_iterator(
            nz,
            config.error_weights.iter().map(|w| w * config.error_weight_scale),
        ));
        let q = m.transpose() * qbar * m;
        let r = DMatrix::from_diagonal(&DVector::from_vec(config.control_weights.clone()));
        let error_model = ErrorModel::new(vehicle.clone());
        let (f, g) = straight_discrete(&error_model, config.ds, speed.signum());
        let sol = dare(&f, &g, &q, &r, 1e-12, 200_000)?;
        Ok(LqController {
            vehicle,
            error_model,
            gain: -sol.k,
        })
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    /// One control step; see [`MpcController::step`] for the projection
    /// seeding convention.
    pub fn step(&self, state: &DVector<f64>, path: &Path, s_guess: f64) -> LqStepInfo {
        let (projection, x0) = self.error_model.compute_error(state.as_slice(), path, s_guess);
        let u_max = self.vehicle.control_bounds();
        let nu = self.vehicle.n_controls();
        let fb = &self.gain * &x0;
        let mut u = DVector::zeros(nu);
        let mut u_raw = DVector::zeros(nu);
        for j in 0..nu {
            u_raw[j] = projection.point.u[j] + fb[j];
            u[j] = u_raw[j].clamp(-u_max[j], u_max[j]);
        }
        LqStepInfo {
            u,
            u_raw,
            projection,
            error: x0,
        }
    }
}

/// Result of one LQ control step.
#[derive(Debug, Clone)]
pub struct LqStepInfo {
    /// Saturated control.
    pub u: DVector<f64>,
    /// Commanded control before saturation.
    pub u_raw: DVector<f64>,
    pub projection: Projection,
    pub error: DVector<f64>,
}
