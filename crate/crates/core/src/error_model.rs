//! Frenet-frame path-following error coordinates and their spatial
//! dynamics.
//!
//! The error state is x̃ = [z̃, θ̃, β̃_N, …, β̃_1]:
//! * z̃ — lateral offset of the guidance body's axle, positive to the left
//!   of the nominal heading;
//! * θ̃ — heading error of the guidance body;
//! * β̃_i — joint-angle errors, rear joint first.
//!
//! With s the arc length of the nominal motion and v̄ = ±1 its direction,
//! the exact spatial dynamics are
//!
//!   dz̃/ds  = v̄ (1 − κ_r z̃) tan(θ̃ + γ̃_N)
//!   dθ̃/ds  = v̄ [ c · κ_N(β_r+β̃, u_r+ũ) − κ_r ]
//!   dβ̃_i/ds = v̄ [ c · f_{β_i}(β_r+β̃, u_r+ũ) − f_{β_i}(β_r, u_r) ]
//!
//! where c = (1 − κ_r z̃)/cos(θ̃ + γ̃_N). The transform is valid while
//! 1 − κ_r z̃ > 0 and |θ̃ + γ̃_N| < π/2.

use crate::path::{Path, PathPoint, Projection};
use crate::vehicle::{two_trailer, Vehicle};
use nalgebra::{DMatrix, DVector};

/// Wrap an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a - two_pi * (a / two_pi).round();
    if w <= -std::f64::consts::PI {
        w += two_pi;
    }
    w
}

/// Error coordinates in structured form. Joint errors are kept in chain
/// order (β̃_1 first); [`ErrorState::to_vector`] emits the conventional
/// stacked order with the rear joint first.
#[derive(Debug, Clone)]
pub struct ErrorState {
    pub z: f64,
    pub theta: f64,
    /// Chain order β̃_1..β̃_N.
    pub betas: Vec<f64>,
}

impl ErrorState {
    /// Stack as [z̃, θ̃, β̃_N, …, β̃_1].
    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(2 + self.betas.len());
        v.push(self.z);
        v.push(self.theta);
        v.extend(self.betas.iter().rev());
        DVector::from_vec(v)
    }

    pub fn from_vector(x: &DVector<f64>) -> Self {
        let n = x.len() - 2;
        ErrorState {
            z: x[0],
            theta: x[1],
            betas: (0..n).map(|i| x[1 + n - i]).collect(),
        }
    }
}

/// Error model bound to a vehicle.
#[derive(Debug, Clone)]
pub struct ErrorModel {
    pub vehicle: Vehicle,
}

/// Finite-difference step for the numeric Jacobians.
const FD_STEP: f64 = 1e-6;

impl ErrorModel {
    pub fn new(vehicle: Vehicle) -> Self {
        ErrorModel { vehicle }
    }

    /// Project the measured simulation state onto the path (progress never
    /// moves backwards past `s_prev`) and form the error vector.
    pub fn compute_error(
        &self,
        state: &[f64],
        path: &Path,
        s_prev: f64,
    ) -> (Projection, DVector<f64>) {
        let n = self.vehicle.n_trailers();
        let proj = path.project(state[0], state[1], s_prev);
        let mut x = Vec::with_capacity(2 + n);
        x.push(proj.z);
        x.push(wrap_angle(state[2] - proj.point.theta));
        for i in 0..n {
            // state carries β_N..β_1, the path sample β_1..β_N
            let beta = state[3 + i];
            let beta_r = proj.point.betas[n - 1 - i];
            x.push(wrap_angle(beta - beta_r));
        }
        (proj, DVector::from_vec(x))
    }

    /// Exact spatial error dynamics dx̃/ds at a path sample, for direction
    /// v̄ = `dir`.
    pub fn spatial_dynamics(
        &self,
        x: &DVector<f64>,
        u_dev: &DVector<f64>,
        at: &PathPoint,
        dir: f64,
    ) -> DVector<f64> {
        let n = self.vehicle.n_trailers();
        let m = self.vehicle.n_controls();
        debug_assert_eq!(x.len(), 2 + n);
        debug_assert_eq!(u_dev.len(), m);
        let u: Vec<f64> = at.u.iter().zip(u_dev.iter()).map(|(r, d)| r + d).collect();
        // β_r + β̃ in chain order (x carries β̃_N..β̃_1)
        let betas: Vec<f64> = (0..n).map(|i| at.betas[i] + x[1 + n - i]).collect();
        let gamma_dev = self.vehicle.gamma_last(&u) - self.vehicle.gamma_last(&at.u);
        let chi = x[1] + gamma_dev;
        let kr = at.curvature;
        let c = (1.0 - kr * x[0]) / chi.cos();
        let ch = self.vehicle.chain(&betas, &u);
        let rates = ch.joint_rates();
        let mut d = Vec::with_capacity(2 + n);
        d.push(dir * (1.0 - kr * x[0]) * chi.tan());
        d.push(dir * (c * ch.curvature() - kr));
        for i in 0..n {
            // output rows β̃_N..β̃_1
            let idx = n - 1 - i;
            d.push(dir * (c * rates[idx] - at.joint_rates[idx]));
        }
        DVector::from_vec(d)
    }

    /// Jacobians (A, B) of the spatial dynamics at the origin of the error
    /// coordinates, by central finite differences. The result is
    /// normalised by the direction sign, so it is the same for forward and
    /// backward traversal.
    pub fn linearize(&self, at: &PathPoint) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = 2 + self.vehicle.n_trailers();
        let m = self.vehicle.n_controls();
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, m);
        let x0 = DVector::zeros(n);
        let u0 = DVector::zeros(m);
        for j in 0..n {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[j] += FD_STEP;
            xm[j] -= FD_STEP;
            let fp = self.spatial_dynamics(&xp, &u0, at, 1.0);
            let fm = self.spatial_dynamics(&xm, &u0, at, 1.0);
            a.set_column(j, &((fp - fm) / (2.0 * FD_STEP)));
        }
        for j in 0..m {
            let mut up = u0.clone();
            let mut um = u0.clone();
            up[j] += FD_STEP;
            um[j] -= FD_STEP;
            let fp = self.spatial_dynamics(&x0, &up, at, 1.0);
            let fm = self.spatial_dynamics(&x0, &um, at, 1.0);
            b.set_column(j, &((fp - fm) / (2.0 * FD_STEP)));
        }
        (a, b)
    }

    /// Closed-form Jacobians for a two-trailer chain with on-axle second
    /// hitch. Returns `None` for other configurations. Agrees with
    /// [`ErrorModel::linearize`] to truncation error and is cheaper, so the
    /// controller prefers it when applicable.
    pub fn linearize_closed_form(&self, at: &PathPoint) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let v = &self.vehicle;
        if v.n_trailers() != 2 || v.hitch_offsets[1] != 0.0 {
            return None;
        }
        let (m1, l1, l2) = (v.hitch_offsets[0], v.lengths[0], v.lengths[1]);
        let b1 = at.betas[0];
        let b2 = at.betas[1];
        let k0 = at.u[0];
        let g2 = v.gamma_last(&at.u);
        let den = two_trailer::denom(b1, k0, m1);
        let cb2 = b2.cos();
        let cg2 = g2.cos();
        let sg2 = g2.sin();
        let s2g = (b2 - g2).sin();
        let c2g = (b2 - g2).cos();
        let kr = s2g / (l2 * cb2);
        // q = f-numerator of the rear joint rate, g = of the front one
        let q = (b1.sin() - m1 * b1.cos() * k0) / l1;
        let gfun = k0 - b1.sin() / l1 + m1 * b1.cos() * k0 / l1;

        let a21 = -kr * kr;
        let a23 = c2g / (l2 * cb2) + s2g * b2.tan() / (l2 * cb2);
        let a31 = -kr * (cg2 * q / (cb2 * den) - kr);
        let a33 = cg2 * (b2.sin() * q / (cb2 * cb2 * den) - 1.0 / (cb2 * cb2 * l2));
        let a34 = cg2 * (1.0 + k0 * k0 * m1 * m1) / (l1 * cb2 * den * den);
        let a41 = -kr * cg2 * gfun / (cb2 * den);
        let a43 = cg2 * gfun * b2.tan() / (cb2 * den);
        let a44 = -cg2 * (1.0 + k0 * k0 * m1 * m1 + k0 * k0 * l1 * m1 * b1.cos()
            - k0 * l1 * b1.sin())
            / (l1 * cb2 * den * den);

        let b22 = -c2g / (l2 * cb2);
        let b31 = -m1 * cg2 / (l1 * cb2 * den * den);
        let b32 = c2g / (l2 * cb2) - q * sg2 / (cb2 * den);
        let b41 = cg2 * (m1 + l1 * b1.cos()) / (l1 * cb2 * den * den);
        let b42 = -sg2 * gfun / (cb2 * den);

        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                a21, 0.0, a23, 0.0, //
                a31, 0.0, a33, a34, //
                a41, 0.0, a43, a44,
            ],
        );
        let b = if v.steered.is_empty() {
            DMatrix::from_row_slice(4, 1, &[0.0, 0.0, b31, b41])
        } else {
            DMatrix::from_row_slice(4, 2, &[0.0, 1.0, 0.0, b22, b31, b32, b41, b42])
        };
        Some((a, b))
    }

    /// Jacobians for the controller: closed form when available, finite
    /// differences otherwise.
    pub fn models(&self, at: &PathPoint) -> (DMatrix<f64>, DMatrix<f64>) {
        self.linearize_closed_form(at)
            .unwrap_or_else(|| self.linearize(at))
    }

    /// Forward-Euler discretisation over one sampling distance:
    /// F = I + Δs v̄ A, G = Δs v̄ B.
    pub fn discretize(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        ds: f64,
        dir: f64,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = a.nrows();
        let f = DMatrix::identity(n, n) + a * (ds * dir);
        let g = b * (ds * dir);
        (f, g)
    }
}
