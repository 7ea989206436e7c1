//! Chain kinematics for a car-like tractor towing N trailers.
//!
//! Body 0 is the tractor; trailer i (1..=N) hangs off body i-1 at a hitch
//! located `hitch_offsets[i-1]` behind the rear axle of body i-1 and has
//! drawbar length `lengths[i-1]` from the hitch to its own axle. Trailer
//! axles may be actively steered (angle γ_i); unsteered axles have γ_i = 0.
//!
//! Conventions used throughout the crate:
//! * joint angle β_i = θ_{i-1} − θ_i;
//! * `betas` slices are ordered β_1, β_2, …, β_N (chain order);
//! * the control vector is `u = [κ_0, γ_a…]` with the steered trailer
//!   angles in ascending trailer order;
//! * simulation state vectors are `[x_N, y_N, θ_N, β_N, …, β_1]`, i.e. the
//!   guidance body pose first and joint angles rear-to-front.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VehicleError {
    #[error("vehicle must have at least one trailer")]
    NoTrailers,
    #[error("trailer {0}: drawbar length must be positive, got {1}")]
    BadLength(usize, f64),
    #[error("steered trailer index {0} out of range 1..={1}")]
    BadSteeredIndex(usize, usize),
    #[error("steered trailer indices must be strictly ascending")]
    UnsortedSteered,
    #[error("joint angle limit for joint {0} must lie in (0, pi/2), got {1}")]
    BadJointLimit(usize, f64),
    #[error("bound {0} must be positive, got {1}")]
    BadBound(&'static str, f64),
    #[error("no circular equilibrium for trailer {0} at curvature {1}")]
    NoEquilibrium(usize, f64),
}

/// Geometry and actuation limits of the articulated vehicle.
#[derive(Debug, Clone)]
pub struct Vehicle {
    /// Tractor wheelbase [m].
    pub l0: f64,
    /// Hitch offset M_i of each trailer: distance from the axle of body
    /// i-1 back to the hitch point [m]. Zero means on-axle hitching.
    pub hitch_offsets: Vec<f64>,
    /// Drawbar length L_i of each trailer: hitch to axle [m].
    pub lengths: Vec<f64>,
    /// Indices (1-based) of trailers with actively steered axles,
    /// ascending. Empty for a conventional (single-steered) vehicle.
    pub steered: Vec<usize>,
    /// Joint angle limits β̄_i [rad], one per joint.
    pub beta_max: Vec<f64>,
    /// Tractor curvature bound κ̄_0 [1/m].
    pub kappa0_max: f64,
    /// Tractor curvature slew bound [1/(m·s)].
    pub kappa0_rate: f64,
    /// Trailer steering bound γ̄ [rad] (shared by all steered axles).
    pub gamma_max: f64,
    /// Trailer steering slew bound [rad/s].
    pub gamma_rate: f64,
}

/// Per-body longitudinal speed and yaw rate scales, both normalised by the
/// tractor speed v_0.
#[derive(Debug, Clone)]
pub struct ChainState {
    /// v_i / v_0 for bodies 0..=N.
    pub speed: Vec<f64>,
    /// ω_i / v_0 for bodies 0..=N.
    pub yaw_rate: Vec<f64>,
}

impl ChainState {
    /// Speed ratio of the last trailer, f_{v_N} = v_N / v_0.
    pub fn speed_ratio(&self) -> f64 {
        *self.speed.last().unwrap()
    }

    /// Curvature of the last trailer's axle motion, κ_N = ω_N / v_N.
    pub fn curvature(&self) -> f64 {
        self.yaw_rate.last().unwrap() / self.speed.last().unwrap()
    }

    /// Joint rate functions f_{β_i} = β̇_i / v_N, i = 1..=N (chain order).
    pub fn joint_rates(&self) -> Vec<f64> {
        let vn = *self.speed.last().unwrap();
        (1..self.speed.len())
            .map(|i| (self.yaw_rate[i - 1] - self.yaw_rate[i]) / vn)
            .collect()
    }
}

impl Vehicle {
    pub fn new(
        l0: f64,
        hitch_offsets: Vec<f64>,
        lengths: Vec<f64>,
        steered: Vec<usize>,
        beta_max: Vec<f64>,
        kappa0_max: f64,
        kappa0_rate: f64,
        gamma_max: f64,
        gamma_rate: f64,
    ) -> Result<Self, VehicleError> {
        let n = lengths.len();
        if n == 0 {
            return Err(VehicleError::NoTrailers);
        }
        for (i, &l) in lengths.iter().enumerate() {
            if l <= 0.0 {
                return Err(VehicleError::BadLength(i + 1, l));
            }
        }
        let mut prev = 0usize;
        for &a in &steered {
            if a < 1 || a > n {
                return Err(VehicleError::BadSteeredIndex(a, n));
            }
            if a <= prev {
                return Err(VehicleError::UnsortedSteered);
            }
            prev = a;
        }
        for (i, &b) in beta_max.iter().enumerate() {
            if !(b > 0.0 && b < std::f64::consts::FRAC_PI_2) {
                return Err(VehicleError::BadJointLimit(i + 1, b));
            }
        }
        for (name, v) in [
            ("kappa0_max", kappa0_max),
            ("kappa0_rate", kappa0_rate),
            ("gamma_max", gamma_max),
            ("gamma_rate", gamma_rate),
        ] {
            if v <= 0.0 {
                return Err(VehicleError::BadBound(name, v));
            }
        }
        assert_eq!(hitch_offsets.len(), n, "one hitch offset per trailer");
        assert_eq!(beta_max.len(), n, "one joint limit per joint");
        Ok(Self {
            l0,
            hitch_offsets,
            lengths,
            steered,
            beta_max,
            kappa0_max,
            kappa0_rate,
            gamma_max,
            gamma_rate,
        })
    }

    /// Full-scale tractor with two long trailers, the rear one optionally
    /// carrying an actively steered axle. Used across tests, benches and
    /// the bundled example configurations.
    pub fn demo_two_trailer(active_rear_steering: bool) -> Self {
        Vehicle::new(
            4.62,
            vec![1.66, 0.0],
            vec![3.87, 8.0],
            if active_rear_steering { vec![2] } else { vec![] },
            vec![0.8, 0.8],
            0.18,
            0.13,
            0.35,
            0.8,
        )
        .expect("demo vehicle parameters are valid")
    }

    pub fn n_trailers(&self) -> usize {
        self.lengths.len()
    }

    /// Number of control inputs: tractor curvature plus one steering angle
    /// per actively steered trailer.
    pub fn n_controls(&self) -> usize {
        1 + self.steered.len()
    }

    /// Dimension of the error state: (z̃, θ̃, β̃_N..β̃_1).
    pub fn n_error_states(&self) -> usize {
        2 + self.n_trailers()
    }

    /// Steering angle γ_i of trailer i under control vector `u`
    /// (0 for unsteered trailers; i = 0 gives the tractor's 0).
    pub fn gamma(&self, u: &[f64], i: usize) -> f64 {
        match self.steered.iter().position(|&a| a == i) {
            Some(k) => u[1 + k],
            None => 0.0,
        }
    }

    /// Steering angle of the last trailer (the guidance body).
    pub fn gamma_last(&self, u: &[f64]) -> f64 {
        self.gamma(u, self.n_trailers())
    }

    /// Componentwise control magnitude bounds ū = [κ̄_0, γ̄…].
    pub fn control_bounds(&self) -> Vec<f64> {
        let mut b = vec![self.kappa0_max];
        b.extend(self.steered.iter().map(|_| self.gamma_max));
        b
    }

    /// Componentwise control rate bounds [κ̇̄_0, γ̇̄…] (time domain).
    pub fn control_rate_bounds(&self) -> Vec<f64> {
        let mut b = vec![self.kappa0_rate];
        b.extend(self.steered.iter().map(|_| self.gamma_rate));
        b
    }

    /// Propagate (v, ω) through every hitch. `betas` in chain order
    /// β_1..β_N; `u = [κ_0, γ_a…]`. All quantities are per unit tractor
    /// speed, so the result is valid for any v_0 by scaling.
    ///
    /// The recursion for trailer i with hitch offset M, drawbar L,
    /// steering γ_i and predecessor steering γ_{i-1}:
    ///   v_i cos γ_i = v_{i-1} cos(γ_{i-1}+β_i) + M ω_{i-1} sin β_i
    ///   ω_i L_i     = v_{i-1} sin(γ_{i-1}+β_i) − M ω_{i-1} cos β_i − v_i sin γ_i
    pub fn chain(&self, betas: &[f64], u: &[f64]) -> ChainState {
        let n = self.n_trailers();
        debug_assert_eq!(betas.len(), n);
        debug_assert_eq!(u.len(), self.n_controls());
        let mut speed = Vec::with_capacity(n + 1);
        let mut yaw_rate = Vec::with_capacity(n + 1);
        speed.push(1.0);
        yaw_rate.push(u[0]); // ω_0 / v_0 = κ_0
        let mut gamma_prev = 0.0;
        for i in 1..=n {
            let (m, l) = (self.hitch_offsets[i - 1], self.lengths[i - 1]);
            let beta = betas[i - 1];
            let gamma = self.gamma(u, i);
            let (vp, wp) = (speed[i - 1], yaw_rate[i - 1]);
            let v = (vp * (gamma_prev + beta).cos() + m * wp * beta.sin()) / gamma.cos();
            let w = (vp * (gamma_prev + beta).sin() - m * wp * beta.cos() - v * gamma.sin()) / l;
            speed.push(v);
            yaw_rate.push(w);
            gamma_prev = gamma;
        }
        ChainState { speed, yaw_rate }
    }

    /// Time derivative of the simulation state
    /// `[x_N, y_N, θ_N, β_N, …, β_1]` under controls `u` at tractor speed
    /// `v0`.
    pub fn state_derivative(&self, state: &[f64], u: &[f64], v0: f64) -> Vec<f64> {
        let n = self.n_trailers();
        debug_assert_eq!(state.len(), 3 + n);
        let theta = state[2];
        let mut betas: Vec<f64> = state[3..].to_vec();
        betas.reverse(); // state carries β_N..β_1
        let ch = self.chain(&betas, u);
        let vn = v0 * ch.speed_ratio();
        let heading = theta + self.gamma_last(u);
        let mut d = Vec::with_capacity(3 + n);
        d.push(vn * heading.cos());
        d.push(vn * heading.sin());
        d.push(v0 * ch.yaw_rate[n]);
        for i in (1..=n).rev() {
            d.push(v0 * (ch.yaw_rate[i - 1] - ch.yaw_rate[i]));
        }
        d
    }

    /// One classical Runge–Kutta step of the simulation state.
    pub fn rk4_step(&self, state: &[f64], u: &[f64], v0: f64, dt: f64) -> Vec<f64> {
        let ax = |s: &[f64], k: &[f64], h: f64| -> Vec<f64> {
            s.iter().zip(k).map(|(a, b)| a + h * b).collect()
        };
        let k1 = self.state_derivative(state, u, v0);
        let k2 = self.state_derivative(&ax(state, &k1, dt / 2.0), u, v0);
        let k3 = self.state_derivative(&ax(state, &k2, dt / 2.0), u, v0);
        let k4 = self.state_derivative(&ax(state, &k3, dt), u, v0);
        state
            .iter()
            .enumerate()
            .map(|(j, s)| s + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
            .collect()
    }

    /// Steady-state joint angles on a circle of tractor curvature κ_0 with
    /// all trailer steering at zero. At equilibrium every body shares the
    /// yaw rate ω = v_0 κ_0, which gives a closed form per joint:
    ///   a sin β + b cos β = c,  a = v_{i-1}, b = −M_i ω, c = ω L_i
    /// solved on the branch nearest the straight configuration.
    pub fn circle_equilibrium(&self, kappa0: f64) -> Result<Vec<f64>, VehicleError> {
        let w = kappa0;
        let mut v = 1.0;
        let mut betas = Vec::with_capacity(self.n_trailers());
        for i in 1..=self.n_trailers() {
            let (m, l) = (self.hitch_offsets[i - 1], self.lengths[i - 1]);
            let (a, b, c) = (v, -m * w, w * l);
            let r2 = a * a + b * b - c * c;
            if r2 < 0.0 {
                return Err(VehicleError::NoEquilibrium(i, kappa0));
            }
            // a sin β + b cos β = c ⇒ β = atan2(c, ±√r2) − atan2(b, a);
            // the +√ branch is the one continuous with β → 0 as κ_0 → 0.
            let beta = f64::atan2(c, r2.sqrt()) - f64::atan2(b, a);
            v = v * beta.cos() + m * w * beta.sin();
            betas.push(beta);
        }
        Ok(betas)
    }
}

/// Closed-form kinematic functions for a two-trailer chain with hitch
/// offset `m1` (first trailer), on-axle second hitch, drawbars `l1`, `l2`,
/// rear-axle steering `g2` and tractor curvature `k0`. These duplicate
/// [`Vehicle::chain`] for the two-trailer case and exist as an independent
/// cross-check and as the fast path of the error-model Jacobians.
pub mod two_trailer {
    /// Common denominator M_1 sin β_1 κ_0 + cos β_1.
    pub fn denom(b1: f64, k0: f64, m1: f64) -> f64 {
        m1 * b1.sin() * k0 + b1.cos()
    }

    /// Speed ratio f_{v_2} = v_2 / v_0.
    pub fn speed_ratio(b1: f64, b2: f64, g2: f64, k0: f64, m1: f64) -> f64 {
        b2.cos() / g2.cos() * denom(b1, k0, m1)
    }

    /// Curvature of the rear trailer's axle motion.
    pub fn curvature(b2: f64, g2: f64, l2: f64) -> f64 {
        (b2 - g2).sin() / (l2 * b2.cos())
    }

    /// Joint rate f_{β_2} = β̇_2 / v_2.
    pub fn joint_rate_2(b1: f64, b2: f64, g2: f64, k0: f64, m1: f64, l1: f64, l2: f64) -> f64 {
        let den = denom(b1, k0, m1);
        g2.cos() * (b1.sin() / l1 - m1 / l1 * b1.cos() * k0) / (b2.cos() * den)
            - (b2 - g2).sin() / (l2 * b2.cos())
    }

    /// Joint rate f_{β_1} = β̇_1 / v_2.
    pub fn joint_rate_1(b1: f64, b2: f64, g2: f64, k0: f64, m1: f64, l1: f64) -> f64 {
        let den = denom(b1, k0, m1);
        g2.cos() * (k0 - b1.sin() / l1 + m1 / l1 * b1.cos() * k0) / (b2.cos() * den)
    }
}
