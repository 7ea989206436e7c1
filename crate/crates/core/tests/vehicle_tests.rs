//! Chain-kinematics tests: the generic hitch recursion against the
//! two-trailer closed forms, algebraic identities, circular equilibria
//! and parameter validation.

use approx::assert_abs_diff_eq;
use msnt_core::vehicle::{two_trailer, Vehicle};
use proptest::prelude::*;

const M1: f64 = 1.66;
const L1: f64 = 3.87;
const L2: f64 = 8.0;

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

#[test]
fn closed_forms_match_generic_chain() {
    let veh = Vehicle::demo_two_trailer(true);
    for b1 in grid(-0.9, 0.9, 7) {
        for b2 in grid(-0.9, 0.9, 7) {
            for g2 in grid(-0.35, 0.35, 5) {
                for k0 in grid(-0.18, 0.18, 5) {
                    let ch = veh.chain(&[b1, b2], &[k0, g2]);
                    let fv = two_trailer::speed_ratio(b1, b2, g2, k0, M1);
                    let kappa = two_trailer::curvature(b2, g2, L2);
                    let fb1 = two_trailer::joint_rate_1(b1, b2, g2, k0, M1, L1);
                    let fb2 = two_trailer::joint_rate_2(b1, b2, g2, k0, M1, L1, L2);
                    assert_abs_diff_eq!(ch.speed_ratio(), fv, epsilon = 1e-12);
                    assert_abs_diff_eq!(ch.curvature(), kappa, epsilon = 1e-12);
                    let rates = ch.joint_rates();
                    assert_abs_diff_eq!(rates[0], fb1, epsilon = 1e-12);
                    assert_abs_diff_eq!(rates[1], fb2, epsilon = 1e-12);
                }
            }
        }
    }
}

#[test]
fn speed_ratio_times_first_joint_rate_collapses() {
    // f_{v_2} · f_{β_1} has a closed form independent of β_2 and γ_2:
    //   κ_0 (1 + (M_1/L_1) cos β_1) − sin β_1 / L_1.
    for b1 in grid(-0.8, 0.8, 9) {
        for b2 in grid(-0.8, 0.8, 5) {
            for g2 in grid(-0.35, 0.35, 5) {
                for k0 in grid(-0.18, 0.18, 5) {
                    let fv = two_trailer::speed_ratio(b1, b2, g2, k0, M1);
                    let fb1 = two_trailer::joint_rate_1(b1, b2, g2, k0, M1, L1);
                    let expected = k0 * (1.0 + M1 / L1 * b1.cos()) - b1.sin() / L1;
                    assert_abs_diff_eq!(fv * fb1, expected, epsilon = 1e-12);
                }
            }
        }
    }
}

#[test]
fn circle_equilibrium_matches_frozen_values() {
    let veh = Vehicle::demo_two_trailer(true);
    let betas = veh.circle_equilibrium(0.1).unwrap();
    assert_abs_diff_eq!(betas[0], 0.55621665410950805, epsilon = 1e-12);
    assert_abs_diff_eq!(betas[1], 1.0233897347360237, epsilon = 1e-12);
}

#[test]
fn circle_equilibrium_equalises_yaw_rates() {
    // On the equilibrium circle every body turns at the tractor's rate, so
    // all joint angles hold steady.
    let veh = Vehicle::demo_two_trailer(true);
    for k0 in [-0.11, -0.05, 0.02, 0.07, 0.11] {
        let betas = veh.circle_equilibrium(k0).unwrap();
        let ch = veh.chain(&betas, &[k0, 0.0]);
        for w in &ch.yaw_rate {
            assert_abs_diff_eq!(*w, k0, epsilon = 1e-12);
        }
    }
}

#[test]
fn circle_equilibrium_vanishes_with_curvature() {
    let veh = Vehicle::demo_two_trailer(true);
    let at_zero = veh.circle_equilibrium(0.0).unwrap();
    assert!(at_zero.iter().all(|b| b.abs() == 0.0));
    let near_zero = veh.circle_equilibrium(1e-9).unwrap();
    assert!(near_zero.iter().all(|b| b.abs() < 1e-7));
}

#[test]
fn circle_equilibrium_fails_for_impossible_curvature() {
    // With zero trailer steering the 8 m rear drawbar cannot settle on
    // circles much tighter than 1/8 m⁻¹: the hitch point is too slow to
    // drag the axle around. The full curvature bound 0.18 is reachable
    // only with active rear steering.
    let veh = Vehicle::demo_two_trailer(true);
    assert!(veh.circle_equilibrium(1.0).is_err());
    assert!(veh.circle_equilibrium(0.18).is_err());
    assert!(veh.circle_equilibrium(0.11).is_ok());
}

#[test]
fn straight_motion_has_constant_derivative() {
    let veh = Vehicle::demo_two_trailer(true);
    let state = [0.0; 5];
    let u = [0.0, 0.0];
    let d = veh.state_derivative(&state, &u, -1.0);
    assert_eq!(d, vec![-1.0, 0.0, 0.0, 0.0, 0.0]);
    // The derivative field is constant along this trajectory, so one RK4
    // step reproduces it exactly.
    let next = veh.rk4_step(&state, &u, -1.0, 0.1);
    assert_abs_diff_eq!(next[0], -0.1, epsilon = 1e-15);
    for v in &next[1..] {
        assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-15);
    }
}

#[test]
fn rear_steering_tilts_the_velocity_heading() {
    // The guidance body's axle velocity points along θ_N + γ_N.
    let veh = Vehicle::demo_two_trailer(true);
    let g2 = 0.3;
    let d = veh.state_derivative(&[0.0, 0.0, 0.0, 0.0, 0.0], &[0.0, g2], 1.0);
    let fv = two_trailer::speed_ratio(0.0, 0.0, g2, 0.0, M1);
    assert_abs_diff_eq!(d[0], fv * g2.cos(), epsilon = 1e-14);
    assert_abs_diff_eq!(d[1], fv * g2.sin(), epsilon = 1e-14);
}

#[test]
fn rk4_step_converges_at_fourth_order() {
    let veh = Vehicle::demo_two_trailer(true);
    let state = vec![0.0, 0.0, 0.3, 0.2, -0.1];
    let u = [0.12, -0.2];
    // Integrate a fixed interval with 1, 2 and 4 steps; for a 4th-order
    // method the grid-to-grid disagreement shrinks ~16x per halving.
    let integrate = |steps: usize| -> Vec<f64> {
        let dt = 0.2 / steps as f64;
        let mut s = state.clone();
        for _ in 0..steps {
            s = veh.rk4_step(&s, &u, -1.0, dt);
        }
        s
    };
    let (a, b, c) = (integrate(1), integrate(2), integrate(4));
    let diff = |p: &[f64], q: &[f64]| -> f64 {
        p.iter().zip(q).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    let ratio = diff(&a, &b) / diff(&b, &c);
    assert!(
        (8.0..64.0).contains(&ratio),
        "error ratio {ratio} not consistent with 4th order"
    );
}

#[test]
fn steering_maps_to_the_configured_trailer() {
    let ms2t = Vehicle::demo_two_trailer(true);
    assert_eq!(ms2t.n_controls(), 2);
    assert_eq!(ms2t.gamma(&[0.1, 0.25], 2), 0.25);
    assert_eq!(ms2t.gamma(&[0.1, 0.25], 1), 0.0);
    assert_eq!(ms2t.gamma_last(&[0.1, 0.25]), 0.25);
    assert_eq!(ms2t.control_bounds(), vec![0.18, 0.35]);
    assert_eq!(ms2t.control_rate_bounds(), vec![0.13, 0.8]);

    let ss2t = Vehicle::demo_two_trailer(false);
    assert_eq!(ss2t.n_controls(), 1);
    assert_eq!(ss2t.gamma_last(&[0.1]), 0.0);
    assert_eq!(ss2t.control_bounds(), vec![0.18]);
}

#[test]
fn constructor_rejects_bad_parameters() {
    let base = Vehicle::demo_two_trailer(true);
    assert!(Vehicle::new(
        base.l0,
        vec![],
        vec![],
        vec![],
        vec![],
        0.18,
        0.13,
        0.35,
        0.8
    )
    .is_err());
    assert!(Vehicle::new(
        base.l0,
        vec![0.0, 0.0],
        vec![3.87, -1.0],
        vec![],
        vec![0.8, 0.8],
        0.18,
        0.13,
        0.35,
        0.8
    )
    .is_err());
    assert!(Vehicle::new(
        base.l0,
        vec![0.0, 0.0],
        vec![3.87, 8.0],
        vec![3],
        vec![0.8, 0.8],
        0.18,
        0.13,
        0.35,
        0.8
    )
    .is_err());
    assert!(Vehicle::new(
        base.l0,
        vec![0.0, 0.0],
        vec![3.87, 8.0],
        vec![2, 2],
        vec![0.8, 0.8],
        0.18,
        0.13,
        0.35,
        0.8
    )
    .is_err());
    assert!(Vehicle::new(
        base.l0,
        vec![0.0, 0.0],
        vec![3.87, 8.0],
        vec![2],
        vec![0.8, 2.0],
        0.18,
        0.13,
        0.35,
        0.8
    )
    .is_err());
    assert!(Vehicle::new(
        base.l0,
        vec![0.0, 0.0],
        vec![3.87, 8.0],
        vec![2],
        vec![0.8, 0.8],
        -0.18,
        0.13,
        0.35,
        0.8
    )
    .is_err());
}

proptest! {
    /// Mirroring every angle and the tractor curvature reflects the motion
    /// about the path: speeds are even, rates and curvature odd.
    #[test]
    fn chain_is_mirror_symmetric(
        b1 in -0.9f64..0.9,
        b2 in -0.9f64..0.9,
        g2 in -0.35f64..0.35,
        k0 in -0.18f64..0.18,
    ) {
        let veh = Vehicle::demo_two_trailer(true);
        let ch = veh.chain(&[b1, b2], &[k0, g2]);
        let mir = veh.chain(&[-b1, -b2], &[-k0, -g2]);
        prop_assert!((ch.speed_ratio() - mir.speed_ratio()).abs() < 1e-12);
        prop_assert!((ch.curvature() + mir.curvature()).abs() < 1e-12);
        let (r, rm) = (ch.joint_rates(), mir.joint_rates());
        prop_assert!((r[0] + rm[0]).abs() < 1e-12);
        prop_assert!((r[1] + rm[1]).abs() < 1e-12);
    }

    /// The hitch recursion conserves the velocity constraint at each
    /// joint: recomputing body i-1's velocity at the hitch point from
    /// body i's frame must match.
    #[test]
    fn hitch_velocities_are_consistent(
        b1 in -0.9f64..0.9,
        b2 in -0.9f64..0.9,
        g2 in -0.35f64..0.35,
        k0 in -0.18f64..0.18,
    ) {
        let veh = Vehicle::demo_two_trailer(true);
        let ch = veh.chain(&[b1, b2], &[k0, g2]);
        let betas = [b1, b2];
        let gammas = [0.0, g2];
        let mut gamma_prev = 0.0f64;
        for i in 1..=2 {
            let (m, l) = (veh.hitch_offsets[i - 1], veh.lengths[i - 1]);
            let beta = betas[i - 1];
            let gamma = gammas[i - 1];
            // Hitch-point velocity in body i-1's frame…
            let hx = ch.speed[i - 1] * gamma_prev.cos();
            let hy = ch.speed[i - 1] * gamma_prev.sin() - m * ch.yaw_rate[i - 1];
            // …and in body i's frame (θ_i = θ_{i-1} − β_i, so components
            // rotate by +β_i).
            let hx_i = hx * beta.cos() - hy * beta.sin();
            let hy_i = hx * beta.sin() + hy * beta.cos();
            prop_assert!((hx_i - ch.speed[i] * gamma.cos()).abs() < 1e-12);
            prop_assert!((hy_i - (ch.speed[i] * gamma.sin() + l * ch.yaw_rate[i])).abs() < 1e-12);
            gamma_prev = gamma;
        }
    }
}
