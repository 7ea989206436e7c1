//! Kinematic modelling and model predictive path-following control for
//! articulated vehicles with a car-like tractor towing N trailers, any
//! subset of which may have actively steered axles.
//!
//! The crate is organised in six modules:
//!
//! * [`vehicle`] — chain kinematics: velocity transformations through the
//!   hitches, joint-angle rates, closed forms for the two-trailer unit.
//! * [`path`] — reference paths sampled on a uniform arc-length grid:
//!   construction from nominal control profiles, projection of a measured
//!   pose onto the path, CSV export.
//! * [`error_model`] — Frenet-frame error coordinates, the spatial
//!   (arc-length parametrised) error dynamics, their linearisation and
//!   discretisation.
//! * [`numcore`] — dense convex QP solver (ADMM with polishing) and a
//!   discrete algebraic Riccati solver.
//! * [`controller`] — the receding-horizon controller (condensed QP over
//!   the prediction horizon, input box/slew constraints, soft joint-angle
//!   constraints) and a saturated LQ feedback used as a baseline.
//! * [`harness`] — closed-loop episode runner, region-of-attraction grid
//!   sweeps, TOML configuration and CSV/JSON reporting.

pub mod controller;
pub mod error_model;
pub mod harness;
pub mod numcore;
pub mod path;
pub mod vehicle;

/// Re-exported so downstream crates can name the matrix types used in
/// this crate's public APIs without pinning their own copy.
pub use nalgebra;

pub use controller::{ControllerConfig, LqController, MpcController, MpcStepInfo};
pub use error_model::{ErrorModel, ErrorState};
pub use harness::{
    run_episode, run_sweep, ControllerKind, Episode, EpisodeMetrics, EpisodeStatus,
    ScenarioConfig, SimConfig, SweepConfig, SweepResult,
};
pub use numcore::{dare, DareSolution, QpProblem, QpSolution, QpStatus};
pub use path::{Path, PathPoint, Projection};
pub use vehicle::{ChainState, Vehicle, VehicleError};
