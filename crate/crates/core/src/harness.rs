//! Closed-loop simulation: scenario configuration, the episode runner,
//! metrics, and region-of-attraction sweeps.
//!
//! An episode holds the controller rate at `control_rate` Hz with
//! zero-order hold between updates; the plant integrates with RK4
//! sub-steps in between. Episodes end on convergence, projection loss,
//! reaching the end of the path, or timeout. A jackknife flag marks the
//! first step where a joint angle exceeds its bound by more than 0.05 rad
//! while the error norm has grown for 10 consecutive control steps; the
//! episode keeps running (the controller may still recover), and the flag
//! only becomes the terminal status if the episode never converges.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{z_map, ControllerConfig, ControllerError, LqController, MpcController};
use crate::numcore::QpStatus;
use crate::path::{Path, PathError};
use crate::vehicle::{Vehicle, VehicleError};

/// Convergence is declared when the error max-norm stays below this for
/// [`CONVERGENCE_HOLD`] seconds.
pub const CONVERGENCE_TOLERANCE: f64 = 0.02;
pub const CONVERGENCE_HOLD: f64 = 2.0;
/// Joint-bound margin for the jackknife flag.
pub const JACKKNIFE_MARGIN: f64 = 0.05;
/// Consecutive growing-error steps required for the jackknife flag.
pub const JACKKNIFE_GROWTH_STEPS: usize = 10;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Vehicle(#[from] VehicleError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Vehicle geometry and actuation limits, in SI units and radians.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleConfig {
    pub tractor_wheelbase: f64,
    pub hitch_offsets: Vec<f64>,
    pub trailer_lengths: Vec<f64>,
    /// 1-based indices of actively steered trailers, ascending.
    pub steered_trailers: Vec<usize>,
    pub joint_limits: Vec<f64>,
    pub max_curvature: f64,
    pub max_curvature_rate: f64,
    pub max_steering: f64,
    pub max_steering_rate: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        VehicleConfig {
            tractor_wheelbase: 4.62,
            hitch_offsets: vec![1.66, 0.0],
            trailer_lengths: vec![3.87, 8.0],
            steered_trailers: vec![2],
            joint_limits: vec![0.8, 0.8],
            max_curvature: 0.18,
            max_curvature_rate: 0.13,
            max_steering: 0.35,
            max_steering_rate: 0.8,
        }
    }
}

impl VehicleConfig {
    /// Builds the vehicle, optionally discarding active steering (the
    /// conventional-vehicle baseline uses the same geometry unsteered).
    pub fn build(&self, with_steering: bool) -> Result<Vehicle, VehicleError> {
        Vehicle::new(
            self.tractor_wheelbase,
            self.hitch_offsets.clone(),
            self.trailer_lengths.clone(),
            if with_steering {
                self.steered_trailers.clone()
            } else {
                Vec::new()
            },
            self.joint_limits.clone(),
            self.max_curvature,
            self.max_curvature_rate,
            self.max_steering,
            self.max_steering_rate,
        )
    }
}

/// Reference path selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathConfig {
    /// "straight", "circle", "figure-eight", or "from-file".
    pub shape: String,
    pub length: f64,
    pub ds: f64,
    /// +1 forward, -1 reversing.
    pub direction: f64,
    /// Tractor curvature for the circle shape.
    pub curvature: f64,
    /// CSV produced by the path exporter, for shape = "from-file".
    pub file: String,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            shape: "straight".into(),
            length: 200.0,
            ds: 0.2,
            direction: -1.0,
            curvature: 0.05,
            file: String::new(),
        }
    }
}

impl PathConfig {
    pub fn build(&self, vehicle: &Vehicle) -> Result<Path, HarnessError> {
        if self.direction != 1.0 && self.direction != -1.0 {
            return Err(HarnessError::Config(format!(
                "path.direction must be 1 or -1, got {}",
                self.direction
            )));
        }
        let forward = match self.shape.as_str() {
            "straight" => return Ok(Path::straight(vehicle, self.length, self.direction, self.ds)?),
            "circle" => Path::circle(vehicle, self.curvature, self.length, self.ds)?,
            "figure-eight" => Path::figure_eight(vehicle, self.ds)?,
            "from-file" => {
                let text = std::fs::read_to_string(&self.file)?;
                return Ok(Path::read_csv(vehicle, &text)?);
            }
            other => {
                return Err(HarnessError::Config(format!(
                    "unknown path.shape '{other}' (expected straight, circle, figure-eight, from-file)"
                )))
            }
        };
        Ok(if self.direction < 0.0 {
            forward.reversed()
        } else {
            forward
        })
    }
}

/// Which policy closes the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControllerKind {
    /// MPC with active trailer steering.
    Ms2tMpc,
    /// MPC with the steering locked (conventional vehicle).
    Ss2tMpc,
    /// Saturated LQ state feedback (steered vehicle).
    Lq,
}

impl ControllerKind {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s {
            "ms2t-mpc" => Ok(ControllerKind::Ms2tMpc),
            "ss2t-mpc" => Ok(ControllerKind::Ss2tMpc),
            "lq" => Ok(ControllerKind::Lq),
            other => Err(HarnessError::Config(format!(
                "unknown controller '{other}' (expected ms2t-mpc, ss2t-mpc, lq)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::Ms2tMpc => "ms2t-mpc",
            ControllerKind::Ss2tMpc => "ss2t-mpc",
            ControllerKind::Lq => "lq",
        }
    }

    fn with_steering(&self) -> bool {
        !matches!(self, ControllerKind::Ss2tMpc)
    }
}

/// One episode: who drives, how fast, from which perturbation, how long.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// "ms2t-mpc", "ss2t-mpc", or "lq".
    pub controller: String,
    /// Tractor longitudinal velocity [m/s]; its sign must match the path
    /// direction.
    pub speed: f64,
    /// Initial error [z, theta, beta_N.., beta_1] applied at the start
    /// point (missing entries are zero).
    pub initial_error: Vec<f64>,
    /// Episode length [s]; doubles as the timeout.
    pub duration: f64,
    /// Controller update rate [Hz].
    pub control_rate: f64,
    /// Plant RK4 sub-steps per controller period.
    pub plant_substeps: usize,
    /// Start offset along the path [m], leaving projection margin.
    pub start_s: f64,
    /// Recorded for reproducibility bookkeeping; the loop is deterministic.
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            controller: "ms2t-mpc".into(),
            speed: -1.0,
            initial_error: Vec::new(),
            duration: 120.0,
            control_rate: 10.0,
            plant_substeps: 10,
            start_s: 5.0,
            seed: 0,
        }
    }
}

/// Region-of-attraction sweep over initial joint errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Grid points per axis.
    pub grid: usize,
    pub beta1_range: [f64; 2],
    pub beta2_range: [f64; 2],
    pub controllers: Vec<String>,
    /// Drop the soft joint constraints from the MPC while sweeping, so
    /// convergence reflects the plain tracking law.
    pub disable_soft_constraints: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            grid: 25,
            beta1_range: [-0.8, 0.8],
            beta2_range: [-0.8, 0.8],
            controllers: vec!["ms2t-mpc".into(), "ss2t-mpc".into(), "lq".into()],
            disable_soft_constraints: true,
        }
    }
}

/// Full scenario file: `[vehicle]`, `[path]`, `[mpc]`, `[scenario]`, and
/// optionally `[sweep]`. Unknown keys anywhere are errors.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub vehicle: VehicleConfig,
    pub path: PathConfig,
    pub mpc: ControllerConfig,
    pub scenario: ScenarioConfig,
    pub sweep: Option<SweepConfig>,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}

/// Terminal condition of an episode, in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpisodeStatus {
    Converged,
    ProjectionLost,
    Jackknife,
    HorizonExhausted,
    Timeout,
}

impl fmt::Display for EpisodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EpisodeStatus::Converged => "converged",
            EpisodeStatus::ProjectionLost => "projection-lost",
            EpisodeStatus::Jackknife => "jackknife",
            EpisodeStatus::HorizonExhausted => "horizon-exhausted",
            EpisodeStatus::Timeout => "timeout",
        };
        f.write_str(s)
    }
}

/// One logged control step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: f64,
    /// Path progress of the projection.
    pub s: f64,
    /// Plant state [x_N, y_N, theta_N, beta_N.., beta_1].
    pub state: DVector<f64>,
    /// Applied control (post-saturation).
    pub u: DVector<f64>,
    /// Commanded control before saturation.
    pub u_raw: DVector<f64>,
    /// Applied control deviation from the reference at s.
    pub u_dev: DVector<f64>,
    /// Error state [z, theta, beta_N.., beta_1].
    pub error: DVector<f64>,
    /// Per-body errors (z-map output), including the tractor.
    pub aux: DVector<f64>,
    pub qp_iterations: usize,
    pub qp_status: &'static str,
    pub slack_max: f64,
}

/// Episode summary statistics. Peaks are taken after the start sample, so
/// a deliberately perturbed initial value does not count as overshoot.
#[derive(Debug, Clone, Serialize)]
pub struct EpisodeMetrics {
    pub status: EpisodeStatus,
    /// Peak |z| of the guidance trailer after the start.
    pub max_z2: f64,
    /// Peak |theta error| of the guidance trailer after the start.
    pub max_th2: f64,
    /// Time when the error norm last dropped below tolerance before the
    /// successful hold, if the episode converged.
    pub convergence_time: Option<f64>,
    /// Peak violation of any joint bound, 0 when none.
    pub max_joint_violation: f64,
    /// Sum of squared applied control deviations.
    pub control_effort: f64,
    /// When the jackknife flag was raised, if ever.
    pub jackknife_time: Option<f64>,
    /// Peak |beta| over all joints.
    pub max_joint_angle: f64,
}

/// A finished episode.
#[derive(Debug, Clone)]
pub struct Episode {
    pub kind: ControllerKind,
    pub status: EpisodeStatus,
    pub metrics: EpisodeMetrics,
    pub records: Vec<StepRecord>,
    /// Mean controller-step wall time [s] (measurement only; not logged
    /// in the CSV so output stays deterministic).
    pub mean_step_seconds: f64,
}

fn qp_status_str(status: QpStatus) -> &'static str {
    match status {
        QpStatus::Solved => "solved",
        QpStatus::SolvedPolished => "polished",
        QpStatus::MaxIterations => "max-iter",
        QpStatus::PrimalInfeasible => "primal-infeasible",
        QpStatus::DualInfeasible => "dual-infeasible",
    }
}

enum Policy {
    Mpc(Box<MpcController>),
    Lq(Box<LqController>),
}

/// Runs the episode described by the config.
pub fn run_episode(cfg: &SimConfig) -> Result<Episode, HarnessError> {
    let kind = ControllerKind::parse(&cfg.scenario.controller)?;
    let vehicle = cfg.vehicle.build(kind.with_steering())?;
    let path = cfg.path.build(&vehicle)?;
    run_episode_on(cfg, kind, vehicle, &path, true)
}

/// Runs one episode against a prebuilt path (which must match the
/// vehicle's control dimension). `keep_log` controls whether per-step
/// records are retained; sweeps drop them to bound memory.
pub fn run_episode_on(
    cfg: &SimConfig,
    kind: ControllerKind,
    vehicle: Vehicle,
    path: &Path,
    keep_log: bool,
) -> Result<Episode, HarnessError> {
    let sc = &cfg.scenario;
    if sc.speed == 0.0 {
        return Err(HarnessError::Config("scenario.speed must be nonzero".into()));
    }
    if sc.speed.signum() != path.direction {
        return Err(HarnessError::Config(format!(
            "scenario.speed sign ({}) must match path.direction ({})",
            sc.speed.signum(),
            path.direction
        )));
    }
    if !(sc.control_rate > 0.0) {
        return Err(HarnessError::Config("scenario.control_rate must be positive".into()));
    }
    if sc.plant_substeps == 0 {
        return Err(HarnessError::Config("scenario.plant_substeps must be at least 1".into()));
    }
    let n = vehicle.n_trailers();
    let nx = vehicle.n_error_states();
    if sc.initial_error.len() > nx {
        return Err(HarnessError::Config(format!(
            "scenario.initial_error has {} entries, vehicle supports at most {nx}",
            sc.initial_error.len()
        )));
    }

    let mut ctrl_cfg = cfg.mpc.clone();
    let nu = vehicle.n_controls();
    if ctrl_cfg.control_weights.len() > nu {
        ctrl_cfg.control_weights.truncate(nu);
    }
    let lookahead = match kind {
        ControllerKind::Lq => ctrl_cfg.ds,
        _ => ctrl_cfg.horizon as f64 * ctrl_cfg.ds,
    };

    let mut policy = match kind {
        ControllerKind::Lq => Policy::Lq(Box::new(LqController::new(
            vehicle.clone(),
            &ctrl_cfg,
            sc.speed,
        )?)),
        _ => Policy::Mpc(Box::new(MpcController::new(
            vehicle.clone(),
            ctrl_cfg.clone(),
            sc.speed,
        )?)),
    };

    // Initial state: place the guidance trailer at the perturbed Frenet
    // offset and build the chain from nominal + perturbed joint angles.
    let p0 = path.sample_at(sc.start_s);
    let mut err0 = vec![0.0; nx];
    err0[..sc.initial_error.len()].copy_from_slice(&sc.initial_error);
    let mut state = DVector::zeros(3 + n);
    state[0] = p0.x - err0[0] * p0.theta.sin();
    state[1] = p0.y + err0[0] * p0.theta.cos();
    state[2] = p0.theta + err0[1];
    for i in 0..n {
        // state index 3+i carries joint N-i; the path sample is chain order.
        state[3 + i] = p0.betas[n - 1 - i] + err0[2 + i];
    }

    let u_max = vehicle.control_bounds();
    let mut u_prev = DVector::from_fn(nu, |j, _| p0.u[j].clamp(-u_max[j], u_max[j]));

    let aux_map = z_map(&vehicle);
    let dt_ctrl = 1.0 / sc.control_rate;
    let dt_plant = dt_ctrl / sc.plant_substeps as f64;
    let max_steps = (sc.duration * sc.control_rate).round() as usize;
    let hold_needed = (CONVERGENCE_HOLD * sc.control_rate).ceil() as usize;

    let mut records: Vec<StepRecord> = Vec::new();
    let mut s_guess = (sc.start_s - 1.0).max(0.0);
    let mut status: Option<EpisodeStatus> = None;
    let mut flagged: Option<f64> = None;
    let mut growth_streak = 0usize;
    let mut prev_norm = f64::INFINITY;
    let mut hold = 0usize;
    let mut hold_start_t = 0.0;
    let mut convergence_time = None;

    let mut max_z2 = 0.0f64;
    let mut max_th2 = 0.0f64;
    let mut max_violation = 0.0f64;
    let mut max_joint = 0.0f64;
    let mut effort = 0.0f64;
    let mut step_time_total = 0.0f64;
    let mut steps_done = 0usize;

    for k in 0..=max_steps {
        let t = k as f64 * dt_ctrl;

        let wall = Instant::now();
        let (u, u_raw, proj, error, qp_iterations, qp_status, slack_max) = match &mut policy {
            Policy::Mpc(m) => {
                let info = m.step(&state, path, s_guess, &u_prev)?;
                let u_raw = DVector::from_fn(nu, |j, _| info.projection.point.u[j] + info.u_dev[j]);
                (
                    info.u,
                    u_raw,
                    info.projection,
                    info.error,
                    info.qp_iterations,
                    qp_status_str(info.qp_status),
                    info.slack_max,
                )
            }
            Policy::Lq(l) => {
                let info = l.step(&state, path, s_guess);
                (
                    info.u,
                    info.u_raw,
                    info.projection,
                    info.error,
                    0,
                    "lq",
                    0.0,
                )
            }
        };
        step_time_total += wall.elapsed().as_secs_f64();
        steps_done += 1;
        s_guess = proj.s;

        let u_dev = DVector::from_fn(nu, |j, _| u[j] - proj.point.u[j]);
        let aux = &aux_map * &error;
        if keep_log {
            records.push(StepRecord {
                t,
                s: proj.s,
                state: state.clone(),
                u: u.clone(),
                u_raw,
                u_dev: u_dev.clone(),
                error: error.clone(),
                aux,
                qp_iterations,
                qp_status,
                slack_max,
            });
        }

        // Metrics (peaks measured after the start sample).
        if k > 0 {
            max_z2 = max_z2.max(error[0].abs());
            max_th2 = max_th2.max(error[1].abs());
        }
        for i in 0..n {
            let beta = state[3 + i].abs();
            max_joint = max_joint.max(beta);
            max_violation = max_violation.max(beta - vehicle.beta_max[n - 1 - i]);
        }
        effort += u_dev.norm_squared();

        // Jackknife flag: sustained error growth while outside a joint
        // bound. The episode continues; the flag is terminal only if it
        // never converges.
        let norm = error.amax();
        if norm > prev_norm {
            growth_streak += 1;
        } else {
            growth_streak = 0;
        }
        prev_norm = norm;
        if flagged.is_none() && growth_streak >= JACKKNIFE_GROWTH_STEPS {
            let outside = (0..n)
                .any(|i| state[3 + i].abs() > vehicle.beta_max[n - 1 - i] + JACKKNIFE_MARGIN);
            if outside {
                flagged = Some(t);
            }
        }

        if norm < CONVERGENCE_TOLERANCE {
            if hold == 0 {
                hold_start_t = t;
            }
            hold += 1;
            if hold >= hold_needed {
                convergence_time = Some(hold_start_t);
                status = Some(EpisodeStatus::Converged);
                break;
            }
        } else {
            hold = 0;
        }
        // The Frenet transform degenerates when the lateral offset reaches
        // the reference's center of curvature (1 - kappa_r * z <= 0); past
        // that point the projection no longer identifies the vehicle.
        if 1.0 - proj.point.curvature * error[0] <= 0.0 {
            status = Some(EpisodeStatus::ProjectionLost);
            break;
        }
        if proj.s >= path.s_max() - lookahead {
            status = Some(EpisodeStatus::HorizonExhausted);
            break;
        }

        if k == max_steps {
            break;
        }
        for _ in 0..sc.plant_substeps {
            let next = vehicle.rk4_step(state.as_slice(), u.as_slice(), sc.speed, dt_plant);
            state = DVector::from_vec(next);
        }
        u_prev = u;
    }

    let status = status.unwrap_or(match flagged {
        Some(_) => EpisodeStatus::Jackknife,
        None => EpisodeStatus::Timeout,
    });
    let metrics = EpisodeMetrics {
        status,
        max_z2,
        max_th2,
        convergence_time,
        max_joint_violation: max_violation.max(0.0),
        control_effort: effort,
        jackknife_time: flagged,
        max_joint_angle: max_joint,
    };
    Ok(Episode {
        kind,
        status,
        metrics,
        records,
        mean_step_seconds: if steps_done > 0 {
            step_time_total / steps_done as f64
        } else {
            0.0
        },
    })
}

/// One cell of a region-of-attraction sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub beta1: f64,
    pub beta2: f64,
    pub status: EpisodeStatus,
    pub max_z2: f64,
    pub max_th2: f64,
    pub convergence_time: Option<f64>,
}

/// Sweep outcome: per-controller grids in row-major (beta1-outer) order.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub beta1_values: Vec<f64>,
    pub beta2_values: Vec<f64>,
    pub controllers: Vec<(ControllerKind, Vec<SweepCell>)>,
}

impl SweepResult {
    pub fn cells(&self, kind: ControllerKind) -> Option<&[SweepCell]> {
        self.controllers
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, c)| c.as_slice())
    }
}

fn linspace(range: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(range[0] + range[1]) / 2.0];
    }
    let step = (range[1] - range[0]) / (n - 1) as f64;
    (0..n).map(|i| range[0] + i as f64 * step).collect()
}

/// Runs the configured sweep with up to `parallel` episodes at a time.
/// Each episode starts from a pure joint-angle perturbation. Output order
/// is independent of scheduling, so results are reproducible.
pub fn run_sweep(cfg: &SimConfig, parallel: usize) -> Result<SweepResult, HarnessError> {
    use rayon::prelude::*;

    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| HarnessError::Config("missing [sweep] section".into()))?;
    if sweep.grid == 0 {
        return Err(HarnessError::Config("sweep.grid must be at least 1".into()));
    }
    let beta1_values = linspace(sweep.beta1_range, sweep.grid);
    let beta2_values = linspace(sweep.beta2_range, sweep.grid);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;

    let mut controllers = Vec::new();
    for name in &sweep.controllers {
        let kind = ControllerKind::parse(name)?;
        let vehicle = cfg.vehicle.build(kind.with_steering())?;
        let path = cfg.path.build(&vehicle)?;
        let n = vehicle.n_trailers();

        let mut base = cfg.clone();
        base.scenario.controller = name.clone();
        if sweep.disable_soft_constraints {
            base.mpc.soft_constraints = false;
        }

        let grid: Vec<(f64, f64)> = beta1_values
            .iter()
            .flat_map(|&b1| beta2_values.iter().map(move |&b2| (b1, b2)))
            .collect();

        let cells: Result<Vec<SweepCell>, HarnessError> = pool.install(|| {
            grid.par_iter()
                .map(|&(b1, b2)| {
                    let mut c = base.clone();
                    // Error order is rear joint first: [z, th, beta_N.., beta_1].
                    let mut e = vec![0.0; 2 + n];
                    e[2 + n - 1] = b1;
                    if n >= 2 {
                        e[2] = b2;
                    }
                    c.scenario.initial_error = e;
                    let ep = run_episode_on(&c, kind, vehicle.clone(), &path, false)?;
                    Ok(SweepCell {
                        beta1: b1,
                        beta2: b2,
                        status: ep.status,
                        max_z2: ep.metrics.max_z2,
                        max_th2: ep.metrics.max_th2,
                        convergence_time: ep.metrics.convergence_time,
                    })
                })
                .collect()
        });
        controllers.push((kind, cells?));
    }

    Ok(SweepResult {
        beta1_values,
        beta2_values,
        controllers,
    })
}

/// Writes the per-step log with the fixed column order
/// `t,s,x2,y2,theta2,beta2,beta1,kappa0,gamma2,z2,th2,bt2,bt1,z1,th1,z0,th0,qp_iters,qp_status,slack_max`.
/// Columns are sized for the two-trailer vehicle; the steering column is
/// zero when the vehicle has none.
pub fn write_episode_csv<W: Write>(episode: &Episode, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "t,s,x2,y2,theta2,beta2,beta1,kappa0,gamma2,z2,th2,bt2,bt1,z1,th1,z0,th0,qp_iters,qp_status,slack_max"
    )?;
    for r in &episode.records {
        let gamma2 = if r.u.len() > 1 { r.u[1] } else { 0.0 };
        writeln!(
            w,
            "{:.4},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{:.6}",
            r.t,
            r.s,
            r.state[0],
            r.state[1],
            r.state[2],
            r.state[3],
            r.state[4],
            r.u[0],
            gamma2,
            r.error[0],
            r.error[1],
            r.error[2],
            r.error[3],
            r.aux[4],
            r.aux[5],
            r.aux[6],
            r.aux[7],
            r.qp_iterations,
            r.qp_status,
            r.slack_max,
        )?;
    }
    Ok(())
}

/// Writes one controller's sweep grid with the fixed column order
/// `beta1_i,beta2_i,status,max_z2,max_th2,t_conv`. Unconverged cells leave
/// `t_conv` empty.
pub fn write_sweep_csv<W: Write>(cells: &[SweepCell], mut w: W) -> std::io::Result<()> {
    writeln!(w, "beta1_i,beta2_i,status,max_z2,max_th2,t_conv")?;
    for c in cells {
        let t_conv = c
            .convergence_time
            .map(|t| format!("{t:.4}"))
            .unwrap_or_default();
        writeln!(
            w,
            "{:.6},{:.6},{},{:.6},{:.6},{}",
            c.beta1, c.beta2, c.status, c.max_z2, c.max_th2, t_conv
        )?;
    }
    Ok(())
}
