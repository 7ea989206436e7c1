//! Reference paths for the guidance body (the last trailer's axle),
//! sampled on a uniform arc-length grid.
//!
//! A path is parametrised by arc length `s` in the direction of travel, so
//! `s` grows monotonically during an episode regardless of gear. The
//! `direction` flag distinguishes forward motion (+1) from reversing (−1):
//! for a reversing vehicle the guidance body moves opposite to its heading
//! and the position tangent is `direction · (cos θ, sin θ)` (steering of
//! the guidance axle aside).
//!
//! Each sample stores the nominal pose together with the nominal joint
//! angles, controls and the chain quantities (curvature, joint-rate and
//! speed-ratio functions) needed by the error model and controller.

use crate::vehicle::Vehicle;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PathError {
    #[error("path length must be positive, got {0}")]
    BadLength(f64),
    #[error("sample spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("direction must be +1 or -1, got {0}")]
    BadDirection(f64),
    #[error("nominal joint {joint} exceeds its limit at s = {s:.2}: |{value:.4}| > {limit:.4}")]
    JointLimit {
        joint: usize,
        s: f64,
        value: f64,
        limit: f64,
    },
    #[error("figure-eight closure search found no bracket")]
    NoClosureBracket,
    #[error("figure-eight failed to close: end-point offset {0:.3} m")]
    NotClosed(f64),
    #[error(transparent)]
    Vehicle(#[from] crate::vehicle::VehicleError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed path file: {0}")]
    Parse(String),
}

/// One sample of the reference path.
#[derive(Debug, Clone)]
pub struct PathPoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    /// Heading of the guidance body (unwrapped).
    pub theta: f64,
    /// Nominal joint angles, chain order β_1..β_N.
    pub betas: Vec<f64>,
    /// Nominal controls [κ_0r, γ_ar…].
    pub u: Vec<f64>,
    /// Nominal curvature of the guidance body motion, κ_Nr.
    pub curvature: f64,
    /// Nominal joint-rate functions f_{β_i}, chain order.
    pub joint_rates: Vec<f64>,
    /// Nominal speed ratio f_{v_N}.
    pub speed_ratio: f64,
}

impl PathPoint {
    /// The origin of a straight path: zero controls, zero joint angles,
    /// heading along +x. Useful as a linearization point.
    pub fn straight_origin(vehicle: &Vehicle) -> Self {
        PathPoint {
            s: 0.0,
            x: 0.0,
            y: 0.0,
            theta: 0.0,
            betas: vec![0.0; vehicle.n_trailers()],
            u: vec![0.0; vehicle.n_controls()],
            curvature: 0.0,
            joint_rates: vec![0.0; vehicle.n_trailers()],
            speed_ratio: 1.0,
        }
    }
}

/// Result of projecting a measured position onto the path.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Arc length of the closest point (never behind the previous one).
    pub s: f64,
    /// Signed lateral offset, positive to the left of the nominal heading.
    pub z: f64,
    /// Interpolated path sample at `s`.
    pub point: PathPoint,
}

#[derive(Debug, Clone)]
pub struct Path {
    /// Sample spacing [m].
    pub ds: f64,
    /// +1 forward, −1 reversing.
    pub direction: f64,
    pub points: Vec<PathPoint>,
}

impl Path {
    /// Straight path along the x-axis: heading 0, all joints at zero. The
    /// guidance body starts at the origin and progresses toward +x when
    /// driving forward, toward −x when reversing.
    pub fn straight(vehicle: &Vehicle, length: f64, direction: f64, ds: f64) -> Result<Self, PathError> {
        check_args(length, direction, ds)?;
        let n = vehicle.n_trailers();
        let m = vehicle.n_controls();
        let count = (length / ds).floor() as usize + 1;
        let points = (0..count)
            .map(|i| {
                let s = i as f64 * ds;
                PathPoint {
                    s,
                    x: direction * s,
                    y: 0.0,
                    theta: 0.0,
                    betas: vec![0.0; n],
                    u: vec![0.0; m],
                    curvature: 0.0,
                    joint_rates: vec![0.0; n],
                    speed_ratio: 1.0,
                }
            })
            .collect();
        Ok(Path { ds, direction, points })
    }

    /// Build a path by integrating the nominal chain under a control
    /// profile `controls(s)`, starting from the given joint angles (chain
    /// order) at the origin with heading 0. Integration runs at a tenth of
    /// the sample spacing (classical Runge–Kutta) and the table keeps
    /// every tenth point. Fails if any nominal joint angle exceeds its
    /// limit.
    pub fn from_controls(
        vehicle: &Vehicle,
        controls: impl Fn(f64) -> Vec<f64>,
        initial_betas: Vec<f64>,
        length: f64,
        direction: f64,
        ds: f64,
    ) -> Result<Self, PathError> {
        check_args(length, direction, ds)?;
        let n = vehicle.n_trailers();
        assert_eq!(initial_betas.len(), n);
        let h = ds / 10.0;
        let count = (length / ds).floor() as usize + 1;

        // Spatial state: [x, y, θ, β_1..β_N] with d/ds as below.
        let rhs = |s: f64, st: &[f64]| -> Vec<f64> {
            let u = controls(s);
            let betas = &st[3..];
            let ch = vehicle.chain(betas, &u);
            let heading = st[2] + vehicle.gamma_last(&u);
            let mut d = vec![
                direction * heading.cos(),
                direction * heading.sin(),
                direction * ch.curvature(),
            ];
            for f in ch.joint_rates() {
                d.push(direction * f);
            }
            d
        };

        let mut st = vec![0.0, 0.0, 0.0];
        st.extend_from_slice(&initial_betas);
        let mut points = Vec::with_capacity(count);
        let mut s = 0.0;
        for i in 0..count * 10 {
            if i % 10 == 0 {
                points.push(make_point(vehicle, s, &st, &controls(s))?);
                if points.len() == count {
                    break;
                }
            }
            let k1 = rhs(s, &st);
            let ax = |k: &[f64], f: f64| -> Vec<f64> {
                st.iter().zip(k).map(|(a, b)| a + f * b).collect()
            };
            let k2 = rhs(s + h / 2.0, &ax(&k1, h / 2.0));
            let k3 = rhs(s + h / 2.0, &ax(&k2, h / 2.0));
            let k4 = rhs(s + h, &ax(&k3, h));
            for j in 0..st.len() {
                st[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            s += h;
        }
        Ok(Path { ds, direction, points })
    }

    /// Circle of constant tractor curvature, starting on the steady-state
    /// joint configuration so the nominal chain is exactly stationary.
    pub fn circle(vehicle: &Vehicle, kappa0: f64, length: f64, ds: f64) -> Result<Self, PathError> {
        let betas = vehicle.circle_equilibrium(kappa0)?;
        let m = vehicle.n_controls();
        let mut u0 = vec![0.0; m];
        u0[0] = kappa0;
        Path::from_controls(vehicle, move |_| u0.clone(), betas, length, 1.0, ds)
    }

    /// Closed figure-eight: the tractor curvature ramps 0 → +κ̂ → cruise,
    /// holds, returns to 0, runs straight, then mirrors the lobe with
    /// −κ̂ and closes with a final straight. Ramp slopes stay inside the
    /// curvature slew bound at unit speed. The cruise hold length is tuned
    /// by bisection until the end point returns to the start (the mirrored
    /// profile already guarantees zero net heading).
    pub fn figure_eight(vehicle: &Vehicle, ds: f64) -> Result<Self, PathError> {
        let peak = 0.1;
        let cruise = 0.08;
        let slope = 0.08; // |dκ_0/ds| on ramps, inside the slew bound
        let lead = 10.0;
        let peak_hold = 2.0;
        let mid_straight = 80.0;

        // Piecewise-linear κ_0(s) for a single lobe of given cruise hold.
        struct Profile {
            lead: f64,
            up: f64,
            peak_hold: f64,
            down1: f64,
            hold: f64,
            down2: f64,
            straight: f64,
        }
        impl Profile {
            fn lobe_len(&self) -> f64 {
                self.up + self.peak_hold + self.down1 + self.hold + self.down2
            }
            fn kappa(&self, s: f64, peak: f64, cruise: f64, slope: f64) -> f64 {
                let lobe = self.lobe_len();
                // lead straight, +lobe, mid straight, −lobe, tail straight
                let (sign, t) = if s < self.lead {
                    return 0.0;
                } else if s < self.lead + lobe {
                    (1.0, s - self.lead)
                } else if s < self.lead + lobe + self.straight {
                    return 0.0;
                } else if s < self.lead + 2.0 * lobe + self.straight {
                    (-1.0, s - self.lead - lobe - self.straight)
                } else {
                    return 0.0;
                };
                let k = if t < self.up {
                    slope * t
                } else if t < self.up + self.peak_hold {
                    peak
                } else if t < self.up + self.peak_hold + self.down1 {
                    peak - slope * (t - self.up - self.peak_hold)
                } else if t < self.up + self.peak_hold + self.down1 + self.hold {
                    cruise
                } else {
                    (cruise - slope * (t - self.up - self.peak_hold - self.down1 - self.hold))
                        .max(0.0)
                };
                sign * k
            }
        }

        let m = vehicle.n_controls();
        let n = vehicle.n_trailers();
        // The joints are still bent when the curvature ramp ends and keep
        // turning the chain while they relax along the following straight,
        // so the end pose must be sampled after a settling leg long enough
        // for the heading to flatten out (the slowest joint relaxes with
        // a length constant of the rear drawbar).
        let settle = 60.0;
        // End pose of the curve for a given cruise hold length, integrated
        // at the builder's fine step but without table assembly.
        let end_state = |hold: f64| -> (f64, f64, f64) {
            let p = Profile {
                lead,
                up: peak / slope,
                peak_hold,
                down1: (peak - cruise) / slope,
                hold,
                down2: cruise / slope,
                straight: mid_straight,
            };
            let total = lead + 2.0 * p.lobe_len() + mid_straight + settle;
            let h = ds / 10.0;
            let steps = (total / h).ceil() as usize;
            let mut st = vec![0.0; 3 + n];
            let mut s = 0.0;
            for _ in 0..steps {
                let rhs = |s: f64, st: &[f64]| -> Vec<f64> {
                    let mut u = vec![0.0; m];
                    u[0] = p.kappa(s, peak, cruise, slope);
                    let ch = vehicle.chain(&st[3..], &u);
                    let heading = st[2] + vehicle.gamma_last(&u);
                    let mut d = vec![heading.cos(), heading.sin(), ch.curvature()];
                    d.extend(ch.joint_rates());
                    d
                };
                let k1 = rhs(s, &st);
                let ax = |k: &[f64], f: f64| -> Vec<f64> {
                    st.iter().zip(k).map(|(a, b)| a + f * b).collect()
                };
                let k2 = rhs(s + h / 2.0, &ax(&k1, h / 2.0));
                let k3 = rhs(s + h / 2.0, &ax(&k2, h / 2.0));
                let k4 = rhs(s + h, &ax(&k3, h));
                for j in 0..st.len() {
                    st[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
                s += h;
            }
            (st[0], st[1], st[2])
        };

        // Bracket a sign change of the end-point y over the hold length,
        // then bisect. Only brackets whose end point lies behind the start
        // (x < 0) close properly: the mirrored lobes leave θ ≈ 0, so the
        // final straight can absorb a negative x offset but not a positive
        // one.
        let mut bracket = None;
        let mut prev: Option<(f64, f64)> = None;
        let mut hold = 4.0;
        while hold <= 90.0 {
            let (x, y, _) = end_state(hold);
            if let Some((h0, y0)) = prev {
                if y0 * y <= 0.0 && x < 0.0 {
                    bracket = Some((h0, hold));
                    break;
                }
            }
            prev = Some((hold, y));
            hold += 2.0;
        }
        let (mut lo, mut hi) = bracket.ok_or(PathError::NoClosureBracket)?;
        let y_lo = end_state(lo).1;
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            let y_mid = end_state(mid).1;
            if y_lo * y_mid <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let hold = 0.5 * (lo + hi);

        let p = Profile {
            lead,
            up: peak / slope,
            peak_hold,
            down1: (peak - cruise) / slope,
            hold,
            down2: cruise / slope,
            straight: mid_straight,
        };
        let (x_end, _, _) = end_state(hold);
        if x_end >= 0.0 {
            return Err(PathError::NotClosed(x_end));
        }
        let total = lead + 2.0 * p.lobe_len() + mid_straight + settle + (-x_end);
        let length = (total / ds).floor() * ds;
        let path = Path::from_controls(
            vehicle,
            move |s| {
                let mut u = vec![0.0; m];
                u[0] = p.kappa(s, peak, cruise, slope);
                u
            },
            vec![0.0; n],
            length,
            1.0,
            ds,
        )?;
        let last = path.points.last().unwrap();
        let closure = (last.x.powi(2) + last.y.powi(2)).sqrt();
        if closure > 0.5 {
            return Err(PathError::NotClosed(closure));
        }
        Ok(path)
    }

    /// The same geometric path traversed in the opposite gear. Joint
    /// angles, controls and the normalised chain quantities are invariant
    /// under time reversal, so only the sample order and the direction
    /// flag change.
    pub fn reversed(&self) -> Path {
        let s_max = self.s_max();
        let mut points: Vec<PathPoint> = self
            .points
            .iter()
            .rev()
            .map(|p| {
                let mut q = p.clone();
                q.s = s_max - p.s;
                q
            })
            .collect();
        // Guard against negative zeros from the subtraction.
        for q in &mut points {
            if q.s == 0.0 {
                q.s = 0.0;
            }
        }
        Path {
            ds: self.ds,
            direction: -self.direction,
            points,
        }
    }

    pub fn s_max(&self) -> f64 {
        self.points.last().map(|p| p.s).unwrap_or(0.0)
    }

    /// Linear interpolation of the sample table at arc length `s`
    /// (clamped to the table range).
    pub fn sample_at(&self, s: f64) -> PathPoint {
        let last = self.points.len() - 1;
        let t = (s / self.ds).clamp(0.0, last as f64);
        let i = (t.floor() as usize).min(last.saturating_sub(1));
        if self.points.len() == 1 {
            return self.points[0].clone();
        }
        let w = t - i as f64;
        let (a, b) = (&self.points[i], &self.points[i + 1]);
        let lerp = |p: f64, q: f64| p + w * (q - p);
        PathPoint {
            s: lerp(a.s, b.s),
            x: lerp(a.x, b.x),
            y: lerp(a.y, b.y),
            theta: lerp(a.theta, b.theta),
            betas: a
                .betas
                .iter()
                .zip(&b.betas)
                .map(|(&p, &q)| lerp(p, q))
                .collect(),
            u: a.u.iter().zip(&b.u).map(|(&p, &q)| lerp(p, q)).collect(),
            curvature: lerp(a.curvature, b.curvature),
            joint_rates: a
                .joint_rates
                .iter()
                .zip(&b.joint_rates)
                .map(|(&p, &q)| lerp(p, q))
                .collect(),
            speed_ratio: lerp(a.speed_ratio, b.speed_ratio),
        }
    }

    /// Closest-point projection of `(x, y)`, restricted to arc lengths at
    /// or after `s_prev` so that the progress variable never moves
    /// backwards. A coarse scan over the grid ahead of `s_prev` is refined
    /// by golden-section search on the squared distance.
    pub fn project(&self, x: f64, y: f64, s_prev: f64) -> Projection {
        let window = 40.0 * self.ds;
        let lo = s_prev.clamp(0.0, self.s_max());
        let hi = (s_prev + window).min(self.s_max());
        let d2 = |s: f64| -> f64 {
            let p = self.sample_at(s);
            (p.x - x).powi(2) + (p.y - y).powi(2)
        };
        // Coarse scan at half the sample spacing.
        let mut best_s = lo;
        let mut best = d2(lo);
        let mut s = lo;
        while s < hi {
            s = (s + 0.5 * self.ds).min(hi);
            let v = d2(s);
            if v < best {
                best = v;
                best_s = s;
            }
        }
        // Golden-section refinement around the coarse minimum.
        let mut a = (best_s - 0.5 * self.ds).max(lo);
        let mut b = (best_s + 0.5 * self.ds).min(hi);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut fc, mut fd) = (d2(c), d2(d));
        for _ in 0..70 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = d2(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = d2(d);
            }
        }
        let s_star = 0.5 * (a + b);
        let point = self.sample_at(s_star);
        let z = -(x - point.x) * point.theta.sin() + (y - point.y) * point.theta.cos();
        Projection { s: s_star, z, point }
    }

    /// Write the sample table as CSV.
    pub fn write_csv(&self, vehicle: &Vehicle, w: &mut impl Write) -> Result<(), PathError> {
        let n = vehicle.n_trailers();
        let mut header = String::from("s,x,y,theta");
        for i in (1..=n).rev() {
            header.push_str(&format!(",beta{i}"));
        }
        header.push_str(",kappa0");
        for a in &vehicle.steered {
            header.push_str(&format!(",gamma{a}"));
        }
        header.push_str(&format!(",kappa{n}r,direction"));
        writeln!(w, "{header}")?;
        for p in &self.points {
            let mut row = format!("{:.6},{:.6},{:.6},{:.6}", p.s, p.x, p.y, p.theta);
            for i in (0..n).rev() {
                row.push_str(&format!(",{:.6}", p.betas[i]));
            }
            for v in &p.u {
                row.push_str(&format!(",{v:.6}"));
            }
            row.push_str(&format!(",{:.6},{}", p.curvature, self.direction as i64));
            writeln!(w, "{row}")?;
        }
        Ok(())
    }

    /// Reads a path back from the CSV produced by [`Path::write_csv`].
    /// Joint-rate and speed-ratio columns are not stored, so they are
    /// recomputed from the joint angles and controls.
    pub fn read_csv(vehicle: &Vehicle, text: &str) -> Result<Path, PathError> {
        let n = vehicle.n_trailers();
        let nu = vehicle.n_controls();
        let expected = 4 + n + nu + 2;
        let mut points = Vec::new();
        let mut direction = 0.0;
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected {
                return Err(PathError::Parse(format!(
                    "line {}: expected {expected} columns, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let num = |idx: usize| -> Result<f64, PathError> {
                fields[idx].trim().parse::<f64>().map_err(|_| {
                    PathError::Parse(format!("line {}: bad number '{}'", lineno + 1, fields[idx]))
                })
            };
            let s = num(0)?;
            let x = num(1)?;
            let y = num(2)?;
            let theta = num(3)?;
            // Stored rear joint first; held chain order internally.
            let mut betas = vec![0.0; n];
            for i in 0..n {
                betas[n - 1 - i] = num(4 + i)?;
            }
            let mut u = vec![0.0; nu];
            for j in 0..nu {
                u[j] = num(4 + n + j)?;
            }
            let dir = num(expected - 1)?;
            if dir != 1.0 && dir != -1.0 {
                return Err(PathError::BadDirection(dir));
            }
            if points.is_empty() {
                direction = dir;
            } else if dir != direction {
                return Err(PathError::Parse(format!(
                    "line {}: direction changed mid-file",
                    lineno + 1
                )));
            }
            let ch = vehicle.chain(&betas, &u);
            points.push(PathPoint {
                s,
                x,
                y,
                theta,
                curvature: ch.curvature(),
                joint_rates: ch.joint_rates(),
                speed_ratio: ch.speed_ratio(),
                betas,
                u,
            });
        }
        if points.len() < 2 {
            return Err(PathError::Parse("need at least two samples".into()));
        }
        let ds = points[1].s - points[0].s;
        if !(ds > 0.0) {
            return Err(PathError::BadSpacing(ds));
        }
        for (i, p) in points.iter().enumerate() {
            if (p.s - i as f64 * ds).abs() > 1e-4 {
                return Err(PathError::Parse(format!(
                    "sample {} is off the uniform grid (s = {}, expected {})",
                    i,
                    p.s,
                    i as f64 * ds
                )));
            }
        }
        Ok(Path {
            ds,
            direction,
            points,
        })
    }
}

fn check_args(length: f64, direction: f64, ds: f64) -> Result<(), PathError> {
    if length <= 0.0 {
        return Err(PathError::BadLength(length));
    }
    if ds <= 0.0 {
        return Err(PathError::BadSpacing(ds));
    }
    if direction != 1.0 && direction != -1.0 {
        return Err(PathError::BadDirection(direction));
    }
    Ok(())
}

fn make_point(vehicle: &Vehicle, s: f64, st: &[f64], u: &[f64]) -> Result<PathPoint, PathError> {
    let betas = st[3..].to_vec();
    for (i, (&b, &bmax)) in betas.iter().zip(&vehicle.beta_max).enumerate() {
        if b.abs() > bmax {
            return Err(PathError::JointLimit {
                joint: i + 1,
                s,
                value: b,
                limit: bmax,
            });
        }
    }
    let ch = vehicle.chain(&betas, u);
    Ok(PathPoint {
        s,
        x: st[0],
        y: st[1],
        theta: st[2],
        betas,
        u: u.to_vec(),
        curvature: ch.curvature(),
        joint_rates: ch.joint_rates(),
        speed_ratio: ch.speed_ratio(),
    })
}
