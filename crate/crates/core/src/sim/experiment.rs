use std::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::kinematics::{angle_to_length, cable_lengths, forward_kinematics, DriveAngles};
use crate::parallel::join;
use crate::preload::{optimize_preload, Eta, PreloadProblem};
use crate::types::{Dof, ForceLimits, Pose, PoseVector};

use super::controller::{position_controller, ControlStatus, Controller};
use super::params::{RobotModel, SimConfig};
use super::plant::{step_plant, tensions, Jam, SimState};
use super::schedule::{ControlMode, PayloadAction, TrajectorySchedule};

/// One row per control period.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub target: PoseVector,
    /// Forward kinematics of the drive angles.
    pub direct: PoseVector,
    /// `target - direct`.
    pub error: [f64; 6],
    /// True platform pose of the plant.
    pub actual: PoseVector,
    pub f_tar: DVector<f64>,
    pub f_act: DVector<f64>,
    pub w_obs: DVector<f64>,
    /// NaN when the schedule has no preload parameter.
    pub eta: f64,
    pub payload_mass: f64,
    pub status: ControlStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub mode: ControlMode,
    pub m: usize,
    pub control_period: f64,
    pub rows: Vec<LogRow>,
    pub warnings: Vec<String>,
}

/// Wrench holding the unloaded platform still.
fn gravity_wrench(model: &RobotModel, payload: f64) -> crate::redundancy::Wrench {
    let p = &model.plant;
    crate::redundancy::Wrench::from_slice(&[
        0.0,
        0.0,
        (p.platform_mass + payload) * p.gravity,
        0.0,
        0.0,
        0.0,
    ])
}

/// Plant state in static equilibrium at `pose` with the optimal preload for
/// `eta`: natural lengths are shortened by the elastic stretch of each cable.
pub fn preloaded_state(model: &RobotModel, pose: &PoseVector, eta: Eta) -> Result<SimState> {
    let geom = &model.geometry;
    let p = Pose::from_vector(pose);
    let problem = PreloadProblem::at_pose(
        geom,
        &p,
        geom.default_mode(),
        None,
        gravity_wrench(model, 0.0),
        eta,
        model.limits.clone(),
    )?;
    let solution = optimize_preload(&problem)?;
    if !solution.feasible {
        return Err(Error::Schedule(format!(
            "start pose cannot be preloaded within the force limits (violation {:.3} N)",
            solution.max_violation
        )));
    }
    let lengths = cable_lengths(geom, &p, geom.default_mode())?;
    let c_phi = geom.winch().angle_per_meter();
    let phi = DVector::from_fn(geom.m(), |i, _| {
        c_phi * lengths[i] / (1.0 + solution.forces[i] / model.plant.ea)
    });
    let mut state = SimState::at_rest(pose, phi);
    state.forces = tensions(geom, &model.plant, &state)?;
    Ok(state)
}

fn pose_of(state: &SimState) -> PoseVector {
    state
        .pose()
        .to_vector()
        .unwrap_or(PoseVector([f64::NAN; 6]))
}

/// Runs the closed loop over the whole schedule.
pub fn run_experiment(
    model: &RobotModel,
    schedule: &TrajectorySchedule,
    config: &SimConfig,
) -> Result<SimLog> {
    model.validate()?;
    let geom = &model.geometry;
    if geom.dof() != Dof::Spatial {
        return Err(Error::InvalidGeometry(
            "the simulator needs a spatial (6-DOF) robot".into(),
        ));
    }
    let substeps = config.substeps()?;
    let dt = config.substep;
    let period = config.control_period;
    let steps = (schedule.duration() / period + 1e-9).floor() as usize;

    let start = schedule.start();
    let eta0 = schedule.eta(0.0).unwrap_or(Eta::new(0.5)?);
    let mut state = preloaded_state(model, &start, eta0)?;
    let mut controller = Controller::new(
        geom.clone(),
        model.limits.clone(),
        model.gains,
        schedule.mode(),
        period,
    );
    if schedule.mode() == ControlMode::Apc {
        let phi_d = controller.desired_angles(&start)?;
        controller.preset_integrator(&position_controller(model.gains.kv, &phi_d, &state.phi));
    }

    let mut rows = Vec::with_capacity(steps + 1);
    let mut warnings = Vec::new();
    let mut direct_guess = start;
    for k in 0..=steps {
        let t = k as f64 * period;
        let f_meas = tensions(geom, &model.plant, &state)?;
        let out = controller.step(schedule, t, &state.phi, &f_meas)?;
        if let Some(w) = out.warning {
            warnings.push(w);
        }

        let lengths = angle_to_length(geom, &DriveAngles(state.phi.clone()));
        let direct = match forward_kinematics(geom, &lengths, &direct_guess) {
            Ok(sol) => sol.pose,
            Err(Error::NonConvergence { best, .. }) => best,
            Err(e) => return Err(e),
        };
        direct_guess = direct;
        rows.push(LogRow {
            t,
            target: out.target,
            direct,
            error: out.target.diff(&direct),
            actual: pose_of(&state),
            f_tar: out.f_tar,
            f_act: f_meas,
            w_obs: out.w_obs.0,
            eta: out.eta.map_or(f64::NAN, Eta::value),
            payload_mass: state.payload_mass,
            status: out.status,
        });
        if k == steps {
            break;
        }

        for s in 0..substeps {
            let ts = (k * substeps + s) as f64 * dt;
            for ev in schedule.events_in(ts, ts + dt) {
                match ev.action {
                    PayloadAction::Attach { mass } => state.payload_mass += mass,
                    PayloadAction::Detach => state.payload_mass = 0.0,
                    PayloadAction::Jam { duration } => {
                        state.jam = Some(Jam {
                            anchor: state.position,
                            until: ev.t + duration,
                        })
                    }
                }
            }
            step_plant(geom, &model.plant, &mut state, &out.omega, dt)?;
        }
    }
    Ok(SimLog {
        mode: schedule.mode(),
        m: geom.m(),
        control_period: period,
        rows,
        warnings,
    })
}

/// Runs the schedule once in STD and once in APC mode, concurrently when
/// the `parallel` feature is on.
pub fn run_paired(
    model: &RobotModel,
    schedule: &TrajectorySchedule,
    config: &SimConfig,
) -> Result<(SimLog, SimLog)> {
    let std = schedule.with_mode(ControlMode::Std)?;
    let apc = schedule.with_mode(ControlMode::Apc)?;
    let (a, b) = join(
        || run_experiment(model, &std, config),
        || run_experiment(model, &apc, config),
    );
    Ok((a?, b?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CableViolation {
    pub cable: usize,
    pub min_force: f64,
    pub max_force: f64,
    /// Time spent below `f_min` / above `f_max` [s].
    pub below_s: f64,
    pub above_s: f64,
    /// The same, counted only at steady state.
    pub steady_below_s: f64,
    pub steady_above_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayloadDelta {
    pub t: f64,
    pub action: &'static str,
    /// Settled observed wrench before and after the event.
    pub before: DVector<f64>,
    pub after: DVector<f64>,
}

impl PayloadDelta {
    pub fn delta(&self) -> DVector<f64> {
        &self.after - &self.before
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mode: ControlMode,
    pub duration: f64,
    /// Max and mean absolute pose error per channel (m, rad).
    pub max_error: [f64; 6],
    pub mean_error: [f64; 6],
    pub cables: Vec<CableViolation>,
    pub payload: Vec<PayloadDelta>,
    pub steady_rows: usize,
    pub warnings: usize,
}

/// Time the platform is given to settle after any change before a row
/// counts as steady state [s].
pub const SETTLE_TIME: f64 = 2.0;
/// Averaging window for payload wrench deltas [s].
pub const DELTA_WINDOW: f64 = 0.5;

/// Whether the row at `t` is at steady state: no motion, preload change or
/// payload event within the preceding `settle` seconds.
pub fn is_steady(schedule: &TrajectorySchedule, t: f64, settle: f64) -> bool {
    t >= settle
        && !schedule.moving_between(t - settle, t)
        && !schedule
            .change_times()
            .iter()
            .any(|&c| c > t - settle && c <= t)
}

fn mean_wrench(log: &SimLog, from: f64, to: f64) -> Option<DVector<f64>> {
    let rows: Vec<&LogRow> = log
        .rows
        .iter()
        .filter(|r| r.t >= from && r.t < to)
        .collect();
    if rows.is_empty() {
        return None;
    }
    let n = rows[0].w_obs.len();
    let sum = rows.iter().fold(DVector::zeros(n), |acc, r| acc + &r.w_obs);
    Some(sum / rows.len() as f64)
}

pub fn summarize(
    log: &SimLog,
    schedule: &TrajectorySchedule,
    limits: &ForceLimits,
    settle: f64,
) -> Summary {
    let period = log.control_period;
    let count = log.rows.len().max(1) as f64;
    let mut max_error = [0.0f64; 6];
    let mut mean_error = [0.0f64; 6];
    for r in &log.rows {
        for c in 0..6 {
            max_error[c] = max_error[c].max(r.error[c].abs());
            mean_error[c] += r.error[c].abs() / count;
        }
    }
    let steady: Vec<bool> = log
        .rows
        .iter()
        .map(|r| is_steady(schedule, r.t, settle))
        .collect();
    let cables = (0..log.m)
        .map(|i| {
            let mut v = CableViolation {
                cable: i,
                min_force: f64::INFINITY,
                max_force: f64::NEG_INFINITY,
                below_s: 0.0,
                above_s: 0.0,
                steady_below_s: 0.0,
                steady_above_s: 0.0,
            };
            for (r, &st) in log.rows.iter().zip(&steady) {
                let f = r.f_act[i];
                v.min_force = v.min_force.min(f);
                v.max_force = v.max_force.max(f);
                if f < limits.min[i] {
                    v.below_s += period;
                    if st {
                        v.steady_below_s += period;
                    }
                }
                if f > limits.max[i] {
                    v.above_s += period;
                    if st {
                        v.steady_above_s += period;
                    }
                }
            }
            v
        })
        .collect();
    let payload = schedule
        .events()
        .iter()
        .filter_map(|e| {
            let action = match e.action {
                PayloadAction::Attach { .. } => "attach",
                PayloadAction::Detach => "detach",
                PayloadAction::Jam { .. } => return None,
            };
            let before = mean_wrench(log, e.t - DELTA_WINDOW, e.t)?;
            let after = mean_wrench(log, e.t + settle, e.t + settle + DELTA_WINDOW)?;
            Some(PayloadDelta {
                t: e.t,
                action,
                before,
                after,
            })
        })
        .collect();
    Summary {
        mode: log.mode,
        duration: log.rows.last().map_or(0.0, |r| r.t),
        max_error,
        mean_error,
        cables,
        payload,
        steady_rows: steady.iter().filter(|&&s| s).count(),
        warnings: log.warnings.len(),
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const CH: [&str; 6] = [
            "x [mm]",
            "y [mm]",
            "z [mm]",
            "alpha [deg]",
            "beta [deg]",
            "gamma [deg]",
        ];
        writeln!(f, "mode: {}", self.mode.as_str())?;
        writeln!(
            f,
            "simulated time: {:.3} s ({} steady-state samples)",
            self.duration, self.steady_rows
        )?;
        writeln!(f, "pose error (max / mean):")?;
        for (c, name) in CH.iter().enumerate() {
            let scale = if c < 3 {
                1e3
            } else {
                180.0 / std::f64::consts::PI
            };
            writeln!(
                f,
                "  {:<12} {:>10.4} / {:>10.4}",
                name,
                self.max_error[c] * scale,
                self.mean_error[c] * scale
            )?;
        }
        writeln!(f, "cable forces (min / max [N]; time below f_min / above f_max [s], total and steady state):")?;
        for v in &self.cables {
            writeln!(
                f,
                "  cable {:>2}: {:>8.2} / {:>8.2}; below {:.2} ({:.2}), above {:.2} ({:.2})",
                v.cable + 1,
                v.min_force,
                v.max_force,
                v.below_s,
                v.steady_below_s,
                v.above_s,
                v.steady_above_s
            )?;
        }
        if !self.payload.is_empty() {
            writeln!(f, "payload wrench deltas (observed, settled):")?;
            for p in &self.payload {
                let d = p.delta();
                writeln!(
                    f,
                    "  t = {:.2} s {}: dw = [{:.2}, {:.2}, {:.2}] N, [{:.3}, {:.3}, {:.3}] N m",
                    p.t, p.action, d[0], d[1], d[2], d[3], d[4], d[5]
                )?;
            }
        }
        write!(f, "solver warnings: {}", self.warnings)
    }
}
