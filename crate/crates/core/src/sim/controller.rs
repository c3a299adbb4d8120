//! Hybrid position and adaptive preload force controller.
//!
//! Sign convention: a drive angle is proportional to the paid-out cable
//! length, so winding a cable in *decreases* its angle. A positive force
//! error `f_tar - f_meas` (too little tension) therefore yields a negative
//! force-controller speed.

use nalgebra::DVector;

use crate::error::Result;
use crate::kinematics::{cable_lengths, length_to_angle, structure_matrix_with};
use crate::preload::{optimize_preload, Eta, PreloadProblem, SolveStatus, WarmStart};
use crate::redundancy::{
    advanced_structure_matrix, force_distribution, nullspace_basis, wrench_observer, CableForces,
    NullspaceBasis, Wrench,
};
use crate::types::{ForceLimits, Pose, PoseVector, RobotGeometry};

use super::params::{ControllerGains, PidGains};
use super::schedule::{ControlMode, TrajectorySchedule};

/// `omega_q = K_v (phi_d - phi)`.
pub fn position_controller(kv: f64, phi_d: &DVector<f64>, phi: &DVector<f64>) -> DVector<f64> {
    (phi_d - phi) * kv
}

/// Per-cable PID memory.
#[derive(Debug, Clone, PartialEq)]
pub struct PidState {
    pub integral: DVector<f64>,
    pub previous_error: Option<DVector<f64>>,
}

impl PidState {
    pub fn new(m: usize) -> Self {
        PidState {
            integral: DVector::zeros(m),
            previous_error: None,
        }
    }
}

/// Discrete PID on `f_tar - f_meas` with output saturation and clamping
/// anti-windup: the integrator is frozen while the output is saturated and
/// the error would drive it further into saturation.
pub fn force_controller(
    gains: &PidGains,
    f_tar: &DVector<f64>,
    f_meas: &DVector<f64>,
    state: &mut PidState,
    dt: f64,
) -> DVector<f64> {
    let error = f_tar - f_meas;
    let derivative = match &state.previous_error {
        Some(prev) if gains.kd != 0.0 => (&error - prev) / dt,
        _ => DVector::zeros(error.len()),
    };
    let mut out = DVector::zeros(error.len());
    for i in 0..error.len() {
        let e = error[i];
        let trial = state.integral[i] + e * dt;
        let unsat = gains.kp * e + gains.ki * trial + gains.kd * derivative[i];
        let saturated = unsat.abs() > gains.saturation;
        if !saturated || unsat.signum() != e.signum() {
            state.integral[i] = trial;
        }
        let u = gains.kp * e + gains.ki * state.integral[i] + gains.kd * derivative[i];
        out[i] = -u.clamp(-gains.saturation, gains.saturation);
    }
    state.previous_error = Some(error);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlStatus {
    /// Position control only, no optimisation.
    PositionOnly,
    Optimal,
    /// The preload problem was infeasible; the last feasible preload
    /// parameters were reused.
    HeldLastFeasible,
}

impl ControlStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlStatus::PositionOnly => "position_only",
            ControlStatus::Optimal => "optimal",
            ControlStatus::HeldLastFeasible => "held_last_feasible",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControlOutput {
    /// `omega_q + omega_f` [rad/s].
    pub omega: DVector<f64>,
    pub omega_q: DVector<f64>,
    pub omega_f: DVector<f64>,
    pub target: PoseVector,
    pub phi_d: DVector<f64>,
    /// Target tensions; NaN in position-only mode.
    pub f_tar: DVector<f64>,
    pub w_obs: Wrench,
    pub eta: Option<Eta>,
    pub status: ControlStatus,
    pub warning: Option<String>,
}

/// Controller with the memory carried between control periods.
#[derive(Debug, Clone)]
pub struct Controller {
    geometry: RobotGeometry,
    limits: ForceLimits,
    gains: ControllerGains,
    mode: ControlMode,
    period: f64,
    pid: PidState,
    basis: Option<NullspaceBasis>,
    warm: Option<WarmStart>,
    last_lambda: Option<DVector<f64>>,
}

impl Controller {
    pub fn new(
        geometry: RobotGeometry,
        limits: ForceLimits,
        gains: ControllerGains,
        mode: ControlMode,
        period: f64,
    ) -> Self {
        let m = geometry.m();
        Controller {
            geometry,
            limits,
            gains,
            mode,
            period,
            pid: PidState::new(m),
            basis: None,
            warm: None,
            last_lambda: None,
        }
    }

    pub fn pid_state(&self) -> &PidState {
        &self.pid
    }

    /// Presets the integrators so that the force controller cancels
    /// `omega_q` at zero force error (bumpless start from a preloaded state).
    pub fn preset_integrator(&mut self, omega_q: &DVector<f64>) {
        if self.gains.pid.ki > 0.0 {
            self.pid.integral = omega_q / self.gains.pid.ki;
        }
    }

    /// Desired drive angles for a target pose.
    pub fn desired_angles(&self, target: &PoseVector) -> Result<DVector<f64>> {
        let l = cable_lengths(
            &self.geometry,
            &Pose::from_vector(target),
            self.geometry.default_mode(),
        )?;
        Ok(length_to_angle(&self.geometry, &l).0)
    }

    /// One control period: interpolate the target, compute the position
    /// part, and in APC mode observe the wrench, solve the preload problem
    /// at the target pose and close the force loop.
    pub fn step(
        &mut self,
        schedule: &TrajectorySchedule,
        t: f64,
        phi: &DVector<f64>,
        f_meas: &DVector<f64>,
    ) -> Result<ControlOutput> {
        let target = schedule.target(t);
        let pose = Pose::from_vector(&target);
        let mode = self.geometry.default_mode();
        let phi_d = self.desired_angles(&target)?;
        let omega_q = position_controller(self.gains.kv, &phi_d, phi);
        let structure = structure_matrix_with(&self.geometry, &pose, mode)?;
        let w_obs = wrench_observer(&structure, &CableForces(f_meas.clone()))?;
        let m = self.geometry.m();

        if self.mode == ControlMode::Std {
            return Ok(ControlOutput {
                omega: omega_q.clone(),
                omega_f: DVector::zeros(m),
                omega_q,
                target,
                phi_d,
                f_tar: DVector::from_element(m, f64::NAN),
                w_obs,
                eta: schedule.eta(t),
                status: ControlStatus::PositionOnly,
                warning: None,
            });
        }

        let eta = schedule
            .eta(t)
            .expect("APC schedules carry a preload parameter");
        let basis = nullspace_basis(&structure, self.basis.as_ref())?;
        let advanced = advanced_structure_matrix(&structure, &basis)?;
        let mut problem = PreloadProblem::new(
            structure,
            basis.clone(),
            advanced.clone(),
            w_obs.clone(),
            eta,
            self.limits.clone(),
        )?;
        if let Some(w) = &self.warm {
            problem = problem.with_warm_start(w.clone());
        }
        let solution = optimize_preload(&problem)?;
        self.basis = Some(basis);

        let (f_tar, status, warning) = if solution.feasible
            && solution.status == SolveStatus::Optimal
        {
            self.warm = Some(solution.warm_start.clone());
            self.last_lambda = Some(solution.lambda.clone());
            (solution.forces.0, ControlStatus::Optimal, None)
        } else {
            let lambda = self.last_lambda.clone().unwrap_or(solution.lambda);
            let f = force_distribution(&advanced, &w_obs, &lambda)?;
            let msg = format!(
                "t = {t:.3} s: preload problem {} (violation {:.3} N); holding last feasible preload",
                solution.status.as_str(),
                solution.max_violation
            );
            log::warn!("{msg}");
            (f.0, ControlStatus::HeldLastFeasible, Some(msg))
        };

        let omega_f = force_controller(&self.gains.pid, &f_tar, f_meas, &mut self.pid, self.period);
        Ok(ControlOutput {
            omega: &omega_q + &omega_f,
            omega_q,
            omega_f,
            target,
            phi_d,
            f_tar,
            w_obs,
            eta: Some(eta),
            status,
            warning,
        })
    }
}
