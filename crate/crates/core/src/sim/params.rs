use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::types::{ForceLimits, RobotGeometry};

/// Physical constants of the simulated plant.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    /// Platform mass without payload [kg].
    pub platform_mass: f64,
    /// Platform inertia about its origin in platform coordinates [kg m^2].
    pub inertia: Matrix3<f64>,
    /// Specific cable stiffness EA [N]; a cable of natural length `l0` has
    /// stiffness `EA / l0`.
    pub ea: f64,
    /// Cable damping [N s/m].
    pub damping: f64,
    /// Time constant of the motor velocity loop [s].
    pub motor_tau: f64,
    /// Gravitational acceleration along -z [m/s^2].
    pub gravity: f64,
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("platform mass", self.platform_mass),
            ("EA", self.ea),
            ("cable damping", self.damping),
            ("motor time constant", self.motor_tau),
            ("gravity", self.gravity),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let sym = (self.inertia - self.inertia.transpose()).norm();
        let chol = self.inertia.cholesky();
        if sym > 1e-12 * self.inertia.norm() || chol.is_none() {
            return Err(Error::InvalidParameter(
                "inertia must be symmetric positive definite".into(),
            ));
        }
        Ok(())
    }
}

/// Discrete PID acting on the force error of one cable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    /// [rad/(s N)]
    pub kp: f64,
    /// [rad/(s^2 N)]
    pub ki: f64,
    /// [rad/N]
    pub kd: f64,
    /// Output saturation [rad/s].
    pub saturation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    /// Position gain [1/s].
    pub kv: f64,
    pub pid: PidGains,
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        if !(self.kv > 0.0 && self.kv.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "K_v must be positive, got {}",
                self.kv
            )));
        }
        let p = &self.pid;
        if !(p.saturation > 0.0 && p.saturation.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "force controller saturation must be positive, got {}",
                p.saturation
            )));
        }
        for (name, v) in [("kp", p.kp), ("ki", p.ki), ("kd", p.kd)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "PID gain {name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Loop timing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Controller sample time [s].
    pub control_period: f64,
    /// Plant integration step [s].
    pub substep: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            control_period: 0.02,
            substep: 0.001,
        }
    }
}

impl SimConfig {
    /// Number of plant steps per control period.
    pub fn substeps(&self) -> Result<usize> {
        if !(self.control_period > 0.0 && self.substep > 0.0) {
            return Err(Error::InvalidParameter(
                "control period and substep must be positive".into(),
            ));
        }
        let k = (self.control_period / self.substep).round();
        if k < 1.0 || (k * self.substep - self.control_period).abs() > 1e-9 * self.control_period {
            return Err(Error::InvalidParameter(format!(
                "control period {} is not a multiple of the substep {}",
                self.control_period, self.substep
            )));
        }
        Ok(k as usize)
    }
}

/// Everything the simulator needs to know about a machine.
#[derive(Debug, Clone)]
pub struct RobotModel {
    pub name: String,
    pub geometry: RobotGeometry,
    pub limits: ForceLimits,
    pub plant: PlantParams,
    pub gains: ControllerGains,
}

impl RobotModel {
    pub fn validate(&self) -> Result<()> {
        if self.limits.len() != self.geometry.m() {
            return Err(Error::DimensionMismatch {
                context: "robot force limits",
                expected: self.geometry.m(),
                found: self.limits.len(),
            });
        }
        self.plant.validate()?;
        self.gains.validate()
    }
}
