//! Rigid-body platform on elastic, unilateral cables driven by
//! velocity-controlled winches.

use nalgebra::{DVector, Rotation3};

use crate::error::{Error, Result};
use crate::kinematics::inverse_kinematics_pulley;
use crate::types::{KinematicsMode, Pose, PoseVector, RobotGeometry, Vec3};

use super::params::PlantParams;

/// Stiffness and damping of the fixture that holds the platform during a jam.
pub const JAM_STIFFNESS: f64 = 1e6;
pub const JAM_DAMPING: f64 = 4e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jam {
    pub anchor: Vec3,
    pub until: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub position: Vec3,
    pub rotation: Rotation3<f64>,
    /// World-frame linear velocity [m/s].
    pub velocity: Vec3,
    /// World-frame angular velocity [rad/s].
    pub angular_velocity: Vec3,
    /// Motor angles [rad].
    pub phi: DVector<f64>,
    /// Motor speeds [rad/s].
    pub phi_dot: DVector<f64>,
    /// Cable tensions from the last plant step [N].
    pub forces: DVector<f64>,
    pub payload_mass: f64,
    pub jam: Option<Jam>,
}

impl SimState {
    pub fn at_rest(pose: &PoseVector, phi: DVector<f64>) -> Self {
        let p = Pose::from_vector(pose);
        let m = phi.len();
        SimState {
            time: 0.0,
            position: p.position,
            rotation: p.rotation,
            velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            phi,
            phi_dot: DVector::zeros(m),
            forces: DVector::zeros(m),
            payload_mass: 0.0,
            jam: None,
        }
    }

    pub fn pose(&self) -> Pose {
        Pose {
            position: self.position,
            rotation: self.rotation,
        }
    }

    fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.angular_velocity.iter().all(|v| v.is_finite())
            && self.rotation.matrix().iter().all(|v| v.is_finite())
            && self.phi.iter().all(|v| v.is_finite())
            && self.phi_dot.iter().all(|v| v.is_finite())
    }
}

/// Geometric cable state at a pose: lengths, unit directions from the
/// platform anchors toward the frame (or pulley exit) and world lever arms.
#[derive(Debug, Clone)]
pub struct CableGeometry {
    pub lengths: DVector<f64>,
    pub directions: Vec<Vec3>,
    pub lever_arms: Vec<Vec3>,
}

pub fn cable_geometry(geom: &RobotGeometry, pose: &Pose) -> Result<CableGeometry> {
    let m = geom.m();
    let (lengths, exits) = match geom.default_mode() {
        KinematicsMode::Pulley => {
            let (l, e) = inverse_kinematics_pulley(geom, pose)?;
            (l.0, Some(e))
        }
        KinematicsMode::PointAnchor => (DVector::zeros(m), None),
    };
    let mut out = CableGeometry {
        lengths,
        directions: Vec::with_capacity(m),
        lever_arms: Vec::with_capacity(m),
    };
    for (i, c) in geom.cables().iter().enumerate() {
        let rb = pose.rotation * c.platform_anchor;
        let anchor = exits.as_ref().map_or(c.frame_anchor, |e| e[i]);
        let d = anchor - pose.position - rb;
        let norm = d.norm();
        if norm < crate::kinematics::MIN_CABLE_LENGTH {
            return Err(Error::DegenerateCable {
                cable: i,
                length: norm,
            });
        }
        if exits.is_none() {
            out.lengths[i] = norm;
        }
        out.directions.push(d / norm);
        out.lever_arms.push(rb);
    }
    Ok(out)
}

/// Tension of one cable: linear elastic with viscous damping while
/// stretched, zero while slack.
pub fn cable_tension(ea: f64, damping: f64, natural: f64, length: f64, stretch_rate: f64) -> f64 {
    let stretch = length - natural;
    if stretch <= 0.0 {
        return 0.0;
    }
    (ea / natural * stretch + damping * stretch_rate).max(0.0)
}

/// Natural cable lengths encoded by the motor angles.
pub fn natural_lengths(geom: &RobotGeometry, phi: &DVector<f64>) -> DVector<f64> {
    phi / geom.winch().angle_per_meter()
}

/// Cable tensions of `state` without advancing it.
pub fn tensions(
    geom: &RobotGeometry,
    params: &PlantParams,
    state: &SimState,
) -> Result<DVector<f64>> {
    let cg = cable_geometry(geom, &state.pose())?;
    Ok(tensions_with(geom, params, state, &cg))
}

fn tensions_with(
    geom: &RobotGeometry,
    params: &PlantParams,
    state: &SimState,
    cg: &CableGeometry,
) -> DVector<f64> {
    let c_phi = geom.winch().angle_per_meter();
    let l0 = natural_lengths(geom, &state.phi);
    DVector::from_fn(geom.m(), |i, _| {
        let anchor_velocity = state.velocity + state.angular_velocity.cross(&cg.lever_arms[i]);
        let length_rate = -cg.directions[i].dot(&anchor_velocity);
        let rate = length_rate - state.phi_dot[i] / c_phi;
        cable_tension(params.ea, params.damping, l0[i], cg.lengths[i], rate)
    })
}

/// Net force and torque about the platform origin from cables, gravity and
/// an active jam fixture.
fn loads(
    params: &PlantParams,
    state: &SimState,
    cg: &CableGeometry,
    forces: &DVector<f64>,
) -> (Vec3, Vec3) {
    let mut force = Vec3::new(
        0.0,
        0.0,
        -(params.platform_mass + state.payload_mass) * params.gravity,
    );
    let mut torque = Vec3::zeros();
    for i in 0..forces.len() {
        let f = cg.directions[i] * forces[i];
        force += f;
        torque += cg.lever_arms[i].cross(&f);
    }
    if let Some(jam) = state.jam {
        if state.time < jam.until {
            force -= (state.position - jam.anchor) * JAM_STIFFNESS + state.velocity * JAM_DAMPING;
        }
    }
    (force, torque)
}

/// Total mechanical energy: kinetic, gravitational and elastic (cables only).
pub fn mechanical_energy(
    geom: &RobotGeometry,
    params: &PlantParams,
    state: &SimState,
) -> Result<f64> {
    let cg = cable_geometry(geom, &state.pose())?;
    let mass = params.platform_mass + state.payload_mass;
    let inertia = state.rotation.matrix() * params.inertia * state.rotation.matrix().transpose();
    let kinetic = 0.5 * mass * state.velocity.norm_squared()
        + 0.5
            * state
                .angular_velocity
                .dot(&(inertia * state.angular_velocity));
    let potential = mass * params.gravity * state.position.z;
    let l0 = natural_lengths(geom, &state.phi);
    let elastic: f64 = (0..geom.m())
        .map(|i| {
            let s = (cg.lengths[i] - l0[i]).max(0.0);
            0.5 * params.ea / l0[i] * s * s
        })
        .sum();
    Ok(kinetic + potential + elastic)
}

/// Advances the plant by `dt` with semi-implicit Euler: motor speeds follow
/// `omega_tar` through a first-order lag, then cable tensions are evaluated
/// and velocities are updated before positions.
pub fn step_plant(
    geom: &RobotGeometry,
    params: &PlantParams,
    state: &mut SimState,
    omega_tar: &DVector<f64>,
    dt: f64,
) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "plant step must be positive, got {dt}"
        )));
    }
    let alpha = 1.0 - (-dt / params.motor_tau).exp();
    state.phi_dot += (omega_tar - &state.phi_dot) * alpha;
    state.phi += &state.phi_dot * dt;
    if state.phi.iter().any(|&p| p <= 0.0) {
        return Err(Error::NonFinite {
            time: state.time,
            what: "a cable was wound in completely".into(),
        });
    }

    let cg = cable_geometry(geom, &state.pose()).map_err(|e| Error::NonFinite {
        time: state.time,
        what: format!("cable geometry failed: {e}"),
    })?;
    let forces = tensions_with(geom, params, state, &cg);
    let (force, torque) = loads(params, state, &cg, &forces);

    let mass = params.platform_mass + state.payload_mass;
    let r = *state.rotation.matrix();
    let inertia = r * params.inertia * r.transpose();
    let inv = inertia
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("singular platform inertia".into()))?;
    let w = state.angular_velocity;
    let angular_acc = inv * (torque - w.cross(&(inertia * w)));

    state.velocity += force / mass * dt;
    state.angular_velocity += angular_acc * dt;
    state.position += state.velocity * dt;
    state.rotation = Rotation3::new(state.angular_velocity * dt) * state.rotation;
    state.forces = forces;
    state.time += dt;
    if let Some(jam) = state.jam {
        if state.time >= jam.until {
            state.jam = None;
        }
    }

    if !state.is_finite() {
        return Err(Error::NonFinite {
            time: state.time,
            what: "platform or motor state".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{cable_lengths, length_to_angle};
    use crate::presets;
    use crate::types::{Cable, Dof};
    use nalgebra::Matrix3;

    fn params() -> PlantParams {
        presets::desk_plant()
    }

    fn slack_state(geom: &RobotGeometry, pose: &PoseVector) -> SimState {
        let l = cable_lengths(geom, &Pose::from_vector(pose), geom.default_mode()).unwrap();
        let phi = length_to_angle(geom, &l).0 * 1.5;
        SimState::at_rest(pose, phi)
    }

    #[test]
    fn tension_is_unilateral() {
        assert_eq!(cable_tension(1e5, 100.0, 1.0, 0.99, 10.0), 0.0);
        assert_eq!(cable_tension(1e5, 100.0, 1.0, 1.001, -1e3), 0.0);
        assert!((cable_tension(1e5, 0.0, 1.0, 1.001, 0.0) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn free_fall_when_all_cables_slack() {
        let geom = presets::desk_spatial_pulley();
        let p = params();
        let mut s = slack_state(&geom, &PoseVector::new(0.0, 0.0, 0.5, 0.0, 0.0, 0.0));
        let dt = 1e-3;
        step_plant(&geom, &p, &mut s, &DVector::zeros(8), dt).unwrap();
        assert!(s.forces.iter().all(|&f| f == 0.0));
        assert!((s.velocity.z + p.gravity * dt).abs() < 1e-15);
        assert_eq!(s.velocity.x, 0.0);
    }

    #[test]
    fn balanced_state_without_gravity_stays_put() {
        let geom = presets::desk_spatial_pulley();
        let mut p = params();
        p.gravity = 1e-300;
        let pose = PoseVector::new(0.0, 0.0, 0.5, 0.0, 0.0, 0.0);
        // exactly geometric lengths: every cable just taut with zero tension
        let l = cable_lengths(&geom, &Pose::from_vector(&pose), geom.default_mode()).unwrap();
        let mut s = SimState::at_rest(&pose, length_to_angle(&geom, &l).0);
        let before = s.clone();
        for _ in 0..100 {
            step_plant(&geom, &p, &mut s, &DVector::zeros(8), 1e-3).unwrap();
        }
        assert!((s.position - before.position).norm() < 1e-12);
        assert_eq!(s.phi, before.phi);
    }

    #[test]
    fn hanging_mass_static_elongation() {
        // one vertical cable above the origin holds the platform; six more
        // cables are left slack
        let mut cables = vec![Cable::new(Vec3::new(0.0, 0.0, 1.0), Vec3::zeros())];
        for k in 0..6 {
            let a = k as f64 * std::f64::consts::PI / 3.0;
            cables.push(Cable::new(
                Vec3::new(a.cos(), a.sin(), 0.0),
                Vec3::new(0.05 * a.cos(), 0.05 * a.sin(), 0.0),
            ));
        }
        let geom = RobotGeometry::new(Dof::Spatial, cables, presets::DESK_WINCH).unwrap();
        let p = PlantParams {
            platform_mass: 10.0,
            inertia: Matrix3::identity() * 0.1,
            ea: 2e4,
            damping: 300.0,
            motor_tau: 0.01,
            gravity: 9.81,
        };
        let pose = PoseVector::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let mut s = slack_state(&geom, &pose);
        let l0 = 1.0;
        s.phi[0] = l0 * geom.winch().angle_per_meter();
        for _ in 0..20_000 {
            step_plant(&geom, &p, &mut s, &DVector::zeros(7), 1e-3).unwrap();
        }
        let expected = p.platform_mass * p.gravity * l0 / p.ea;
        let stretch = (1.0 - s.position.z) - l0;
        assert!(
            (stretch - expected).abs() < 1e-6 * expected.max(1.0),
            "{stretch} vs {expected}"
        );
        assert!((s.forces[0] - p.platform_mass * p.gravity).abs() < 1e-6);
        assert!(s.forces.iter().skip(1).all(|&f| f == 0.0));
    }

    #[test]
    fn damped_unforced_energy_does_not_grow() {
        let geom = presets::desk_spatial_pulley();
        let p = params();
        let pose = PoseVector::new(0.0, 0.0, 0.5, 0.0, 0.0, 0.0);
        let l = cable_lengths(&geom, &Pose::from_vector(&pose), geom.default_mode()).unwrap();
        // 2 mm pre-stretch on every cable, then a kick
        let mut s = SimState::at_rest(&pose, length_to_angle(&geom, &l).0 * (1.0 - 0.002 / 0.7));
        s.velocity = Vec3::new(0.05, -0.03, 0.02);
        s.angular_velocity = Vec3::new(0.1, 0.0, -0.2);
        let e0 = mechanical_energy(&geom, &p, &s).unwrap();
        let mut checkpoints = vec![e0];
        for k in 1..=2000 {
            step_plant(&geom, &p, &mut s, &DVector::zeros(8), 1e-3).unwrap();
            if k % 200 == 0 {
                checkpoints.push(mechanical_energy(&geom, &p, &s).unwrap());
            }
        }
        for w in checkpoints.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-6), "{checkpoints:?}");
        }
        assert!(checkpoints.last().unwrap() < &e0);
    }

    #[test]
    fn nonpositive_step_rejected() {
        let geom = presets::desk_spatial_pulley();
        let mut s = slack_state(&geom, &PoseVector::new(0.0, 0.0, 0.5, 0.0, 0.0, 0.0));
        assert!(step_plant(&geom, &params(), &mut s, &DVector::zeros(8), 0.0).is_err());
    }
}
