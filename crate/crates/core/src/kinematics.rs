//! Inverse and forward kinematics, structure matrix assembly and the
//! cable-length / motor-angle conversion.

use std::f64::consts::PI;
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::types::{Dof, KinematicsMode, Pose, PoseVector, Pulley, RobotGeometry, Vec3};

/// Cables shorter than this are treated as degenerate.
pub const MIN_CABLE_LENGTH: f64 = 1e-9;

/// Free cable lengths [m].
#[derive(Debug, Clone, PartialEq)]
pub struct CableLengths(pub DVector<f64>);

impl Deref for CableLengths {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Motor angles [rad].
#[derive(Debug, Clone, PartialEq)]
pub struct DriveAngles(pub DVector<f64>);

impl Deref for DriveAngles {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

/// `n x m` map from cable tensions to platform wrench, with the cached
/// per-cable unit vectors and lever arms it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix {
    matrix: DMatrix<f64>,
    directions: Vec<Vec3>,
    lever_arms: Vec<Vec3>,
    dof: Dof,
}

impl StructureMatrix {
    /// Assembles the matrix from world-frame cable directions (pointing from
    /// the platform toward the frame) and world-frame lever arms `R b_i`.
    pub fn from_directions(dof: Dof, directions: Vec<Vec3>, lever_arms: Vec<Vec3>) -> Result<Self> {
        if directions.len() != lever_arms.len() {
            return Err(Error::DimensionMismatch {
                context: "structure matrix lever arms",
                expected: directions.len(),
                found: lever_arms.len(),
            });
        }
        let n = dof.count();
        let mut matrix = DMatrix::zeros(n, directions.len());
        for (i, (u, rb)) in directions.iter().zip(&lever_arms).enumerate() {
            let column = dof.reduce_wrench(u, &rb.cross(u));
            matrix.set_column(i, &column);
        }
        Ok(StructureMatrix {
            matrix,
            directions,
            lever_arms,
            dof,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    pub fn lever_arms(&self) -> &[Vec3] {
        &self.lever_arms
    }

    pub fn dof(&self) -> Dof {
        self.dof
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn m(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Point-anchor inverse kinematics, `l_i = |a_i - r - R b_i|`.
pub fn inverse_kinematics(geom: &RobotGeometry, pose: &Pose) -> Result<CableLengths> {
    let lengths = geom
        .cables()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let l = (c.frame_anchor - pose.transform(&c.platform_anchor)).norm();
            if l < MIN_CABLE_LENGTH {
                Err(Error::DegenerateCable {
                    cable: i,
                    length: l,
                })
            } else {
                Ok(l)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CableLengths(DVector::from_vec(lengths)))
}

/// Contact of the free cable with one pulley.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulleyContact {
    /// Wrapped arc plus free tangent segment [m].
    pub length: f64,
    /// Point where the free cable leaves the pulley.
    pub exit_point: Vec3,
    /// Angle the cable is wrapped around the pulley [rad].
    pub wrap_angle: f64,
}

/// Resolves one cable around its pulley. `frame_anchor` is the cable entry
/// point on the swivel axis; `target` is the platform anchor in world frame.
pub fn pulley_contact(
    cable: usize,
    frame_anchor: &Vec3,
    pulley: &Pulley,
    target: &Vec3,
) -> Result<PulleyContact> {
    let v = target - frame_anchor;
    let radius = pulley.radius;
    if radius == 0.0 {
        let l = v.norm();
        if l < MIN_CABLE_LENGTH {
            return Err(Error::DegenerateCable { cable, length: l });
        }
        return Ok(PulleyContact {
            length: l,
            exit_point: *frame_anchor,
            wrap_angle: 0.0,
        });
    }
    let axis = pulley.axis.into_inner();
    let along = v.dot(&axis);
    let radial = v - axis * along;
    let radial_norm = radial.norm();
    if radial_norm < MIN_CABLE_LENGTH {
        return Err(Error::PulleyInfeasible {
            cable,
            reason: "platform anchor lies on the swivel axis".into(),
        });
    }
    let e_u = radial / radial_norm;
    let center = frame_anchor + e_u * radius;
    // pulley-plane coordinates of the target relative to the pulley center
    let dx = radial_norm - radius;
    let dz = along;
    let dist = dx.hypot(dz);
    if dist <= radius {
        return Err(Error::PulleyInfeasible {
            cable,
            reason: format!("platform anchor inside the pulley circle ({dist:e} <= {radius:e} m)"),
        });
    }
    let tangent = (dist * dist - radius * radius).sqrt();
    let theta = dz.atan2(dx) + (radius / dist).acos();
    let wrap_angle = (PI - theta).rem_euclid(2.0 * PI);
    let exit_point = center + (e_u * theta.cos() + axis * theta.sin()) * radius;
    Ok(PulleyContact {
        length: radius * wrap_angle + tangent,
        exit_point,
        wrap_angle,
    })
}

/// Inverse kinematics with guide pulleys at the frame anchors. Returns the
/// cable lengths and the pulley exit points.
pub fn inverse_kinematics_pulley(
    geom: &RobotGeometry,
    pose: &Pose,
) -> Result<(CableLengths, Vec<Vec3>)> {
    let m = geom.m();
    let mut lengths = DVector::zeros(m);
    let mut exits = Vec::with_capacity(m);
    for (i, c) in geom.cables().iter().enumerate() {
        let pulley = c
            .pulley
            .as_ref()
            .ok_or_else(|| Error::InvalidGeometry(format!("cable {i} has no pulley parameters")))?;
        let contact = pulley_contact(
            i,
            &c.frame_anchor,
            pulley,
            &pose.transform(&c.platform_anchor),
        )?;
        lengths[i] = contact.length;
        exits.push(contact.exit_point);
    }
    Ok((CableLengths(lengths), exits))
}

/// Cable lengths under the requested kinematics model.
pub fn cable_lengths(
    geom: &RobotGeometry,
    pose: &Pose,
    mode: KinematicsMode,
) -> Result<CableLengths> {
    match mode {
        KinematicsMode::PointAnchor => inverse_kinematics(geom, pose),
        KinematicsMode::Pulley => inverse_kinematics_pulley(geom, pose).map(|(l, _)| l),
    }
}

/// Structure matrix in the geometry's default kinematics mode.
pub fn structure_matrix(geom: &RobotGeometry, pose: &Pose) -> Result<StructureMatrix> {
    structure_matrix_with(geom, pose, geom.default_mode())
}

/// Structure matrix with columns `[u_i; (R b_i) x u_i]`. In pulley mode `u_i`
/// points from the platform anchor toward the pulley exit point.
pub fn structure_matrix_with(
    geom: &RobotGeometry,
    pose: &Pose,
    mode: KinematicsMode,
) -> Result<StructureMatrix> {
    let m = geom.m();
    let mut directions = Vec::with_capacity(m);
    let mut lever_arms = Vec::with_capacity(m);
    let exits = match mode {
        KinematicsMode::PointAnchor => None,
        KinematicsMode::Pulley => Some(inverse_kinematics_pulley(geom, pose)?.1),
    };
    for (i, c) in geom.cables().iter().enumerate() {
        let rb = pose.rotation * c.platform_anchor;
        let anchor = exits.as_ref().map_or(c.frame_anchor, |e| e[i]);
        let l = anchor - pose.position - rb;
        let norm = l.norm();
        if norm < MIN_CABLE_LENGTH {
            return Err(Error::DegenerateCable {
                cable: i,
                length: norm,
            });
        }
        directions.push(l / norm);
        lever_arms.push(rb);
    }
    StructureMatrix::from_directions(geom.dof(), directions, lever_arms)
}

#[derive(Debug, Clone, Copy)]
pub struct FkOptions {
    pub max_iterations: usize,
    pub step_tol: f64,
    pub stagnation_tol: f64,
    pub mode: Option<KinematicsMode>,
}

impl Default for FkOptions {
    fn default() -> Self {
        FkOptions {
            max_iterations: 100,
            step_tol: 1e-12,
            stagnation_tol: 1e-14,
            mode: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkSolution {
    pub pose: PoseVector,
    /// Euclidean norm of `IK(pose) - l_meas` [m].
    pub residual: f64,
    pub iterations: usize,
}

/// Forward kinematics with default options.
pub fn forward_kinematics(
    geom: &RobotGeometry,
    measured: &CableLengths,
    guess: &PoseVector,
) -> Result<FkSolution> {
    forward_kinematics_with(geom, measured, guess, &FkOptions::default())
}

/// Damped Gauss-Newton on the length residual over the pose coordinates the
/// robot's DOF set moves. Coordinates outside that set keep their guessed value.
pub fn forward_kinematics_with(
    geom: &RobotGeometry,
    measured: &CableLengths,
    guess: &PoseVector,
    opts: &FkOptions,
) -> Result<FkSolution> {
    if measured.len() != geom.m() {
        return Err(Error::DimensionMismatch {
            context: "forward kinematics lengths",
            expected: geom.m(),
            found: measured.len(),
        });
    }
    let mode = opts.mode.unwrap_or_else(|| geom.default_mode());
    let coords = geom.dof().pose_coordinates();
    let k = coords.len();

    let residual_at = |y: &PoseVector| -> Result<DVector<f64>> {
        let l = cable_lengths(geom, &Pose::from_vector(y), mode)?;
        Ok(l.0 - &measured.0)
    };

    let mut y = *guess;
    let mut r = residual_at(&y)?;
    let mut cost = r.norm_squared();
    let mut damping = 1e-9;

    for iter in 1..=opts.max_iterations {
        let mut jac = DMatrix::zeros(geom.m(), k);
        for (col, &c) in coords.iter().enumerate() {
            let h = 1e-7 * (1.0 + y[c].abs());
            let (mut yp, mut ym) = (y, y);
            yp[c] += h;
            ym[c] -= h;
            let d = (residual_at(&yp)? - residual_at(&ym)?) / (2.0 * h);
            jac.set_column(col, &d);
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;

        let mut accepted = None;
        for _ in 0..30 {
            let mut lhs = jtj.clone();
            for d in 0..k {
                lhs[(d, d)] += damping * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = lhs.cholesky().map(|ch| ch.solve(&(-&grad))) else {
                damping *= 10.0;
                continue;
            };
            let mut trial = y;
            for (col, &c) in coords.iter().enumerate() {
                trial[c] += step[col];
            }
            match residual_at(&trial) {
                Ok(rt) if rt.norm_squared() <= cost => {
                    accepted = Some((trial, rt, step.norm()));
                    break;
                }
                _ => damping *= 10.0,
            }
        }
        let Some((trial, rt, step_norm)) = accepted else {
            // no descent direction left: we are at a (local) minimum
            return Ok(FkSolution {
                pose: y,
                residual: cost.sqrt(),
                iterations: iter,
            });
        };
        let new_cost = rt.norm_squared();
        let stagnated = (cost.sqrt() - new_cost.sqrt()).abs() < opts.stagnation_tol;
        y = trial;
        r = rt;
        cost = new_cost;
        damping = (damping * 0.1).max(1e-15);
        if step_norm < opts.step_tol || stagnated {
            return Ok(FkSolution {
                pose: y,
                residual: cost.sqrt(),
                iterations: iter,
            });
        }
    }
    Err(Error::NonConvergence {
        best: y,
        residual: cost.sqrt(),
        iterations: opts.max_iterations,
    })
}

/// `phi_i = c_phi * l_i` with `c_phi = 2 pi t_G / t_W`.
pub fn length_to_angle(geom: &RobotGeometry, lengths: &CableLengths) -> DriveAngles {
    DriveAngles(&lengths.0 * geom.winch().angle_per_meter())
}

pub fn angle_to_length(geom: &RobotGeometry, angles: &DriveAngles) -> CableLengths {
    CableLengths(&angles.0 / geom.winch().angle_per_meter())
}
