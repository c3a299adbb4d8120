//! Geometric and physical value types shared across the crate.
//!
//! Units are SI throughout: meters, newtons, newton-meters and radians.
//! Orientation vectors use intrinsic X-Y'-Z'' Euler angles, i.e.
//! `R = Rx(alpha) * Ry(beta) * Rz(gamma)`.

use nalgebra::{DVector, Matrix3, Rotation3, Unit, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Name of the Euler convention written into every file that carries angles.
pub const EULER_CONVENTION: &str = "XYZ-intrinsic";

const GIMBAL_TOL: f64 = 1e-9;
const ORTHONORMAL_TOL: f64 = 1e-10;

/// Platform pose as `[x, y, z, alpha, beta, gamma]` (meters, radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseVector(pub [f64; 6]);

impl PoseVector {
    pub const ZERO: PoseVector = PoseVector([0.0; 6]);

    pub fn new(x: f64, y: f64, z: f64, alpha: f64, beta: f64, gamma: f64) -> Self {
        PoseVector([x, y, z, alpha, beta, gamma])
    }

    pub fn from_position(position: Vec3) -> Self {
        PoseVector([position.x, position.y, position.z, 0.0, 0.0, 0.0])
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn angles(&self) -> [f64; 3] {
        [self.0[3], self.0[4], self.0[5]]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn lerp(&self, other: &PoseVector, s: f64) -> PoseVector {
        let mut out = [0.0; 6];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.0[k] + s * (other.0[k] - self.0[k]);
        }
        PoseVector(out)
    }

    /// Component-wise difference `self - other`.
    pub fn diff(&self, other: &PoseVector) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.0[k] - other.0[k];
        }
        out
    }
}

impl std::ops::Index<usize> for PoseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for PoseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Platform position and orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub rotation: Rotation3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            position: Vec3::zeros(),
            rotation: Rotation3::identity(),
        }
    }

    pub fn from_position(position: Vec3) -> Self {
        Pose {
            position,
            rotation: Rotation3::identity(),
        }
    }

    /// Builds a pose from a raw 3x3 matrix, rejecting anything that is not a proper rotation.
    pub fn from_matrix(position: Vec3, rotation: Matrix3<f64>) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).norm();
        let det = rotation.determinant();
        if !(ortho <= ORTHONORMAL_TOL && (det - 1.0).abs() <= ORTHONORMAL_TOL) {
            return Err(Error::InvalidParameter(format!(
                "rotation matrix not orthonormal (|RtR - I| = {ortho:e}, det = {det})"
            )));
        }
        Ok(Pose {
            position,
            rotation: Rotation3::from_matrix_unchecked(rotation),
        })
    }

    pub fn from_vector(y: &PoseVector) -> Self {
        let [a, b, g] = y.angles();
        let rotation = Rotation3::from_axis_angle(&Vec3::x_axis(), a)
            * Rotation3::from_axis_angle(&Vec3::y_axis(), b)
            * Rotation3::from_axis_angle(&Vec3::z_axis(), g);
        Pose {
            position: y.position(),
            rotation,
        }
    }

    /// Inverse of [`Pose::from_vector`]; fails within 1e-9 rad of beta = +-pi/2.
    pub fn to_vector(&self) -> Result<PoseVector> {
        let r = self.rotation.matrix();
        let beta = r[(0, 2)].atan2((r[(0, 0)].powi(2) + r[(0, 1)].powi(2)).sqrt());
        if (beta.abs() - std::f64::consts::FRAC_PI_2).abs() < GIMBAL_TOL {
            return Err(Error::GimbalLock { beta });
        }
        let alpha = (-r[(1, 2)]).atan2(r[(2, 2)]);
        let gamma = (-r[(0, 1)]).atan2(r[(0, 0)]);
        let p = self.position;
        Ok(PoseVector([p.x, p.y, p.z, alpha, beta, gamma]))
    }

    /// Maps a platform-frame point into the world frame.
    pub fn transform(&self, local: &Vec3) -> Vec3 {
        self.position + self.rotation * local
    }
}

pub fn pose_from_vector(y: &PoseVector) -> Pose {
    Pose::from_vector(y)
}

pub fn pose_to_vector(pose: &Pose) -> Result<PoseVector> {
    pose.to_vector()
}

/// Platform degrees of freedom. Planar robots live in the world xy-plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dof {
    /// Translating point mass in the plane (n = 2).
    PlanarPoint,
    /// Planar rigid body: x, y and rotation about z (n = 3).
    PlanarBody,
    /// Full spatial rigid body (n = 6).
    Spatial,
}

impl Dof {
    pub fn from_count(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Dof::PlanarPoint),
            3 => Ok(Dof::PlanarBody),
            6 => Ok(Dof::Spatial),
            _ => Err(Error::InvalidGeometry(format!(
                "unsupported platform DOF {n} (expected 2, 3 or 6)"
            ))),
        }
    }

    pub fn count(self) -> usize {
        match self {
            Dof::PlanarPoint => 2,
            Dof::PlanarBody => 3,
            Dof::Spatial => 6,
        }
    }

    /// Indices into a [`PoseVector`] that this DOF set actually moves.
    pub fn pose_coordinates(self) -> &'static [usize] {
        match self {
            Dof::PlanarPoint => &[0, 1],
            Dof::PlanarBody => &[0, 1, 5],
            Dof::Spatial => &[0, 1, 2, 3, 4, 5],
        }
    }

    /// Reduces a spatial wrench `[f; tau]` to this DOF set.
    pub fn reduce_wrench(self, force: &Vec3, torque: &Vec3) -> DVector<f64> {
        match self {
            Dof::PlanarPoint => DVector::from_column_slice(&[force.x, force.y]),
            Dof::PlanarBody => DVector::from_column_slice(&[force.x, force.y, torque.z]),
            Dof::Spatial => DVector::from_column_slice(&[
                force.x, force.y, force.z, torque.x, torque.y, torque.z,
            ]),
        }
    }
}

/// Guide pulley at a frame anchor. The pulley swivels about `axis`, which
/// passes through the frame anchor; the cable arrives from the winch along
/// `axis` and leaves tangentially toward the platform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulley {
    pub radius: f64,
    pub axis: Unit<Vec3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cable {
    pub frame_anchor: Vec3,
    pub platform_anchor: Vec3,
    pub pulley: Option<Pulley>,
}

impl Cable {
    pub fn new(frame_anchor: Vec3, platform_anchor: Vec3) -> Self {
        Cable {
            frame_anchor,
            platform_anchor,
            pulley: None,
        }
    }

    pub fn with_pulley(mut self, radius: f64, axis: Vec3) -> Self {
        self.pulley = Some(Pulley {
            radius,
            axis: Unit::new_normalize(axis),
        });
        self
    }
}

/// Planetary gear plus drum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winch {
    pub gear_ratio: f64,
    pub drum_radius: f64,
}

impl Winch {
    /// Cable length per drum revolution, `2 pi R_D` [m/rev].
    pub fn circumference(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.drum_radius
    }

    /// Motor angle per unit cable length, `2 pi t_G / t_W` [rad/m].
    pub fn angle_per_meter(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.gear_ratio / self.circumference()
    }
}

impl Default for Winch {
    fn default() -> Self {
        Winch {
            gear_ratio: 1.0,
            drum_radius: 1.0 / (2.0 * std::f64::consts::PI),
        }
    }
}

/// Which inverse kinematics model to use for cable lengths and directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KinematicsMode {
    PointAnchor,
    Pulley,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotGeometry {
    dof: Dof,
    cables: Vec<Cable>,
    winch: Winch,
}

impl RobotGeometry {
    pub fn new(dof: Dof, cables: Vec<Cable>, winch: Winch) -> Result<Self> {
        let n = dof.count();
        let m = cables.len();
        if m < n + 1 {
            return Err(Error::InvalidGeometry(format!(
                "{m} cables cannot redundantly restrain {n} DOF (need at least {})",
                n + 1
            )));
        }
        if !(winch.gear_ratio > 0.0 && winch.gear_ratio.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "gear ratio must be positive, got {}",
                winch.gear_ratio
            )));
        }
        if !(winch.drum_radius > 0.0 && winch.drum_radius.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "drum radius must be positive, got {}",
                winch.drum_radius
            )));
        }
        for (i, c) in cables.iter().enumerate() {
            let finite = c.frame_anchor.iter().all(|v| v.is_finite())
                && c.platform_anchor.iter().all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidGeometry(format!(
                    "cable {i}: non-finite anchor"
                )));
            }
            if let Some(p) = &c.pulley {
                if !(p.radius >= 0.0 && p.radius.is_finite()) {
                    return Err(Error::InvalidGeometry(format!(
                        "cable {i}: pulley radius must be >= 0, got {}",
                        p.radius
                    )));
                }
                if !p.axis.iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidGeometry(format!(
                        "cable {i}: invalid pulley axis"
                    )));
                }
            }
        }
        let with_pulley = cables.iter().filter(|c| c.pulley.is_some()).count();
        if with_pulley != 0 && with_pulley != m {
            return Err(Error::InvalidGeometry(
                "pulleys must be given for all cables or for none".into(),
            ));
        }
        Ok(RobotGeometry { dof, cables, winch })
    }

    pub fn dof(&self) -> Dof {
        self.dof
    }

    /// Platform DOF `n`.
    pub fn n(&self) -> usize {
        self.dof.count()
    }

    /// Cable count `m`.
    pub fn m(&self) -> usize {
        self.cables.len()
    }

    /// Degree of redundancy `m - n`.
    pub fn redundancy(&self) -> usize {
        self.m() - self.n()
    }

    pub fn cables(&self) -> &[Cable] {
        &self.cables
    }

    pub fn winch(&self) -> &Winch {
        &self.winch
    }

    pub fn has_pulleys(&self) -> bool {
        self.cables.iter().all(|c| c.pulley.is_some())
    }

    /// Pulley kinematics when every cable has a pulley, point anchors otherwise.
    pub fn default_mode(&self) -> KinematicsMode {
        if self.has_pulleys() {
            KinematicsMode::Pulley
        } else {
            KinematicsMode::PointAnchor
        }
    }

    /// Same robot with the pulleys removed.
    pub fn without_pulleys(&self) -> RobotGeometry {
        let cables = self
            .cables
            .iter()
            .map(|c| Cable {
                pulley: None,
                ..c.clone()
            })
            .collect();
        RobotGeometry {
            dof: self.dof,
            cables,
            winch: self.winch,
        }
    }
}

/// Per-cable tension limits [N].
#[derive(Debug, Clone, PartialEq)]
pub struct ForceLimits {
    pub min: DVector<f64>,
    pub max: DVector<f64>,
}

impl ForceLimits {
    pub fn new(min: DVector<f64>, max: DVector<f64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::DimensionMismatch {
                context: "force limits",
                expected: min.len(),
                found: max.len(),
            });
        }
        for i in 0..min.len() {
            if !(min[i] > 0.0 && min[i] < max[i] && max[i].is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "cable {i}: force limits must satisfy 0 < f_min < f_max, got [{}, {}]",
                    min[i], max[i]
                )));
            }
        }
        Ok(ForceLimits { min, max })
    }

    /// Broadcasts scalar limits to `m` cables.
    pub fn uniform(m: usize, f_min: f64, f_max: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(m, f_min),
            DVector::from_element(m, f_max),
        )
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    pub fn midpoint(&self) -> DVector<f64> {
        (&self.min + &self.max) * 0.5
    }

    /// True if every entry lies within `[min - tol, max + tol]`.
    pub fn contains(&self, f: &DVector<f64>, tol: f64) -> bool {
        f.len() == self.len()
            && f.iter()
                .enumerate()
                .all(|(i, &v)| v >= self.min[i] - tol && v <= self.max[i] + tol)
    }

    /// Largest amount by which any entry leaves the limits (0 when inside).
    pub fn max_violation(&self, f: &DVector<f64>) -> f64 {
        f.iter()
            .enumerate()
            .map(|(i, &v)| (self.min[i] - v).max(v - self.max[i]).max(0.0))
            .fold(0.0, f64::max)
    }
}
