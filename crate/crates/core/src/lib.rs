//! Adaptive preload control for redundantly restrained cable-driven
//! parallel robots.
//!
//! The crate covers the whole chain from geometry to closed-loop simulation:
//!
//! - [`kinematics`]: inverse kinematics (point anchors and guide pulleys),
//!   forward kinematics, structure matrix, drive-angle conversion.
//! - [`redundancy`]: kernel basis of the structure matrix, the
//!   nullspace-extended structure matrix and unique force distributions,
//!   wrench observation and the closed-form baseline.
//! - [`preload`]: the constrained preload-parameter optimisation and path sweeps.
//! - [`sim`]: hybrid position/force control loop and a rigid-body plant.
//! - [`io`]: robot and schedule files, CSV output.

pub mod error;
pub mod io;
pub mod kinematics;
pub mod parallel;
pub mod preload;
pub mod presets;
pub mod qp;
pub mod redundancy;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
pub use kinematics::{
    angle_to_length, forward_kinematics, inverse_kinematics, inverse_kinematics_pulley,
    length_to_angle, structure_matrix, CableLengths, DriveAngles, FkSolution, StructureMatrix,
};
pub use preload::{
    optimize_preload, reference_force, sweep_path, Eta, PreloadProblem, PreloadSolution,
    SweepOptions, SweepReport,
};
pub use redundancy::{
    advanced_structure_matrix, closed_form_distribution, force_distribution, nullspace_basis,
    wrench_observer, AdvancedStructureMatrix, CableForces, NullspaceBasis, Wrench,
};
pub use types::{
    pose_from_vector, pose_to_vector, Cable, Dof, ForceLimits, KinematicsMode, Pose, PoseVector,
    RobotGeometry, Vec3, Winch,
};
