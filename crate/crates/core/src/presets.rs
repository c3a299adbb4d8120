//! Desk-scale reference robots used by the tests, benches and shipped robot files.

use nalgebra::Matrix3;

use crate::sim::{ControllerGains, PidGains, PlantParams, RobotModel};
use crate::types::{Cable, Dof, ForceLimits, RobotGeometry, Vec3, Winch};

/// Cable force limits used throughout the reference studies [N].
pub const F_MIN: f64 = 50.0;
pub const F_MAX: f64 = 700.0;

/// Platform mass [kg] of the desk robots.
pub const PLATFORM_MASS: f64 = 13.9;
/// Payload handled in the pick-and-place demonstration [kg].
pub const PAYLOAD_MASS: f64 = 15.2;
/// Platform plus tooling carried in the reference z-sweep [kg].
pub const SWEEP_MASS: f64 = 100.0;
pub const GRAVITY: f64 = 9.81;

/// Frame half-width and height of the spatial desk robot [m].
pub const DESK_HALF_WIDTH: f64 = 0.6;
pub const DESK_HEIGHT: f64 = 1.0;
const PLATFORM_HALF: [f64; 3] = [0.1, 0.1, 0.05];
const PULLEY_RADIUS: f64 = 0.025;
const FRAME_SHIFT: f64 = 0.15;

/// Winch of the desk robots: 5:1 planetary gear on a 50 mm drum.
pub const DESK_WINCH: Winch = Winch {
    gear_ratio: 5.0,
    drum_radius: 0.05,
};

const CORNERS: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];

fn desk_cables(pulleys: bool) -> Vec<Cable> {
    let (w, h) = (DESK_HALF_WIDTH, DESK_HEIGHT);
    let [px, py, pz] = PLATFORM_HALF;
    let mut cables = Vec::with_capacity(8);
    // cables 0..4 from the upper frame corners, 4..8 from the lower ones; the
    // frame anchors are shifted along the frame edges in alternating senses
    // so that the cables can resist torque about z
    for (z_frame, z_platform, axis, shift) in [
        (h, pz, Vec3::z(), FRAME_SHIFT),
        (0.0, -pz, -Vec3::z(), -FRAME_SHIFT),
    ] {
        for (k, &(sx, sy)) in CORNERS.iter().enumerate() {
            let shift = if k % 2 == 0 { shift } else { -shift };
            let frame = Vec3::new(sx * w - sy * shift, sy * w + sx * shift, z_frame);
            let c = Cable::new(frame, Vec3::new(sx * px, sy * py, z_platform));
            cables.push(if pulleys {
                c.with_pulley(PULLEY_RADIUS, axis)
            } else {
                c
            });
        }
    }
    cables
}

/// Spatial 8-cable robot with point anchors: 1.2 m x 1.2 m x 1.0 m frame and
/// a 0.2 m x 0.2 m x 0.1 m platform; four cables from the top corners, four
/// from the bottom corners.
pub fn desk_spatial() -> RobotGeometry {
    RobotGeometry::new(Dof::Spatial, desk_cables(false), DESK_WINCH).expect("valid preset")
}

/// [`desk_spatial`] with 25 mm guide pulleys at every frame anchor.
pub fn desk_spatial_pulley() -> RobotGeometry {
    RobotGeometry::new(Dof::Spatial, desk_cables(true), DESK_WINCH).expect("valid preset")
}

/// Planar point mass on three cables from the unit circle at 90, 210 and 330 degrees.
pub fn planar_triangle() -> RobotGeometry {
    let cables = [90.0f64, 210.0, 330.0]
        .iter()
        .map(|deg| {
            let a = deg.to_radians();
            Cable::new(Vec3::new(a.cos(), a.sin(), 0.0), Vec3::zeros())
        })
        .collect();
    RobotGeometry::new(Dof::PlanarPoint, cables, DESK_WINCH).expect("valid preset")
}

/// Planar point mass on four cables from the corners of a 1 m square (rho = 2).
pub fn planar_square_point() -> RobotGeometry {
    let cables = CORNERS
        .iter()
        .map(|&(sx, sy)| Cable::new(Vec3::new(0.5 * sx, 0.5 * sy, 0.0), Vec3::zeros()))
        .collect();
    RobotGeometry::new(Dof::PlanarPoint, cables, DESK_WINCH).expect("valid preset")
}

/// Planar rigid body on four cables (rho = 1).
pub fn planar_body_four() -> RobotGeometry {
    let cables = CORNERS
        .iter()
        .map(|&(sx, sy)| {
            Cable::new(
                Vec3::new(0.5 * sx, 0.5 * sy, 0.0),
                Vec3::new(0.05 * sx, 0.05 * sy, 0.0),
            )
        })
        .collect();
    RobotGeometry::new(Dof::PlanarBody, cables, DESK_WINCH).expect("valid preset")
}

/// Planar rigid body on five cables (rho = 2).
pub fn planar_body_five() -> RobotGeometry {
    let cables = (0..5)
        .map(|i| {
            let a = (90.0 + 72.0 * i as f64).to_radians();
            let b = a + 0.3;
            Cable::new(
                Vec3::new(0.5 * a.cos(), 0.5 * a.sin(), 0.0),
                Vec3::new(0.05 * b.cos(), 0.05 * b.sin(), 0.0),
            )
        })
        .collect();
    RobotGeometry::new(Dof::PlanarBody, cables, DESK_WINCH).expect("valid preset")
}

pub fn desk_limits(m: usize) -> ForceLimits {
    ForceLimits::uniform(m, F_MIN, F_MAX).expect("valid preset limits")
}

/// Plant constants of the desk robots.
pub fn desk_plant() -> PlantParams {
    PlantParams {
        platform_mass: PLATFORM_MASS,
        inertia: Matrix3::from_diagonal(&Vec3::new(0.2, 0.2, 0.3)),
        ea: 1e5,
        damping: 300.0,
        motor_tau: 0.01,
        gravity: GRAVITY,
    }
}

pub fn desk_gains() -> ControllerGains {
    ControllerGains {
        kv: 10.0,
        pid: PidGains {
            kp: 0.0035,
            ki: 0.04,
            kd: 0.0,
            saturation: 10.0,
        },
    }
}

/// The spatial pulley robot with its limits, plant and gains.
pub fn desk_model() -> RobotModel {
    RobotModel {
        name: "desk8".into(),
        geometry: desk_spatial_pulley(),
        limits: desk_limits(8),
        plant: desk_plant(),
        gains: desk_gains(),
    }
}
