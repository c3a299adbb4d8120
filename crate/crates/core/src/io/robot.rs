//! Robot description files (JSON).

use std::path::Path;

use nalgebra::{DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{ControllerGains, PidGains, PlantParams, RobotModel};
use crate::types::{Cable, Dof, ForceLimits, RobotGeometry, Vec3, Winch, EULER_CONVENTION};

use super::{format_error, read_file};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulleySpec {
    pub radius: f64,
    pub axis: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CableSpec {
    pub frame_anchor: [f64; 3],
    pub platform_anchor: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulley: Option<PulleySpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WinchSpec {
    pub gear_ratio: f64,
    pub drum_radius: f64,
}

/// A scalar broadcast to every cable, or one value per cable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerCable {
    Scalar(f64),
    List(Vec<f64>),
}

impl PerCable {
    fn expand(&self, m: usize, field: &str) -> std::result::Result<DVector<f64>, String> {
        match self {
            PerCable::Scalar(v) => Ok(DVector::from_element(m, *v)),
            PerCable::List(v) if v.len() == m => Ok(DVector::from_column_slice(v)),
            PerCable::List(v) => Err(format!("{field}: expected {m} values, found {}", v.len())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSpec {
    pub f_min: PerCable,
    pub f_max: PerCable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub platform_mass: f64,
    pub inertia: [[f64; 3]; 3],
    #[serde(rename = "EA")]
    pub ea: f64,
    pub damping: f64,
    pub motor_tau: f64,
    pub gravity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidSpec {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub sat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSpec {
    #[serde(rename = "K_v")]
    pub kv: f64,
    pub pid: PidSpec,
}

/// On-disk layout of a robot description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotDescriptionFile {
    pub name: String,
    pub dof: usize,
    pub euler_convention: String,
    pub cables: Vec<CableSpec>,
    pub winch: WinchSpec,
    pub limits: LimitsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant: Option<PlantSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<GainsSpec>,
}

/// A validated robot description.
#[derive(Debug, Clone)]
pub struct RobotDescription {
    pub name: String,
    pub geometry: RobotGeometry,
    pub limits: ForceLimits,
    pub plant: Option<PlantParams>,
    pub gains: Option<ControllerGains>,
}

impl RobotDescription {
    /// The simulation model; fails if the file has no plant or gains block.
    pub fn model(&self) -> Result<RobotModel> {
        let missing = |what: &str| {
            Error::InvalidParameter(format!("robot {:?} has no {what} block", self.name))
        };
        let model = RobotModel {
            name: self.name.clone(),
            geometry: self.geometry.clone(),
            limits: self.limits.clone(),
            plant: self.plant.clone().ok_or_else(|| missing("plant"))?,
            gains: self.gains.ok_or_else(|| missing("gains"))?,
        };
        model.validate()?;
        Ok(model)
    }
}

impl RobotDescriptionFile {
    pub fn validate(&self) -> std::result::Result<RobotDescription, String> {
        if self.euler_convention != EULER_CONVENTION {
            return Err(format!(
                "euler_convention: expected {EULER_CONVENTION:?}, found {:?}",
                self.euler_convention
            ));
        }
        let dof = Dof::from_count(self.dof).map_err(|e| format!("dof: {e}"))?;
        let cables = self
            .cables
            .iter()
            .map(|c| {
                let cable = Cable::new(Vec3::from(c.frame_anchor), Vec3::from(c.platform_anchor));
                match &c.pulley {
                    Some(p) => cable.with_pulley(p.radius, Vec3::from(p.axis)),
                    None => cable,
                }
            })
            .collect();
        for (i, c) in self.cables.iter().enumerate() {
            if let Some(p) = &c.pulley {
                if Vec3::from(p.axis).norm() == 0.0 {
                    return Err(format!("cables[{i}].pulley.axis: must be nonzero"));
                }
            }
        }
        let winch = Winch {
            gear_ratio: self.winch.gear_ratio,
            drum_radius: self.winch.drum_radius,
        };
        let geometry =
            RobotGeometry::new(dof, cables, winch).map_err(|e| format!("cables: {e}"))?;
        let m = geometry.m();
        let limits = ForceLimits::new(
            self.limits.f_min.expand(m, "limits.f_min")?,
            self.limits.f_max.expand(m, "limits.f_max")?,
        )
        .map_err(|e| format!("limits: {e}"))?;
        let plant = self
            .plant
            .as_ref()
            .map(|p| {
                let params = PlantParams {
                    platform_mass: p.platform_mass,
                    inertia: Matrix3::from_fn(|r, c| p.inertia[r][c]),
                    ea: p.ea,
                    damping: p.damping,
                    motor_tau: p.motor_tau,
                    gravity: p.gravity,
                };
                params
                    .validate()
                    .map(|_| params)
                    .map_err(|e| format!("plant: {e}"))
            })
            .transpose()?;
        let gains = self
            .gains
            .map(|g| {
                let gains = ControllerGains {
                    kv: g.kv,
                    pid: PidGains {
                        kp: g.pid.kp,
                        ki: g.pid.ki,
                        kd: g.pid.kd,
                        saturation: g.pid.sat,
                    },
                };
                gains
                    .validate()
                    .map(|_| gains)
                    .map_err(|e| format!("gains: {e}"))
            })
            .transpose()?;
        Ok(RobotDescription {
            name: self.name.clone(),
            geometry,
            limits,
            plant,
            gains,
        })
    }

    /// File representation of a robot, with uniform limits written as scalars.
    pub fn from_parts(
        name: &str,
        geometry: &RobotGeometry,
        limits: &ForceLimits,
        plant: Option<&PlantParams>,
        gains: Option<&ControllerGains>,
    ) -> Self {
        let compact = |v: &DVector<f64>| {
            if v.iter().all(|&x| x == v[0]) {
                PerCable::Scalar(v[0])
            } else {
                PerCable::List(v.iter().copied().collect())
            }
        };
        RobotDescriptionFile {
            name: name.to_string(),
            dof: geometry.n(),
            euler_convention: EULER_CONVENTION.to_string(),
            cables: geometry
                .cables()
                .iter()
                .map(|c| CableSpec {
                    frame_anchor: c.frame_anchor.into(),
                    platform_anchor: c.platform_anchor.into(),
                    pulley: c.pulley.map(|p| PulleySpec {
                        radius: p.radius,
                        axis: p.axis.into_inner().into(),
                    }),
                })
                .collect(),
            winch: WinchSpec {
                gear_ratio: geometry.winch().gear_ratio,
                drum_radius: geometry.winch().drum_radius,
            },
            limits: LimitsSpec {
                f_min: compact(&limits.min),
                f_max: compact(&limits.max),
            },
            plant: plant.map(|p| PlantSpec {
                platform_mass: p.platform_mass,
                inertia: [0, 1, 2].map(|r| [0, 1, 2].map(|c| p.inertia[(r, c)])),
                ea: p.ea,
                damping: p.damping,
                motor_tau: p.motor_tau,
                gravity: p.gravity,
            }),
            gains: gains.map(|g| GainsSpec {
                kv: g.kv,
                pid: PidSpec {
                    kp: g.pid.kp,
                    ki: g.pid.ki,
                    kd: g.pid.kd,
                    sat: g.pid.saturation,
                },
            }),
        }
    }
}

pub fn parse_robot(text: &str, path: &Path) -> Result<RobotDescription> {
    let file: RobotDescriptionFile =
        serde_json::from_str(text).map_err(|e| format_error(path, e.to_string()))?;
    file.validate().map_err(|m| format_error(path, m))
}

pub fn load_robot(path: &Path) -> Result<RobotDescription> {
    parse_robot(&read_file(path)?, path)
}

pub fn robot_to_json(file: &RobotDescriptionFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("robot files serialise");
    s.push('\n');
    s
}
