//! Schedule files (JSON). Angles are given in degrees.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::preload::Eta;
use crate::sim::{
    ControlMode, EtaChange, PayloadAction, PayloadEvent, Timing, TrajectorySchedule, Waypoint,
};
use crate::types::PoseVector;

use super::{format_error, read_file};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    /// [m]
    pub position: [f64; 3],
    /// Euler angles [deg].
    pub angles_deg: [f64; 3],
}

impl PoseSpec {
    pub fn to_pose(self) -> PoseVector {
        let [x, y, z] = self.position;
        let [a, b, c] = self.angles_deg.map(f64::to_radians);
        PoseVector::new(x, y, z, a, b, c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Path velocity [m/s].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<f64>,
    /// Rotation rate bound [deg/s]; only together with `velocity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_velocity_deg: Option<f64>,
    pub pose: PoseSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaSpec {
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase", deny_unknown_fields)]
pub enum PayloadEventSpec {
    Attach { t: f64, mass_kg: f64 },
    Detach { t: f64 },
    Jam { t: f64, duration_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub mode: String,
    pub duration_s: f64,
    pub waypoints: Vec<WaypointSpec>,
    #[serde(default)]
    pub eta: Vec<EtaSpec>,
    #[serde(default)]
    pub payload_events: Vec<PayloadEventSpec>,
}

impl ScheduleFile {
    pub fn validate(&self) -> std::result::Result<TrajectorySchedule, String> {
        let mode = ControlMode::parse(&self.mode).map_err(|e| format!("mode: {e}"))?;
        let waypoints = self
            .waypoints
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let timing = match (w.t, w.velocity, w.angular_velocity_deg) {
                    (Some(t), None, None) => Timing::At(t),
                    (None, Some(v), a) => Timing::Velocity {
                        linear: v,
                        angular: a.map(f64::to_radians),
                    },
                    (Some(_), Some(_), _) => {
                        return Err(format!(
                            "waypoints[{i}]: give either t or velocity, not both"
                        ))
                    }
                    (Some(_), None, Some(_)) => {
                        return Err(format!(
                            "waypoints[{i}].angular_velocity_deg: only allowed with velocity"
                        ))
                    }
                    (None, None, _) => {
                        return Err(format!("waypoints[{i}]: missing t or velocity"))
                    }
                };
                Ok(Waypoint {
                    pose: w.pose.to_pose(),
                    timing,
                })
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        let eta = self
            .eta
            .iter()
            .enumerate()
            .map(|(i, e)| {
                Eta::new(e.value)
                    .map(|value| EtaChange { t: e.t, value })
                    .map_err(|err| format!("eta[{i}].value: {err}"))
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        let events = self
            .payload_events
            .iter()
            .map(|e| match *e {
                PayloadEventSpec::Attach { t, mass_kg } => PayloadEvent {
                    t,
                    action: PayloadAction::Attach { mass: mass_kg },
                },
                PayloadEventSpec::Detach { t } => PayloadEvent {
                    t,
                    action: PayloadAction::Detach,
                },
                PayloadEventSpec::Jam { t, duration_s } => PayloadEvent {
                    t,
                    action: PayloadAction::Jam {
                        duration: duration_s,
                    },
                },
            })
            .collect();
        TrajectorySchedule::new(&waypoints, eta, events, mode, self.duration_s)
            .map_err(|e| e.to_string())
    }
}

pub fn parse_schedule(text: &str, path: &Path) -> Result<TrajectorySchedule> {
    let file: ScheduleFile =
        serde_json::from_str(text).map_err(|e| format_error(path, e.to_string()))?;
    file.validate().map_err(|m| format_error(path, m))
}

pub fn load_schedule(path: &Path) -> Result<TrajectorySchedule> {
    parse_schedule(&read_file(path)?, path)
}
