//! Closed-loop simulation: hybrid position and adaptive preload control of
//! a spatial cable robot on an elastic-cable rigid-body plant.

pub mod controller;
pub mod experiment;
pub mod params;
pub mod plant;
pub mod schedule;

pub use controller::{
    force_controller, position_controller, ControlOutput, ControlStatus, Controller, PidState,
};
pub use experiment::{
    is_steady, preloaded_state, run_experiment, run_paired, summarize, LogRow, SimLog, Summary,
    SETTLE_TIME,
};
pub use params::{ControllerGains, PidGains, PlantParams, RobotModel, SimConfig};
pub use plant::{step_plant, tensions, SimState};
pub use schedule::{
    ControlMode, EtaChange, PayloadAction, PayloadEvent, Timing, TrajectorySchedule, Waypoint,
};
