//! Robot and schedule files (JSON) and CSV output.

pub mod csv_out;
pub mod robot;
pub mod schedule;

use std::path::Path;

use crate::error::{Error, Result};

pub use csv_out::{sim_log_header, sweep_header, write_sim_log, write_sweep};
pub use robot::{load_robot, parse_robot, robot_to_json, RobotDescription, RobotDescriptionFile};
pub use schedule::{load_schedule, parse_schedule, ScheduleFile};

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn format_error(path: &Path, message: String) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message,
    }
}
