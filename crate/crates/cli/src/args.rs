use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Kinematics, force distribution, preload optimisation and closed-loop
/// simulation for cable-driven parallel robots.
///
/// Poses are given as `x,y,z,alpha,beta,gamma` with positions in meters and
/// XYZ-intrinsic Euler angles in degrees. Wrenches are external loads on the
/// platform, `fx,fy,fz,mx,my,mz` in N and N m (or one value per platform DOF);
/// the cables balance them.
///
/// Exit codes: 0 success, 1 error, 2 computed but infeasible.
#[derive(Debug, Parser)]
#[command(name = "apc", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cable lengths and drive angles at a pose.
    Ik(IkArgs),
    /// Pose from measured cable lengths.
    Fk(FkArgs),
    /// Unique cable forces for a wrench and preload parameters.
    Forcedist(ForcedistArgs),
    /// Closed-form force distribution around the mid-range force.
    Cf(LoadArgs),
    /// Optimal preload parameters and target forces.
    Optimize(OptimizeArgs),
    /// Preload optimisation along a straight axis sweep, as CSV.
    Sweep(SweepArgs),
    /// Closed-loop simulation of a schedule, as CSV plus a summary.
    Simulate(SimulateArgs),
    /// Randomised kinematics and force-algebra self-check.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KinematicsArg {
    Point,
    Pulley,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "UPPER")]
pub enum ModeArg {
    Std,
    Apc,
}

#[derive(Debug, Args)]
pub struct RobotArgs {
    /// Robot description file (JSON).
    #[arg(long)]
    pub robot: PathBuf,
    /// Kinematic model; defaults to pulley when the robot has pulleys.
    #[arg(long, value_enum)]
    pub kinematics: Option<KinematicsArg>,
}

#[derive(Debug, Args)]
pub struct IkArgs {
    #[command(flatten)]
    pub robot: RobotArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub pose: String,
}

#[derive(Debug, Args)]
pub struct FkArgs {
    #[command(flatten)]
    pub robot: RobotArgs,
    /// Measured cable lengths [m], one per cable.
    #[arg(long, allow_hyphen_values = true)]
    pub lengths: String,
    /// Initial guess for the solver.
    #[arg(long, allow_hyphen_values = true, default_value = "0,0,0,0,0,0")]
    pub guess: String,
}

#[derive(Debug, Args)]
pub struct LoadArgs {
    #[command(flatten)]
    pub robot: RobotArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub pose: String,
    /// External wrench on the platform.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "mass")]
    pub wrench: Option<String>,
    /// Carried mass [kg] under gravity instead of a wrench.
    #[arg(long, conflicts_with = "wrench")]
    pub mass: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ForcedistArgs {
    #[command(flatten)]
    pub load: LoadArgs,
    /// Preload parameters, one per degree of redundancy.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub load: LoadArgs,
    /// Preload level in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    /// Include the solver wall time in the output.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub robot: RobotArgs,
    #[arg(long, value_enum, default_value_t = Axis::Z)]
    pub axis: Axis,
    /// Start coordinate along the axis [m].
    #[arg(long, allow_hyphen_values = true)]
    pub from: f64,
    /// End coordinate along the axis [m].
    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,
    /// Step along the axis [m].
    #[arg(long, default_value_t = 0.001)]
    pub step: f64,
    /// Pose supplying the coordinates that are not swept.
    #[arg(long, allow_hyphen_values = true, default_value = "0,0,0,0,0,0")]
    pub at: String,
    /// Comma-separated preload levels.
    #[arg(long, allow_hyphen_values = true, default_value = "0.5")]
    pub eta: String,
    /// Carried mass [kg] under gravity; defaults to the platform mass of the robot file.
    #[arg(long, conflicts_with = "wrench")]
    pub mass: Option<f64>,
    /// External wrench on the platform instead of a gravity load.
    #[arg(long, allow_hyphen_values = true)]
    pub wrench: Option<String>,
    /// Solve every pose from a cold start; poses may then run in parallel.
    #[arg(long)]
    pub no_chaining: bool,
    /// A force step above this multiple of the median step is flagged.
    #[arg(long, default_value_t = 5.0)]
    pub jump_factor: f64,
    /// Add per-pose solver wall times (makes the output machine-dependent).
    #[arg(long)]
    pub timing: bool,
    /// CSV output path; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Robot description file with plant and gains blocks.
    #[arg(long)]
    pub robot: PathBuf,
    /// Schedule file (JSON): waypoints, preload levels and payload events.
    #[arg(long)]
    pub schedule: PathBuf,
    /// Override the control mode of the schedule.
    #[arg(long, value_enum, conflicts_with = "paired")]
    pub mode: Option<ModeArg>,
    /// Run both modes; writes `<out>_std.csv` and `<out>_apc.csv`.
    #[arg(long, requires = "out")]
    pub paired: bool,
    /// CSV output path; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Settling time [s] before rows count as steady state.
    #[arg(long, default_value_t = apc_core::sim::SETTLE_TIME)]
    pub settle: f64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub robot: RobotArgs,
    /// Centre of the sampled pose box.
    #[arg(long, allow_hyphen_values = true)]
    pub at: String,
    /// Half-width of the sampled position box [m].
    #[arg(long, default_value_t = 0.1)]
    pub radius: f64,
    /// Half-width of the sampled angle range [deg].
    #[arg(long, default_value_t = 10.0)]
    pub angle: f64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
