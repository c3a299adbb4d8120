use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use apc_core::io::{load_robot, load_schedule, write_sim_log, write_sweep, RobotDescription};
use apc_core::kinematics::{
    cable_lengths, forward_kinematics_with, structure_matrix_with, FkOptions,
};
use apc_core::parallel::par_map;
use apc_core::preload::{
    linear_path, optimize_preload, sweep_path, Eta, PreloadProblem, SweepOptions, SweepReport,
};
use apc_core::redundancy::{
    advanced_structure_matrix, closed_form_distribution, force_distribution, nullspace_basis,
    wrench_observer, Wrench,
};
use apc_core::sim::{
    run_experiment, run_paired, summarize, ControlMode, SimConfig, SimLog, TrajectorySchedule,
};
use apc_core::types::{KinematicsMode, Pose, PoseVector, RobotGeometry, Vec3};
use apc_core::{length_to_angle, CableLengths};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::args::{
    Axis, CheckArgs, FkArgs, ForcedistArgs, IkArgs, KinematicsArg, LoadArgs, ModeArg, OptimizeArgs,
    RobotArgs, SimulateArgs, SweepArgs,
};

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Infeasible,
}

impl Outcome {
    fn from_feasible(feasible: bool) -> Self {
        if feasible {
            Outcome::Success
        } else {
            Outcome::Infeasible
        }
    }
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .with_context(|| format!("--{what}: {s:?} is not a finite number"))
        })
        .collect()
}

fn parse_pose(text: &str, what: &str) -> Result<PoseVector> {
    let v = parse_list(text, what)?;
    ensure!(
        v.len() == 6,
        "--{what}: expected x,y,z,alpha,beta,gamma (6 values), found {}",
        v.len()
    );
    Ok(PoseVector::new(
        v[0],
        v[1],
        v[2],
        v[3].to_radians(),
        v[4].to_radians(),
        v[5].to_radians(),
    ))
}

/// Wrench the cables have to supply to balance an external load.
fn parse_load(text: &str, geom: &RobotGeometry) -> Result<Wrench> {
    let v = parse_list(text, "wrench")?;
    let n = geom.n();
    let external = if v.len() == n {
        v
    } else if v.len() == 6 {
        geom.dof()
            .reduce_wrench(&Vec3::new(v[0], v[1], v[2]), &Vec3::new(v[3], v[4], v[5]))
            .iter()
            .copied()
            .collect()
    } else {
        bail!("--wrench: expected {n} or 6 values, found {}", v.len());
    };
    Ok(Wrench::from_slice(
        &external.iter().map(|x| -x).collect::<Vec<_>>(),
    ))
}

fn gravity_load(geom: &RobotGeometry, mass: f64, gravity: f64) -> Wrench {
    Wrench(
        geom.dof()
            .reduce_wrench(&Vec3::new(0.0, 0.0, mass * gravity), &Vec3::zeros()),
    )
}

fn resolve_load(args: &LoadArgs, robot: &RobotDescription) -> Result<Wrench> {
    match (&args.wrench, args.mass) {
        (Some(w), _) => parse_load(w, &robot.geometry),
        (None, Some(mass)) => {
            let g = robot
                .plant
                .as_ref()
                .map_or(apc_core::presets::GRAVITY, |p| p.gravity);
            Ok(gravity_load(&robot.geometry, mass, g))
        }
        (None, None) => bail!("give --wrench or --mass"),
    }
}

struct Loaded {
    robot: RobotDescription,
    mode: KinematicsMode,
}

fn load(args: &RobotArgs) -> Result<Loaded> {
    let robot = load_robot(&args.robot)?;
    let mode = match args.kinematics {
        None => robot.geometry.default_mode(),
        Some(KinematicsArg::Point) => KinematicsMode::PointAnchor,
        Some(KinematicsArg::Pulley) => {
            ensure!(
                robot.geometry.has_pulleys(),
                "--kinematics pulley: robot {:?} has no pulleys",
                robot.name
            );
            KinematicsMode::Pulley
        }
    };
    Ok(Loaded { robot, mode })
}

fn vec_json(v: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(v.into_iter().map(|x| json!(x)).collect())
}

fn pose_json(y: &PoseVector) -> Value {
    json!({
        "position": [y[0], y[1], y[2]],
        "angles_deg": [y[3].to_degrees(), y[4].to_degrees(), y[5].to_degrees()],
    })
}

fn print_json(value: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn ik(args: &IkArgs) -> Result<Outcome> {
    let Loaded { robot, mode } = load(&args.robot)?;
    let pose = parse_pose(&args.pose, "pose")?;
    let lengths = cable_lengths(&robot.geometry, &Pose::from_vector(&pose), mode)?;
    let angles = length_to_angle(&robot.geometry, &lengths);
    print_json(&json!({
        "lengths_m": vec_json(lengths.0.iter().copied()),
        "drive_angles_rad": vec_json(angles.0.iter().copied()),
    }))?;
    Ok(Outcome::Success)
}

pub fn fk(args: &FkArgs) -> Result<Outcome> {
    let Loaded { robot, mode } = load(&args.robot)?;
    let lengths = parse_list(&args.lengths, "lengths")?;
    ensure!(
        lengths.len() == robot.geometry.m(),
        "--lengths: expected {} values, found {}",
        robot.geometry.m(),
        lengths.len()
    );
    let guess = parse_pose(&args.guess, "guess")?;
    let opts = FkOptions {
        mode: Some(mode),
        ..FkOptions::default()
    };
    let sol = forward_kinematics_with(
        &robot.geometry,
        &CableLengths(DVector::from_vec(lengths)),
        &guess,
        &opts,
    )?;
    print_json(&json!({
        "pose": pose_json(&sol.pose),
        "residual_m": sol.residual,
        "iterations": sol.iterations,
    }))?;
    Ok(Outcome::Success)
}

pub fn forcedist(args: &ForcedistArgs) -> Result<Outcome> {
    let Loaded { robot, mode } = load(&args.load.robot)?;
    let geom = &robot.geometry;
    let pose = parse_pose(&args.load.pose, "pose")?;
    let wrench = resolve_load(&args.load, &robot)?;
    let lambda = parse_list(&args.lambda, "lambda")?;
    ensure!(
        lambda.len() == geom.redundancy(),
        "--lambda: expected {} values, found {}",
        geom.redundancy(),
        lambda.len()
    );
    let at = structure_matrix_with(geom, &Pose::from_vector(&pose), mode)?;
    let basis = nullspace_basis(&at, None)?;
    let adv = advanced_structure_matrix(&at, &basis)?;
    let forces = force_distribution(&adv, &wrench, &DVector::from_vec(lambda))?;
    let within = robot.limits.contains(&forces.0, 0.0);
    print_json(&json!({
        "forces_n": vec_json(forces.0.iter().copied()),
        "within_limits": within,
    }))?;
    Ok(Outcome::from_feasible(within))
}

pub fn cf(args: &LoadArgs) -> Result<Outcome> {
    let Loaded { robot, mode } = load(&args.robot)?;
    let pose = parse_pose(&args.pose, "pose")?;
    let wrench = resolve_load(args, &robot)?;
    let at = structure_matrix_with(&robot.geometry, &Pose::from_vector(&pose), mode)?;
    let cf = closed_form_distribution(&at, &wrench, &robot.limits)?;
    print_json(&json!({
        "forces_n": vec_json(cf.forces.0.iter().copied()),
        "valid": cf.valid,
    }))?;
    Ok(Outcome::from_feasible(cf.valid))
}

pub fn optimize(args: &OptimizeArgs) -> Result<Outcome> {
    let Loaded { robot, mode } = load(&args.load.robot)?;
    let pose = parse_pose(&args.load.pose, "pose")?;
    let wrench = resolve_load(&args.load, &robot)?;
    let eta = Eta::new(args.eta).context("--eta")?;
    let problem = PreloadProblem::at_pose(
        &robot.geometry,
        &Pose::from_vector(&pose),
        mode,
        None,
        wrench,
        eta,
        robot.limits.clone(),
    )?;
    let sol = optimize_preload(&problem)?;
    let mut out = json!({
        "lambda": vec_json(sol.lambda.iter().copied()),
        "forces_n": vec_json(sol.forces.0.iter().copied()),
        "feasible": sol.feasible,
        "objective_n": sol.objective,
        "max_violation_n": sol.max_violation,
        "status": sol.status.as_str(),
        "iterations": sol.iterations,
    });
    if args.timing {
        out["solve_time_us"] = json!(sol.solve_time.as_secs_f64() * 1e6);
    }
    print_json(&out)?;
    Ok(Outcome::from_feasible(sol.feasible))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("{}: cannot create", path.display()))?;
    Ok(BufWriter::new(file))
}

fn sweep_summary(
    out: &mut dyn Write,
    axis: usize,
    reports: &[(f64, SweepReport)],
) -> io::Result<()> {
    const NAMES: [&str; 3] = ["x", "y", "z"];
    let at = |report: &SweepReport, k: usize| report.points[k].pose[axis];
    for (eta, report) in reports {
        write!(out, "eta {eta}: ")?;
        match report.first_feasible {
            None => writeln!(out, "no feasible pose")?,
            Some(start) => {
                write!(
                    out,
                    "feasible from pose {start} ({} = {} m)",
                    NAMES[axis],
                    at(report, start)
                )?;
                match report.first_infeasible {
                    Some(b) => writeln!(
                        out,
                        ", boundary at pose {b} ({} = {} m)",
                        NAMES[axis],
                        at(report, b)
                    )?,
                    None => writeln!(out, " to the end of the sweep")?,
                }
                let c = &report.continuity;
                write!(
                    out,
                    "  force steps: median {:.6} N, max {:.6} N; {} flagged",
                    c.median_step,
                    c.max_step,
                    c.flagged.len()
                )?;
                if c.flagged.is_empty() {
                    writeln!(out)?;
                } else {
                    let shown: Vec<String> =
                        c.flagged.iter().take(10).map(|k| k.to_string()).collect();
                    writeln!(out, " at steps {}", shown.join(", "))?;
                }
            }
        }
    }
    if let Some((_, report)) = reports.iter().find(|(e, _)| *e == 0.5) {
        let diffs: Vec<f64> = report
            .points
            .iter()
            .filter_map(|p| match (&p.solution, &p.closed_form) {
                (Some(s), Some(cf)) if s.feasible && cf.valid => {
                    Some((&s.forces.0 - &cf.forces.0).amax())
                }
                _ => None,
            })
            .collect();
        if let Some(max) = diffs.iter().copied().reduce(f64::max) {
            writeln!(
                out,
                "eta 0.5 vs closed form: max difference {max:e} N over {} poses valid in both",
                diffs.len()
            )?;
        }
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> Result<Outcome> {
    let Loaded { robot, mode } = load(&args.robot)?;
    let geom = &robot.geometry;
    ensure!(
        args.step > 0.0 && args.step.is_finite(),
        "--step: must be positive, got {}",
        args.step
    );
    let etas = parse_list(&args.eta, "eta")?
        .into_iter()
        .map(|e| Eta::new(e).context("--eta"))
        .collect::<Result<Vec<_>>>()?;
    let axis = match args.axis {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Z => 2,
    };
    let base = parse_pose(&args.at, "at")?;
    let (mut from, mut to) = (base, base);
    from[axis] = args.from;
    to[axis] = args.to;
    let path = linear_path(&from, &to, args.step)?;

    let wrench = match (&args.wrench, args.mass) {
        (Some(w), _) => parse_load(w, geom)?,
        (None, Some(mass)) => gravity_load(
            geom,
            mass,
            robot
                .plant
                .as_ref()
                .map_or(apc_core::presets::GRAVITY, |p| p.gravity),
        ),
        (None, None) => {
            let plant = robot
                .plant
                .as_ref()
                .context("sweep: give --mass or --wrench, the robot file has no plant block")?;
            gravity_load(geom, plant.platform_mass, plant.gravity)
        }
    };
    let mut opts = SweepOptions::new(mode);
    opts.chaining = !args.no_chaining;
    opts.jump_factor = args.jump_factor;

    let reports: Vec<(f64, SweepReport)> = par_map(&etas, |&eta| {
        let report = sweep_path(geom, &path, |_| wrench.clone(), eta, &robot.limits, &opts);
        (eta.value(), report)
    });

    let m = geom.m();
    match &args.out {
        Some(p) => {
            write_sweep(m, &reports, args.timing, create(p)?)
                .with_context(|| p.display().to_string())?;
            sweep_summary(&mut io::stdout().lock(), axis, &reports)?;
        }
        None => {
            write_sweep(m, &reports, args.timing, io::stdout().lock())?;
            sweep_summary(&mut io::stderr().lock(), axis, &reports)?;
        }
    }
    let all_feasible = reports
        .iter()
        .all(|(_, r)| r.points.iter().all(|p| p.is_feasible()));
    Ok(Outcome::from_feasible(all_feasible))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome> {
    let model = load_robot(&args.robot)?.model()?;
    let mut schedule: TrajectorySchedule = load_schedule(&args.schedule)?;
    if let Some(mode) = args.mode {
        schedule = schedule.with_mode(match mode {
            ModeArg::Std => ControlMode::Std,
            ModeArg::Apc => ControlMode::Apc,
        })?;
    }
    let config = SimConfig::default();
    let logs: Vec<(Option<PathBuf>, SimLog)> = if args.paired {
        let out = args.out.as_deref().context("--paired needs --out")?;
        let (std, apc) = run_paired(&model, &schedule, &config)?;
        vec![
            (Some(with_suffix(out, "std")), std),
            (Some(with_suffix(out, "apc")), apc),
        ]
    } else {
        vec![(
            args.out.clone(),
            run_experiment(&model, &schedule, &config)?,
        )]
    };

    let mut any_warning = false;
    for (path, log) in &logs {
        let summary = summarize(log, &schedule, &model.limits, args.settle);
        any_warning |= !log.warnings.is_empty();
        for w in &log.warnings {
            log::warn!("{} run: {w}", log.mode.as_str());
        }
        match path {
            Some(p) => {
                write_sim_log(log, create(p)?).with_context(|| p.display().to_string())?;
                println!("{}: {}", log.mode.as_str(), p.display());
                println!("{summary}");
            }
            None => {
                write_sim_log(log, io::stdout().lock())?;
                eprintln!("{summary}");
            }
        }
    }
    Ok(Outcome::from_feasible(!any_warning))
}

pub fn check(args: &CheckArgs) -> Result<Outcome> {
    let Loaded { robot, mode } = load(&args.robot)?;
    let geom = &robot.geometry;
    let center = parse_pose(&args.at, "at")?;
    ensure!(args.samples > 0, "--samples: must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let coords = geom.dof().pose_coordinates();
    let half = |k: usize| {
        if k < 3 {
            args.radius
        } else {
            args.angle.to_radians()
        }
    };
    let perturb = |rng: &mut ChaCha8Rng, y: &PoseVector, scale: f64| {
        let mut out = *y;
        for &k in coords {
            out[k] += scale * half(k) * rng.random_range(-1.0..=1.0);
        }
        out
    };

    let fk_opts = FkOptions {
        mode: Some(mode),
        ..FkOptions::default()
    };
    let (mut fk_pos, mut fk_ang, mut wrench_res, mut lambda_res, mut ortho) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut skipped = 0usize;
    for _ in 0..args.samples {
        let y = perturb(&mut rng, &center, 1.0);
        let guess = perturb(&mut rng, &y, 0.2);
        let pose = Pose::from_vector(&y);
        let Ok(at) = structure_matrix_with(geom, &pose, mode) else {
            skipped += 1;
            continue;
        };
        let lengths = cable_lengths(geom, &pose, mode)?;
        let sol = forward_kinematics_with(geom, &lengths, &guess, &fk_opts)?;
        for &k in coords {
            let e = (sol.pose[k] - y[k]).abs();
            if k < 3 {
                fk_pos = fk_pos.max(e);
            } else {
                fk_ang = fk_ang.max(e);
            }
        }
        if geom.redundancy() > 0 {
            let basis = nullspace_basis(&at, None)?;
            let adv = advanced_structure_matrix(&at, &basis)?;
            let w = Wrench(DVector::from_fn(geom.n(), |_, _| {
                rng.random_range(-200.0..200.0)
            }));
            let lambda: Vec<f64> = (0..geom.redundancy())
                .map(|_| rng.random_range(-200.0..200.0))
                .collect();
            let f = force_distribution(&adv, &w, &DVector::from_column_slice(&lambda))?;
            wrench_res = wrench_res.max((wrench_observer(&at, &f)?.0 - &w.0).amax());
            lambda_res = lambda_res.max(
                (basis.matrix().transpose() * &f.0 - DVector::from_column_slice(&lambda)).amax(),
            );
            let n = basis.matrix();
            let gram = n.transpose() * n;
            let eye = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
            ortho = ortho.max((gram - eye).amax()).max((at.matrix() * n).amax());
        }
    }
    print_json(&json!({
        "samples": args.samples,
        "seed": args.seed,
        "skipped_singular": skipped,
        "fk_max_position_error_m": fk_pos,
        "fk_max_angle_error_rad": fk_ang,
        "max_wrench_residual": wrench_res,
        "max_lambda_residual": lambda_res,
        "max_basis_error": ortho,
    }))?;
    let fk_ok = fk_pos <= 1e-8 && fk_ang <= 1e-8;
    let algebra_ok = wrench_res <= 1e-9 && lambda_res <= 1e-9 && ortho <= 1e-10;
    ensure!(fk_ok && algebra_ok, "self-check failed");
    Ok(Outcome::Success)
}
