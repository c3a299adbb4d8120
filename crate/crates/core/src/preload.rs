//! Preload parameter optimisation and path sweeps.
//!
//! The tension vector is split as `f = f0 + N lambda` with `f0` the
//! minimum-norm tensions for the wrench and `N` the orthonormal kernel basis.
//! The preload parameters minimise `|N lambda - f_ref|` with
//! `f_ref = eta f_max + (1 - eta) f_min` subject to `f_min <= f <= f_max`,
//! a strictly convex QP in `lambda` (the Hessian is `N'N = I`).

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kinematics::{structure_matrix_with, StructureMatrix};
use crate::parallel::par_map;
use crate::qp::{self, QpOptions, QpProblem, QpStatus};
use crate::redundancy::{
    advanced_structure_matrix, closed_form_distribution, force_distribution, nullspace_basis,
    AdvancedStructureMatrix, CableForces, ClosedFormResult, NullspaceBasis, Wrench,
};
use crate::types::{ForceLimits, KinematicsMode, Pose, PoseVector, RobotGeometry};

/// Preload control parameter, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Eta(f64);

impl Eta {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Eta(value))
        } else {
            Err(Error::Domain { name: "eta", value })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `f_ref = eta f_max + (1 - eta) f_min`.
pub fn reference_force(eta: f64, limits: &ForceLimits) -> Result<CableForces> {
    let eta = Eta::new(eta)?;
    Ok(reference_for(eta, limits))
}

fn reference_for(eta: Eta, limits: &ForceLimits) -> CableForces {
    let e = eta.value();
    CableForces(&limits.max * e + &limits.min * (1.0 - e))
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Iteration budget; `None` means `10 m`.
    pub max_iterations: Option<usize>,
    /// Tolerance [N] on the force limits when declaring a solution feasible.
    pub constraint_tol: f64,
    /// Violation [N] above which the active-set loop still acts on a constraint.
    pub working_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: None,
            constraint_tol: 1e-6,
            working_tol: 1e-9,
        }
    }
}

/// Active constraint set of a previous solve. Constraint `i < m` is the upper
/// limit of cable `i`, constraint `m + i` its lower limit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WarmStart {
    pub active: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PreloadProblem {
    structure: StructureMatrix,
    basis: NullspaceBasis,
    advanced: AdvancedStructureMatrix,
    wrench: Wrench,
    eta: Eta,
    limits: ForceLimits,
    warm_start: Option<WarmStart>,
    options: SolverOptions,
}

impl PreloadProblem {
    pub fn new(
        structure: StructureMatrix,
        basis: NullspaceBasis,
        advanced: AdvancedStructureMatrix,
        wrench: Wrench,
        eta: Eta,
        limits: ForceLimits,
    ) -> Result<Self> {
        let (n, m) = (structure.n(), structure.m());
        if m <= n || basis.rho() == 0 {
            return Err(Error::InvalidGeometry(
                "preload optimisation needs a redundant robot (rho >= 1)".into(),
            ));
        }
        if basis.rho() != m - n || advanced.m() != m {
            return Err(Error::DimensionMismatch {
                context: "preload problem nullspace",
                expected: m - n,
                found: basis.rho(),
            });
        }
        if wrench.len() != n {
            return Err(Error::DimensionMismatch {
                context: "preload problem wrench",
                expected: n,
                found: wrench.len(),
            });
        }
        if limits.len() != m {
            return Err(Error::DimensionMismatch {
                context: "preload problem limits",
                expected: m,
                found: limits.len(),
            });
        }
        Ok(PreloadProblem {
            structure,
            basis,
            advanced,
            wrench,
            eta,
            limits,
            warm_start: None,
            options: SolverOptions::default(),
        })
    }

    /// Assembles structure matrix, kernel basis and advanced matrix at `pose`.
    pub fn at_pose(
        geom: &RobotGeometry,
        pose: &Pose,
        mode: KinematicsMode,
        previous_basis: Option<&NullspaceBasis>,
        wrench: Wrench,
        eta: Eta,
        limits: ForceLimits,
    ) -> Result<Self> {
        let structure = structure_matrix_with(geom, pose, mode)?;
        let basis = nullspace_basis(&structure, previous_basis)?;
        let advanced = advanced_structure_matrix(&structure, &basis)?;
        Self::new(structure, basis, advanced, wrench, eta, limits)
    }

    pub fn with_warm_start(mut self, warm: WarmStart) -> Self {
        self.warm_start = Some(warm);
        self
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn structure(&self) -> &StructureMatrix {
        &self.structure
    }

    pub fn basis(&self) -> &NullspaceBasis {
        &self.basis
    }

    pub fn advanced(&self) -> &AdvancedStructureMatrix {
        &self.advanced
    }

    pub fn wrench(&self) -> &Wrench {
        &self.wrench
    }

    pub fn eta(&self) -> Eta {
        self.eta
    }

    pub fn limits(&self) -> &ForceLimits {
        &self.limits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::IterationLimit => "iteration_limit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PreloadSolution {
    pub lambda: DVector<f64>,
    /// Target tensions from the advanced structure matrix.
    pub forces: CableForces,
    /// `|N lambda - f_ref|` [N].
    pub objective: f64,
    pub feasible: bool,
    /// Largest limit violation of `forces` [N]; zero when feasible.
    pub max_violation: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub solve_time: Duration,
    /// Active constraints at the returned point, reusable as a warm start.
    pub warm_start: WarmStart,
    /// Multipliers of `warm_start.active`.
    pub multipliers: Vec<f64>,
}

/// Solves the preload problem. An empty feasible set is reported through
/// `feasible = false` together with the least-violation preload.
pub fn optimize_preload(problem: &PreloadProblem) -> Result<PreloadSolution> {
    let start = Instant::now();
    let m = problem.structure.m();
    let n_mat = problem.basis.matrix();
    let f0 = force_distribution(
        &problem.advanced,
        &problem.wrench,
        &DVector::zeros(problem.basis.rho()),
    )?;
    let f_ref = reference_for(problem.eta, &problem.limits);

    let qp_problem = QpProblem {
        hessian: n_mat.transpose() * n_mat,
        linear: -(n_mat.transpose() * &f_ref.0),
        constraints: stack_rows(n_mat, &(-n_mat)),
        upper: stack_vec(
            &(&problem.limits.max - &f0.0),
            &(&f0.0 - &problem.limits.min),
        ),
    };
    let opts = QpOptions {
        max_iterations: problem.options.max_iterations.unwrap_or(10 * m),
        violation_tol: problem.options.working_tol,
    };
    let warm = problem
        .warm_start
        .as_ref()
        .map_or(&[][..], |w| &w.active[..]);
    let sol = qp::solve(&qp_problem, warm, &opts);

    let status = match sol.status {
        QpStatus::Optimal => SolveStatus::Optimal,
        QpStatus::Infeasible => SolveStatus::Infeasible,
        QpStatus::IterationLimit => SolveStatus::IterationLimit,
    };
    let lambda = if status == SolveStatus::Optimal {
        sol.x
    } else {
        least_violation(&qp_problem, &sol.x)
    };
    let forces = force_distribution(&problem.advanced, &problem.wrench, &lambda)?;
    let max_violation = problem.limits.max_violation(&forces.0);
    let objective = (n_mat * &lambda - &f_ref.0).norm();
    Ok(PreloadSolution {
        feasible: status == SolveStatus::Optimal && max_violation <= problem.options.constraint_tol,
        lambda,
        forces,
        objective,
        max_violation,
        status,
        iterations: sol.iterations,
        solve_time: start.elapsed(),
        warm_start: WarmStart { active: sol.active },
        multipliers: sol.multipliers,
    })
}

fn stack_rows(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

fn stack_vec(top: &DVector<f64>, bottom: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(top.len() + bottom.len());
    out.rows_mut(0, top.len()).copy_from(top);
    out.rows_mut(top.len(), bottom.len()).copy_from(bottom);
    out
}

/// Minimises the summed squared constraint violation (slightly regularised
/// toward `start`) with a semismooth Newton iteration.
fn least_violation(qp: &QpProblem, start: &DVector<f64>) -> DVector<f64> {
    const REG: f64 = 1e-8;
    let g = &qp.constraints;
    let k = start.len();
    let merit = |x: &DVector<f64>| {
        let v = g * x - &qp.upper;
        0.5 * v.iter().map(|e| e.max(0.0).powi(2)).sum::<f64>()
            + 0.5 * REG * (x - start).norm_squared()
    };
    let mut x = start.clone();
    for _ in 0..100 {
        let v = g * &x - &qp.upper;
        let mut hess = DMatrix::identity(k, k) * REG;
        let mut grad = (&x - start) * REG;
        for (j, &vj) in v.iter().enumerate() {
            if vj > 0.0 {
                let row = g.row(j).transpose();
                hess += &row * row.transpose();
                grad += row * vj;
            }
        }
        let Some(step) = hess.cholesky().map(|c| -c.solve(&grad)) else {
            break;
        };
        let current = merit(&x);
        let mut t = 1.0;
        while t > 1e-12 && merit(&(&x + &step * t)) > current {
            t *= 0.5;
        }
        x += &step * t;
        if step.norm() * t < 1e-12 {
            break;
        }
    }
    x
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Chain kernel bases and warm starts from pose to pose. Chaining forces
    /// sequential evaluation; without it poses are solved independently and
    /// may run in parallel.
    pub chaining: bool,
    pub mode: KinematicsMode,
    pub solver: SolverOptions,
    /// A step larger than this multiple of the median step is flagged.
    pub jump_factor: f64,
}

impl SweepOptions {
    pub fn new(mode: KinematicsMode) -> Self {
        SweepOptions {
            chaining: true,
            mode,
            solver: SolverOptions::default(),
            jump_factor: 5.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub pose: PoseVector,
    pub solution: Option<PreloadSolution>,
    pub closed_form: Option<ClosedFormResult>,
    pub basis: Option<NullspaceBasis>,
    /// Set when the pose could not be evaluated (singular pose etc.).
    pub error: Option<String>,
}

impl SweepPoint {
    pub fn is_feasible(&self) -> bool {
        self.solution.as_ref().is_some_and(|s| s.feasible)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ContinuityReport {
    /// `|f(k+1) - f(k)|_inf` for consecutive poses of the feasible run.
    pub steps: Vec<f64>,
    pub median_step: f64,
    pub max_step: f64,
    /// Index `k` of each flagged step from pose `k` to `k + 1`.
    pub flagged: Vec<usize>,
}

impl ContinuityReport {
    pub fn is_continuous(&self) -> bool {
        self.flagged.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub continuity: ContinuityReport,
    /// First pose with a valid solution; the sweep may start outside the
    /// feasible region.
    pub first_feasible: Option<usize>,
    /// First pose after `first_feasible` that is infeasible, singular, or
    /// where the solver hit its budget. `Some(0)` if nothing is feasible.
    pub first_infeasible: Option<usize>,
}

fn evaluate(
    geom: &RobotGeometry,
    pose: &PoseVector,
    wrench: Wrench,
    eta: Eta,
    limits: &ForceLimits,
    opts: &SweepOptions,
    previous: Option<(&NullspaceBasis, &WarmStart)>,
) -> SweepPoint {
    let run = || -> Result<(PreloadSolution, ClosedFormResult, NullspaceBasis)> {
        let problem = PreloadProblem::at_pose(
            geom,
            &Pose::from_vector(pose),
            opts.mode,
            previous.map(|p| p.0),
            wrench.clone(),
            eta,
            limits.clone(),
        )?
        .with_options(opts.solver);
        let problem = match previous {
            Some((_, warm)) => problem.with_warm_start(warm.clone()),
            None => problem,
        };
        let solution = optimize_preload(&problem)?;
        let cf = closed_form_distribution(problem.structure(), &wrench, limits)?;
        Ok((solution, cf, problem.basis().clone()))
    };
    match run() {
        Ok((solution, cf, basis)) => SweepPoint {
            pose: *pose,
            solution: Some(solution),
            closed_form: Some(cf),
            basis: Some(basis),
            error: None,
        },
        Err(e) => SweepPoint {
            pose: *pose,
            solution: None,
            closed_form: None,
            basis: None,
            error: Some(e.to_string()),
        },
    }
}

/// Solves the preload problem along `path` and charts continuity and the
/// feasibility boundary.
pub fn sweep_path<F>(
    geom: &RobotGeometry,
    path: &[PoseVector],
    wrench: F,
    eta: Eta,
    limits: &ForceLimits,
    opts: &SweepOptions,
) -> SweepReport
where
    F: Fn(&PoseVector) -> Wrench + Sync,
{
    let points = if opts.chaining {
        let mut points: Vec<SweepPoint> = Vec::with_capacity(path.len());
        let mut carry: Option<(NullspaceBasis, WarmStart)> = None;
        for pose in path {
            let point = evaluate(
                geom,
                pose,
                wrench(pose),
                eta,
                limits,
                opts,
                carry.as_ref().map(|(b, w)| (b, w)),
            );
            if let (Some(b), Some(s)) = (&point.basis, &point.solution) {
                carry = Some((b.clone(), s.warm_start.clone()));
            }
            points.push(point);
        }
        points
    } else {
        par_map(path, |pose| {
            evaluate(geom, pose, wrench(pose), eta, limits, opts, None)
        })
    };

    let valid = |p: &SweepPoint| {
        p.solution
            .as_ref()
            .is_some_and(|s| s.feasible && s.status == SolveStatus::Optimal)
    };
    let first_feasible = points.iter().position(valid);
    let first_infeasible = match first_feasible {
        Some(start) => points[start..]
            .iter()
            .position(|p| !valid(p))
            .map(|k| start + k),
        None => (!points.is_empty()).then_some(0),
    };
    let continuity = match first_feasible {
        Some(start) => {
            let end = first_infeasible.unwrap_or(points.len());
            let mut report = continuity_report(&points[start..end], opts.jump_factor);
            report.flagged.iter_mut().for_each(|k| *k += start);
            report
        }
        None => ContinuityReport::default(),
    };
    SweepReport {
        points,
        continuity,
        first_feasible,
        first_infeasible,
    }
}

fn continuity_report(points: &[SweepPoint], factor: f64) -> ContinuityReport {
    let steps: Vec<f64> = points
        .windows(2)
        .map(|w| {
            let a = &w[0]
                .solution
                .as_ref()
                .expect("feasible before boundary")
                .forces;
            let b = &w[1]
                .solution
                .as_ref()
                .expect("feasible before boundary")
                .forces;
            (&b.0 - &a.0).amax()
        })
        .collect();
    if steps.is_empty() {
        return ContinuityReport::default();
    }
    let mut sorted = steps.clone();
    sorted.sort_by(f64::total_cmp);
    let median_step = sorted[sorted.len() / 2];
    let max_step = *sorted.last().expect("non-empty");
    let threshold = (factor * median_step).max(1e-9);
    let flagged = steps
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > threshold)
        .map(|(k, _)| k)
        .collect();
    ContinuityReport {
        steps,
        median_step,
        max_step,
        flagged,
    }
}

/// Straight-line path from `from` to `to` in steps of at most `step` along
/// the position (angles are interpolated alongside).
pub fn linear_path(from: &PoseVector, to: &PoseVector, step: f64) -> Result<Vec<PoseVector>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "path step must be positive, got {step}"
        )));
    }
    let dist = (to.position() - from.position()).norm();
    let count = (dist / step - 1e-9).ceil().max(0.0) as usize;
    if count == 0 {
        return Ok(vec![*from]);
    }
    Ok((0..=count)
        .map(|k| from.lerp(to, k as f64 / count as f64))
        .collect())
}
