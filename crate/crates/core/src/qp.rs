//! Small dense strictly convex QP solver.
//!
//! Solves `min 1/2 x'Hx + c'x  s.t.  G x <= h` with the dual active-set
//! method of Goldfarb and Idnani: start from the unconstrained minimum, add
//! the most violated constraint, and take primal/dual steps that keep the
//! active multipliers nonnegative. Every iterate is dual feasible, so the
//! method terminates finitely with the optimum or a proof of infeasibility.
//! Sized for the handful of variables a preload problem has; projections are
//! recomputed from scratch each step instead of updated.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    /// One row per inequality `g_j' x <= h_j`.
    pub constraints: DMatrix<f64>,
    pub upper: DVector<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct QpOptions {
    pub max_iterations: usize,
    /// A constraint counts as violated when `g_j' x - h_j` exceeds this.
    pub violation_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Indices of the active constraints, in activation order.
    pub active: Vec<usize>,
    /// Lagrange multipliers of `active`, all >= 0.
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub status: QpStatus,
}

struct Workspace<'a> {
    qp: &'a QpProblem,
    h_inv: DMatrix<f64>,
}

impl Workspace<'_> {
    fn normal(&self, j: usize) -> DVector<f64> {
        // GI works with n_j' x >= b_j, i.e. n_j = -g_j
        -self.qp.constraints.row(j).transpose()
    }

    fn slack(&self, j: usize, x: &DVector<f64>) -> f64 {
        self.qp.upper[j] - self.qp.constraints.row(j).dot(&x.transpose())
    }

    fn active_normals(&self, active: &[usize]) -> DMatrix<f64> {
        let k = self.qp.linear.len();
        let mut n = DMatrix::zeros(k, active.len());
        for (col, &j) in active.iter().enumerate() {
            n.set_column(col, &self.normal(j));
        }
        n
    }

    /// Returns `(z, r)`: the primal step direction for adding `np` and the
    /// rate at which the active multipliers decrease along it.
    fn directions(
        &self,
        active: &[usize],
        np: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>)> {
        if active.is_empty() {
            return Some((&self.h_inv * np, DVector::zeros(0)));
        }
        let n = self.active_normals(active);
        let hn = &self.h_inv * &n;
        let gram = n.transpose() * &hn;
        let r = gram.cholesky()?.solve(&(hn.transpose() * np));
        let z = &self.h_inv * (np - &n * &r);
        Some((z, r))
    }
}

/// Equality-constrained start on `set`; `None` unless the constraints are
/// independent and the resulting multipliers are all nonnegative.
fn warm_state(
    ws: &Workspace,
    x0: &DVector<f64>,
    set: &[usize],
    tol: f64,
) -> Option<(DVector<f64>, Vec<f64>)> {
    let n = ws.active_normals(set);
    let hn = &ws.h_inv * &n;
    let gram = n.transpose() * &hn;
    let b = DVector::from_iterator(set.len(), set.iter().map(|&j| -ws.qp.upper[j]));
    let u = gram.cholesky()?.solve(&(b - n.transpose() * x0));
    if u.iter().any(|&v| v < -tol) {
        return None;
    }
    let x = x0 + hn * &u;
    Some((x, u.iter().map(|&v| v.max(0.0)).collect()))
}

/// Solves the QP. `warm_active` is a guess of the optimal active set; it is
/// used only if it yields a dual-feasible starting point.
pub fn solve(qp: &QpProblem, warm_active: &[usize], opts: &QpOptions) -> QpSolution {
    let k = qp.linear.len();
    let h_inv = qp
        .hessian
        .clone()
        .cholesky()
        .expect("QP Hessian must be positive definite")
        .inverse();
    let ws = Workspace { qp, h_inv };
    let x0 = -(&ws.h_inv * &qp.linear);

    let mut warm: Vec<usize> = warm_active
        .iter()
        .copied()
        .filter(|&j| j < qp.upper.len())
        .collect();
    warm.dedup();
    let (mut x, mut active, mut u) = match (warm.len() <= k && !warm.is_empty())
        .then(|| warm_state(&ws, &x0, &warm, opts.violation_tol))
        .flatten()
    {
        Some((x, u)) => (x, warm, u),
        None => (x0, Vec::new(), Vec::new()),
    };

    let mut iterations = 0;
    loop {
        // most violated constraint
        let candidate = (0..qp.upper.len())
            .filter(|j| !active.contains(j))
            .map(|j| (j, ws.slack(j, &x)))
            .filter(|&(_, s)| s < -opts.violation_tol)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let Some((p, _)) = candidate else {
            return QpSolution {
                x,
                active,
                multipliers: u,
                iterations,
                status: QpStatus::Optimal,
            };
        };
        let np = ws.normal(p);
        let mut up = 0.0;
        loop {
            iterations += 1;
            if iterations > opts.max_iterations {
                return QpSolution {
                    x,
                    active,
                    multipliers: u,
                    iterations,
                    status: QpStatus::IterationLimit,
                };
            }
            let Some((z, r)) = ws.directions(&active, &np) else {
                // dependent working set; cannot happen for a consistent GI state
                return QpSolution {
                    x,
                    active,
                    multipliers: u,
                    iterations,
                    status: QpStatus::IterationLimit,
                };
            };
            // dual step bound: first active multiplier to reach zero
            let mut partial = f64::INFINITY;
            let mut drop = None;
            for (i, &ri) in r.iter().enumerate() {
                if ri > 0.0 {
                    let t = u[i] / ri;
                    if t < partial {
                        partial = t;
                        drop = Some(i);
                    }
                }
            }
            let zn = z.dot(&np);
            let full = if zn > 1e-14 * np.norm_squared().max(1e-300) {
                -ws.slack(p, &x) / zn
            } else {
                f64::INFINITY
            };
            if partial.is_infinite() && full.is_infinite() {
                return QpSolution {
                    x,
                    active,
                    multipliers: u,
                    iterations,
                    status: QpStatus::Infeasible,
                };
            }
            let t = partial.min(full);
            if full.is_finite() {
                x += &z * t;
            }
            for (ui, ri) in u.iter_mut().zip(r.iter()) {
                *ui -= t * ri;
            }
            up += t;
            if full <= partial {
                active.push(p);
                u.push(up);
                break;
            }
            let i = drop.expect("partial step has a blocking multiplier");
            active.remove(i);
            u.remove(i);
        }
    }
}
