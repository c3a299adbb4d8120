//! Kernel of the structure matrix, the nullspace-extended (advanced)
//! structure matrix, unique force distributions and the closed-form baseline.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::kinematics::StructureMatrix;
use crate::types::ForceLimits;

/// Singular values below `RANK_TOL * sigma_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Largest condition number accepted for the advanced structure matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Cable tensions [N].
#[derive(Debug, Clone, PartialEq)]
pub struct CableForces(pub DVector<f64>);

impl Deref for CableForces {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Platform wrench reduced to the robot's DOF set [N, N m].
#[derive(Debug, Clone, PartialEq)]
pub struct Wrench(pub DVector<f64>);

impl Deref for Wrench {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl Wrench {
    pub fn zeros(n: usize) -> Self {
        Wrench(DVector::zeros(n))
    }

    pub fn from_slice(values: &[f64]) -> Self {
        Wrench(DVector::from_column_slice(values))
    }
}

/// Orthonormal `m x rho` basis of `ker(A^T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullspaceBasis {
    basis: DMatrix<f64>,
}

impl NullspaceBasis {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn rho(&self) -> usize {
        self.basis.ncols()
    }
}

fn sorted_svd(matrix: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let svd = SVD::new(matrix, false, true);
    let v_t = svd.v_t.expect("V^T requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = DMatrix::zeros(v_t.ncols(), order.len());
    for (col, &i) in order.iter().enumerate() {
        v.set_column(col, &v_t.row(i).transpose());
    }
    (sigma, v)
}

/// Numerical rank of the structure matrix.
pub fn rank(at: &StructureMatrix) -> usize {
    let (sigma, _) = sorted_svd(at.matrix().clone());
    let tol = RANK_TOL * sigma.first().copied().unwrap_or(0.0);
    sigma.iter().filter(|&&s| s > tol).count()
}

/// Kernel basis from the right singular vectors of the vanishing singular values.
///
/// With `prev`, the basis is rotated inside the kernel to maximise
/// `tr(N^T N_prev)` (orthogonal Procrustes), which keeps it continuous along
/// a trajectory. Without it, each column's largest-magnitude entry is positive.
pub fn nullspace_basis(
    at: &StructureMatrix,
    prev: Option<&NullspaceBasis>,
) -> Result<NullspaceBasis> {
    let (n, m) = (at.n(), at.m());
    // pad to square so the SVD yields the full set of right singular vectors
    let mut padded = DMatrix::zeros(m, m);
    padded.view_mut((0, 0), (n, m)).copy_from(at.matrix());
    let (sigma, v) = sorted_svd(padded);
    let tol = RANK_TOL * sigma[0];
    let found = sigma.iter().filter(|&&s| s > tol).count();
    if found != n {
        return Err(Error::RankDeficient {
            rank: found,
            expected: n,
        });
    }
    let mut basis = v.columns(n, m - n).into_owned();

    match prev {
        Some(p) if p.basis.shape() == basis.shape() => {
            let overlap = basis.transpose() * &p.basis;
            let svd = SVD::new(overlap, true, true);
            let rotation = svd.u.expect("U requested") * svd.v_t.expect("V^T requested");
            basis *= rotation;
        }
        _ => {
            for mut col in basis.column_iter_mut() {
                let pivot = col.iamax();
                if col[pivot] < 0.0 {
                    col.neg_mut();
                }
            }
        }
    }
    Ok(NullspaceBasis { basis })
}

/// Square matrix `[A^T; N^T]` and its inverse.
#[derive(Debug, Clone)]
pub struct AdvancedStructureMatrix {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    condition: f64,
    n: usize,
}

impl AdvancedStructureMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// 2-norm condition number.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn advanced_structure_matrix(
    at: &StructureMatrix,
    basis: &NullspaceBasis,
) -> Result<AdvancedStructureMatrix> {
    let (n, m) = (at.n(), at.m());
    if basis.basis.nrows() != m || basis.rho() != m - n {
        return Err(Error::DimensionMismatch {
            context: "advanced structure matrix nullspace",
            expected: m - n,
            found: basis.rho(),
        });
    }
    let mut matrix = DMatrix::zeros(m, m);
    matrix.view_mut((0, 0), (n, m)).copy_from(at.matrix());
    matrix
        .view_mut((n, 0), (m - n, m))
        .copy_from(&basis.basis.transpose());

    let (sigma, _) = sorted_svd(matrix.clone());
    let smallest = *sigma.last().expect("non-empty");
    let condition = if smallest > 0.0 {
        sigma[0] / smallest
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let inverse = matrix
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::IllConditioned { condition })?;
    Ok(AdvancedStructureMatrix {
        matrix,
        inverse,
        condition,
        n,
    })
}

/// Unique tensions `f = [A^T; N^T]^-1 [w; lambda]`. No limit check.
pub fn force_distribution(
    adv: &AdvancedStructureMatrix,
    wrench: &Wrench,
    lambda: &DVector<f64>,
) -> Result<CableForces> {
    let (n, m) = (adv.n, adv.m());
    if wrench.len() != n {
        return Err(Error::DimensionMismatch {
            context: "wrench",
            expected: n,
            found: wrench.len(),
        });
    }
    if lambda.len() != m - n {
        return Err(Error::DimensionMismatch {
            context: "preload parameters",
            expected: m - n,
            found: lambda.len(),
        });
    }
    let mut rhs = DVector::zeros(m);
    rhs.rows_mut(0, n).copy_from(&wrench.0);
    rhs.rows_mut(n, m - n).copy_from(lambda);
    Ok(CableForces(&adv.inverse * rhs))
}

/// Wrench the cables exert on the platform, `w = A^T f`.
pub fn wrench_observer(at: &StructureMatrix, forces: &CableForces) -> Result<Wrench> {
    if forces.len() != at.m() {
        return Err(Error::DimensionMismatch {
            context: "wrench observer forces",
            expected: at.m(),
            found: forces.len(),
        });
    }
    Ok(Wrench(at.matrix() * &forces.0))
}

/// Moore-Penrose pseudo-inverse of a full-row-rank structure matrix.
pub fn pseudo_inverse(at: &StructureMatrix) -> Result<DMatrix<f64>> {
    let sigma = SVD::new(at.matrix().clone(), false, false).singular_values;
    let tol = RANK_TOL * sigma.max();
    let found = sigma.iter().filter(|&&s| s > tol).count();
    let deficient = Error::RankDeficient {
        rank: found,
        expected: at.n(),
    };
    if found != at.n() {
        return Err(deficient);
    }
    // full row rank: A = R^T Q^T, so pinv(A) = Q R^-T
    let qr = at.matrix().transpose().qr();
    let r_t = qr.r().transpose();
    let r_inv_t = r_t
        .solve_lower_triangular(&DMatrix::identity(at.n(), at.n()))
        .ok_or(deficient)?;
    Ok(qr.q() * r_inv_t)
}

/// Minimum-norm tensions producing `w`, i.e. `pinv(A^T) w`.
pub fn particular_forces(at: &StructureMatrix, wrench: &Wrench) -> Result<CableForces> {
    if wrench.len() != at.n() {
        return Err(Error::DimensionMismatch {
            context: "wrench",
            expected: at.n(),
            found: wrench.len(),
        });
    }
    Ok(CableForces(pseudo_inverse(at)? * &wrench.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormResult {
    pub forces: CableForces,
    /// All tensions lie inside the limits.
    pub valid: bool,
}

/// Closed-form baseline around the mid-range reference force.
pub fn closed_form_distribution(
    at: &StructureMatrix,
    wrench: &Wrench,
    limits: &ForceLimits,
) -> Result<ClosedFormResult> {
    closed_form_with_reference(at, wrench, &limits.midpoint(), limits)
}

/// `f = f_ref + pinv(A^T) (w - A^T f_ref)`: the tension vector closest to
/// `f_ref` that produces `w`.
pub fn closed_form_with_reference(
    at: &StructureMatrix,
    wrench: &Wrench,
    reference: &DVector<f64>,
    limits: &ForceLimits,
) -> Result<ClosedFormResult> {
    if reference.len() != at.m() || limits.len() != at.m() {
        return Err(Error::DimensionMismatch {
            context: "closed-form reference",
            expected: at.m(),
            found: reference.len().min(limits.len()),
        });
    }
    let correction = particular_forces(at, &Wrench(&wrench.0 - at.matrix() * reference))?;
    let forces = reference + correction.0;
    let valid = limits.contains(&forces, 0.0);
    Ok(ClosedFormResult {
        forces: CableForces(forces),
        valid,
    })
}
