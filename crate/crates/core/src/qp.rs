//! Closed-form solver for `min ½ xᵀQx  s.t.  Ax = b`.
//!
//! With `Q` positive definite and `A` of full row rank `s < n`, the minimizer is
//! `x* = Q⁻¹Aᵀ(AQ⁻¹Aᵀ)⁻¹b` and the multipliers are `λ = (AQ⁻¹Aᵀ)⁻¹b`.
//! Both are evaluated through Cholesky solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, PIVOT_RTOL};

/// Relative asymmetry tolerated in a "symmetric" input.
pub const SYMMETRY_RTOL: f64 = 1e-12;

/// KKT residual bound, scaled by `1 + ‖b‖∞` (feasibility) or `max(1, ‖Aᵀλ‖∞)` (stationarity).
pub const KKT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct EqQpProblem {
    q: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl EqQpProblem {
    pub fn new(q: DMatrix<f64>, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n || n == 0 {
            return Err(Error::domain(format!(
                "Q must be square and non-empty, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        let s = a.nrows();
        if a.ncols() != n {
            return Err(Error::domain(format!("A has {} columns but Q is {n}x{n}", a.ncols())));
        }
        if s == 0 || s >= n {
            return Err(Error::domain(format!(
                "need 1 <= s < n constraints, got s = {s}, n = {n}"
            )));
        }
        if b.len() != s {
            return Err(Error::domain(format!("b has length {} but A has {s} rows", b.len())));
        }
        if q.iter().chain(a.iter()).chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("problem data must be finite"));
        }
        check_symmetric(&q)?;
        Ok(EqQpProblem { q, a, b })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqQpSolution {
    pub x_star: DVector<f64>,
    pub lambda: DVector<f64>,
    /// `½ x*ᵀ Q x*`
    pub objective: f64,
    /// `‖Ax* − b‖∞`
    pub constraint_residual: f64,
    /// `‖Qx* − Aᵀλ‖∞`
    pub stationarity_residual: f64,
}

pub fn check_symmetric(q: &DMatrix<f64>) -> Result<()> {
    let n = q.nrows();
    if q.ncols() != n {
        return Err(Error::domain("matrix is not square"));
    }
    let scale = q.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (q[(i, j)] - q[(j, i)]).abs() > SYMMETRY_RTOL * scale {
                return Err(Error::domain(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    q[(i, j)],
                    q[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// True iff a Cholesky factorization succeeds with every pivot above
/// `1e-12 · max|Q_ij|`.
pub fn is_positive_definite(q: &DMatrix<f64>) -> Result<bool> {
    if q.nrows() == 0 {
        return Err(Error::domain("empty matrix"));
    }
    check_symmetric(q)?;
    Ok(Cholesky::factor(q).is_ok())
}

pub fn solve_eq_qp(problem: &EqQpProblem) -> Result<EqQpSolution> {
    let chol_q = Cholesky::factor(&problem.q)?;
    solve_with_factor(problem, &chol_q)
}

/// Solve reusing an existing factorization of `Q`.
pub(crate) fn solve_with_factor(problem: &EqQpProblem, chol_q: &Cholesky) -> Result<EqQpSolution> {
    let EqQpProblem { q, a, b } = problem;
    let s = a.nrows();

    // Y = Q⁻¹Aᵀ, S = AY
    let y = chol_q.solve_matrix(&a.transpose());
    let mut schur = a * &y;
    schur = (&schur + schur.transpose()) * 0.5;

    // Equilibrate S so the rank test does not depend on row scaling of A.
    let mut scale = DVector::zeros(s);
    for i in 0..s {
        let d = schur[(i, i)];
        if !(d > 0.0) {
            return Err(Error::RankDeficient);
        }
        scale[i] = 1.0 / d.sqrt();
    }
    let scaled = DMatrix::from_fn(s, s, |i, j| schur[(i, j)] * scale[i] * scale[j]);
    let chol_s = Cholesky::factor_with_tolerance(&scaled, PIVOT_RTOL).map_err(|_| Error::RankDeficient)?;
    let lambda = chol_s.solve(&b.component_mul(&scale)).component_mul(&scale);
    let x_star = &y * &lambda;

    let constraint_residual = (a * &x_star - b).amax();
    let at_lambda = a.transpose() * &lambda;
    let stationarity_residual = (q * &x_star - &at_lambda).amax();
    let feas_tol = KKT_TOL * (1.0 + b.amax());
    let stat_tol = KKT_TOL * at_lambda.amax().max(1.0);
    if !(constraint_residual <= feas_tol) || !(stationarity_residual <= stat_tol) {
        return Err(Error::Numerical(format!(
            "KKT residuals too large (feasibility {constraint_residual:e}, stationarity {stationarity_residual:e}); \
             the system is too ill-conditioned"
        )));
    }
    Ok(EqQpSolution {
        objective: problem.objective(&x_star),
        x_star,
        lambda,
        constraint_residual,
        stationarity_residual,
    })
}
