//! Portfolio analytics and the closed-form efficient frontier.
//!
//! With `a = MᵀV⁻¹e`, `b = MᵀV⁻¹M`, `c = eᵀV⁻¹e` and `Δ = bc − a²`, the
//! minimum-risk portfolio with expected return `r` is
//!
//! ```text
//! x(r) = ((c r − a)/Δ) V⁻¹M − ((a r − b)/Δ) V⁻¹e
//! σ(r) = sqrt((c r² − 2 a r + b) / Δ)
//! ```
//!
//! and the global minimum sits at `r_min = a/c`, `σ_min = 1/√c`, `x_min = V⁻¹e / c`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::qp::{self, EqQpProblem};
use crate::series::ReturnMatrix;
use crate::stats::CovarianceModel;

/// Allocations must sum to one within this tolerance (relative to `max(1, Σ|x_j|)`).
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

/// `M` is treated as proportional to `e` when `‖M − m̄e‖∞ <= 1e-12 ‖M‖∞`.
pub const COLLINEARITY_RTOL: f64 = 1e-12;

/// Number of points in a report grid.
pub const REPORT_GRID_POINTS: usize = 200;

/// Capital fractions per asset. Entries may be negative (short) or above one (leverage).
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    assets: Vec<String>,
    weights: DVector<f64>,
}

impl Allocation {
    pub fn new(assets: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if assets.len() != weights.len() || assets.is_empty() {
            return Err(Error::domain(format!(
                "{} assets but {} weights",
                assets.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::domain("weights must be finite"));
        }
        let sum: f64 = weights.iter().sum();
        let gross: f64 = weights.iter().map(|w| w.abs()).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL * gross.max(1.0) {
            return Err(Error::domain(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Allocation {
            assets,
            weights: DVector::from_vec(weights),
        })
    }

    pub fn equal(assets: Vec<String>) -> Result<Self> {
        let n = assets.len();
        Allocation::new(assets, vec![1.0 / n as f64; n])
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weights times 100.
    pub fn percentages(&self) -> Vec<f64> {
        self.weights.iter().map(|w| 100.0 * w).collect()
    }
}

/// Per-period portfolio returns `r_i = Σ_j x_j r_ij`.
pub fn portfolio_return_series(r: &ReturnMatrix, x: &Allocation) -> Result<Vec<f64>> {
    if r.assets() != x.assets() {
        return Err(Error::domain(format!(
            "allocation assets {:?} do not match return matrix assets {:?}",
            x.assets(),
            r.assets()
        )));
    }
    Ok((r.returns() * x.weights()).iter().copied().collect())
}

/// `Mᵀx`
pub fn portfolio_mean(means: &[f64], x: &Allocation) -> Result<f64> {
    if means.len() != x.len() {
        return Err(Error::domain(format!(
            "{} mean returns for {} weights",
            means.len(),
            x.len()
        )));
    }
    Ok(means.iter().zip(x.weights().iter()).map(|(m, w)| m * w).sum())
}

/// `sqrt(xᵀVx)`
pub fn portfolio_risk(v: &CovarianceModel, x: &Allocation) -> Result<f64> {
    if v.dim() != x.len() {
        return Err(Error::domain(format!(
            "{}x{} covariance for {} weights",
            v.dim(),
            v.dim(),
            x.len()
        )));
    }
    risk_of(v.matrix(), x.weights())
}

fn risk_of(v: &DMatrix<f64>, x: &DVector<f64>) -> Result<f64> {
    let quad = x.dot(&(v * x));
    if quad < -1e-12 {
        return Err(Error::Numerical(format!("negative portfolio variance {quad:e}")));
    }
    Ok(quad.max(0.0).sqrt())
}

/// Minimum-variance weights `V⁻¹e / (eᵀV⁻¹e)`.
///
/// Unlike [`frontier_constants`] this does not need the mean returns, so it also
/// works on universes whose assets share the same mean.
pub fn min_variance_allocation(v: &CovarianceModel) -> Result<Allocation> {
    let chol = Cholesky::factor(v.matrix())?;
    let ones = DVector::from_element(v.dim(), 1.0);
    let v_inv_e = chol.solve(&ones);
    let c = v_inv_e.sum();
    if !(c > 0.0) {
        return Err(Error::Numerical(format!("eᵀV⁻¹e = {c} is not positive")));
    }
    Allocation::new(v.assets().to_vec(), (v_inv_e / c).iter().copied().collect())
}

/// Frontier constants together with the cached factorization of `V`.
#[derive(Debug, Clone)]
pub struct FrontierModel {
    a: f64,
    b: f64,
    c: f64,
    delta: f64,
    means: DVector<f64>,
    cov: CovarianceModel,
    chol: Cholesky,
    v_inv_m: DVector<f64>,
    v_inv_e: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinRiskPortfolio {
    pub allocation: Allocation,
    pub expected_return: f64,
    pub risk: f64,
}

pub fn frontier_constants(means: &[f64], v: &CovarianceModel) -> Result<FrontierModel> {
    let n = v.dim();
    if means.len() != n {
        return Err(Error::domain(format!("{} mean returns for {n} assets", means.len())));
    }
    if means.iter().any(|m| !m.is_finite()) {
        return Err(Error::domain("mean returns must be finite"));
    }
    let chol = Cholesky::factor(v.matrix())?;
    let m = DVector::from_row_slice(means);
    let m_bar = m.mean();
    let spread = m.iter().fold(0.0_f64, |acc, x| acc.max((x - m_bar).abs()));
    if spread <= COLLINEARITY_RTOL * m.amax() {
        return Err(Error::DegenerateUniverse);
    }
    let ones = DVector::from_element(n, 1.0);
    let v_inv_m = chol.solve(&m);
    let v_inv_e = chol.solve(&ones);
    let a = m.dot(&v_inv_e);
    let b = m.dot(&v_inv_m);
    let c = ones.dot(&v_inv_e);
    // Δ = bc − a² = c · uᵀV⁻¹u with u = M − (a/c)e; this form avoids the cancellation.
    let u = &m - &ones * (a / c);
    let delta = c * u.dot(&chol.solve(&u));
    if !(b > 0.0 && c > 0.0 && b * delta > 0.0) {
        return Err(Error::DegenerateUniverse);
    }
    Ok(FrontierModel {
        a,
        b,
        c,
        delta,
        means: m,
        cov: v.clone(),
        chol,
        v_inv_m,
        v_inv_e,
    })
}

impl FrontierModel {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn means(&self) -> &DVector<f64> {
        &self.means
    }

    pub fn covariance(&self) -> &CovarianceModel {
        &self.cov
    }

    pub fn assets(&self) -> &[String] {
        self.cov.assets()
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// `Δσ² − cr² + 2ar − b`, zero on the frontier.
    pub fn hyperbola_residual(&self, sigma: f64, r: f64) -> f64 {
        self.delta * sigma * sigma - self.c * r * r + 2.0 * self.a * r - self.b
    }

    fn weights_at(&self, r: f64) -> DVector<f64> {
        let cm = (self.c * r - self.a) / self.delta;
        let ce = (self.a * r - self.b) / self.delta;
        &self.v_inv_m * cm - &self.v_inv_e * ce
    }
}

fn check_target(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::domain(format!("target return must be positive, got {r}")));
    }
    Ok(())
}

/// Closed-form frontier allocation for target return `r > 0`.
pub fn frontier_allocation(f: &FrontierModel, r: f64) -> Result<Allocation> {
    check_target(r)?;
    Allocation::new(f.assets().to_vec(), f.weights_at(r).iter().copied().collect())
}

/// The same allocation obtained from the generic QP with `Q = V`, `A = [M e]ᵀ`, `b = [r 1]ᵀ`.
///
/// The QP needs fewer constraints than assets, so this route requires at least three assets.
pub fn frontier_allocation_via_qp(f: &FrontierModel, r: f64) -> Result<Allocation> {
    check_target(r)?;
    let n = f.dim();
    let a = DMatrix::from_fn(2, n, |i, j| if i == 0 { f.means[j] } else { 1.0 });
    let problem = EqQpProblem::new(f.cov.matrix().clone(), a, DVector::from_vec(vec![r, 1.0]))?;
    let sol = qp::solve_with_factor(&problem, &f.chol)?;
    Allocation::new(f.assets().to_vec(), sol.x_star.iter().copied().collect())
}

/// `σ(r) = sqrt((c r² − 2 a r + b) / Δ)`
pub fn frontier_risk(f: &FrontierModel, r: f64) -> Result<f64> {
    check_target(r)?;
    let radicand = (f.c * r * r - 2.0 * f.a * r + f.b) / f.delta;
    if radicand < -1e-12 * (f.b / f.delta).abs().max(1.0) {
        return Err(Error::Numerical(format!("negative frontier variance {radicand:e}")));
    }
    Ok(radicand.max(0.0).sqrt())
}

pub fn min_risk_portfolio(f: &FrontierModel) -> Result<MinRiskPortfolio> {
    let weights = &f.v_inv_e / f.c;
    Ok(MinRiskPortfolio {
        allocation: Allocation::new(f.assets().to_vec(), weights.iter().copied().collect())?,
        expected_return: f.a / f.c,
        risk: 1.0 / f.c.sqrt(),
    })
}

/// Total return divided by per-period risk.
pub fn performance_quotient(total_return: f64, risk: f64) -> Result<f64> {
    if !(risk > 0.0) {
        return Err(Error::domain(format!("risk must be positive, got {risk}")));
    }
    Ok(total_return / risk)
}

/// Evenly spaced target returns for frontier reports: from `max(1e-6, r_min/4)` to `4 r_min`.
///
/// When `r_min <= 0` the upper end becomes `max(4|r_min|, 16e-6)` so the grid stays
/// inside the `r > 0` domain.
pub fn report_grid(f: &FrontierModel) -> Vec<f64> {
    let r_min = f.a / f.c;
    let lo = (r_min / 4.0).max(1e-6);
    let hi = if r_min > 0.0 && 4.0 * r_min > lo {
        4.0 * r_min
    } else {
        (4.0 * r_min.abs()).max(16.0 * lo)
    };
    let steps = (REPORT_GRID_POINTS - 1) as f64;
    (0..REPORT_GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / steps)
        .collect()
}
