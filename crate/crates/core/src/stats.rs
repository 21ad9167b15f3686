//! Descriptive statistics on data vectors and return matrices.
//!
//! Population normalization (`1/m`) is the default everywhere. The sample
//! estimator (`1/(m-1)`) is available through the `*_with` variants for
//! reproducing tables that were computed that way.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::qp;
use crate::series::ReturnMatrix;

/// Correlations may overshoot `[-1, 1]` by at most this much before clamping.
pub const CORRELATION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide by `m`.
    #[default]
    Population,
    /// Divide by `m - 1`.
    Sample,
}

impl Normalization {
    fn divisor(self, m: usize) -> Result<f64> {
        match self {
            Normalization::Population if m >= 1 => Ok(m as f64),
            Normalization::Sample if m >= 2 => Ok((m - 1) as f64),
            Normalization::Population => Err(Error::domain("statistic of an empty vector")),
            Normalization::Sample => Err(Error::domain("sample statistic needs at least two observations")),
        }
    }
}

pub fn mean(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::domain("mean of an empty vector"));
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

pub fn variance_with(v: &[f64], norm: Normalization) -> Result<f64> {
    let mu = mean(v)?;
    let div = norm.divisor(v.len())?;
    Ok(v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / div)
}

pub fn variance_population(v: &[f64]) -> Result<f64> {
    variance_with(v, Normalization::Population)
}

pub fn stddev_with(v: &[f64], norm: Normalization) -> Result<f64> {
    variance_with(v, norm).map(f64::sqrt)
}

pub fn stddev_population(v: &[f64]) -> Result<f64> {
    stddev_with(v, Normalization::Population)
}

pub fn stddev_sample(v: &[f64]) -> Result<f64> {
    stddev_with(v, Normalization::Sample)
}

pub fn covariance_with(v: &[f64], u: &[f64], norm: Normalization) -> Result<f64> {
    if v.len() != u.len() {
        return Err(Error::domain(format!(
            "covariance of vectors with lengths {} and {}",
            v.len(),
            u.len()
        )));
    }
    let mv = mean(v)?;
    let mu = mean(u)?;
    let div = norm.divisor(v.len())?;
    Ok(v.iter().zip(u).map(|(a, b)| (a - mv) * (b - mu)).sum::<f64>() / div)
}

pub fn covariance(v: &[f64], u: &[f64]) -> Result<f64> {
    covariance_with(v, u, Normalization::Population)
}

fn is_degenerate(v: &[f64], sd: f64) -> bool {
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    sd <= f64::EPSILON * scale
}

/// Pearson correlation, guaranteed to lie in `[-1, 1]`.
pub fn correlation(v: &[f64], u: &[f64]) -> Result<f64> {
    let cov = covariance(v, u)?;
    let sv = stddev_population(v)?;
    let su = stddev_population(u)?;
    if is_degenerate(v, sv) || is_degenerate(u, su) {
        return Err(Error::DegenerateSeries(
            "correlation is undefined for a series with zero standard deviation".into(),
        ));
    }
    clamp_correlation(cov / (sv * su))
}

fn clamp_correlation(rho: f64) -> Result<f64> {
    if !(rho.abs() <= 1.0 + CORRELATION_SLACK) {
        return Err(Error::Numerical(format!("correlation {rho} outside [-1, 1]")));
    }
    Ok(rho.clamp(-1.0, 1.0))
}

/// Symmetric covariance matrix of an asset universe.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    assets: Vec<String>,
    matrix: DMatrix<f64>,
    stddevs: DVector<f64>,
    is_positive_definite: bool,
}

impl CovarianceModel {
    /// Wrap an existing matrix. Asymmetry beyond `1e-12` relative is rejected;
    /// smaller asymmetry is removed by averaging with the transpose.
    pub fn from_matrix(assets: Vec<String>, matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n || assets.len() != n {
            return Err(Error::domain(format!(
                "covariance must be square with one asset per row (got {}x{}, {} assets)",
                matrix.nrows(),
                matrix.ncols(),
                assets.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("covariance entries must be finite"));
        }
        qp::check_symmetric(&matrix)?;
        let sym = (&matrix + matrix.transpose()) * 0.5;
        Self::from_symmetric(assets, sym)
    }

    fn from_symmetric(assets: Vec<String>, mut matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if let Some(j) = (0..n).find(|&j| matrix[(j, j)] < 0.0) {
            return Err(Error::domain(format!(
                "negative variance {} for asset `{}`",
                matrix[(j, j)],
                assets[j]
            )));
        }
        let stddevs = DVector::from_iterator(n, (0..n).map(|j| matrix[(j, j)].sqrt()));
        for j in 0..n {
            matrix[(j, j)] = stddevs[j] * stddevs[j];
        }
        let is_positive_definite = qp::is_positive_definite(&matrix)?;
        Ok(CovarianceModel {
            assets,
            matrix,
            stddevs,
            is_positive_definite,
        })
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn stddevs(&self) -> &DVector<f64> {
        &self.stddevs
    }

    pub fn is_positive_definite(&self) -> bool {
        self.is_positive_definite
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Pairwise correlations `σ_jl / (σ_j σ_l)`.
    pub fn correlation_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if let Some(j) = (0..n).find(|&j| self.stddevs[j] == 0.0) {
            return Err(Error::DegenerateSeries(format!(
                "asset `{}` has zero standard deviation",
                self.assets[j]
            )));
        }
        let mut rho = DMatrix::identity(n, n);
        for j in 0..n {
            for l in (j + 1)..n {
                let r = clamp_correlation(self.matrix[(j, l)] / (self.stddevs[j] * self.stddevs[l]))?;
                rho[(j, l)] = r;
                rho[(l, j)] = r;
            }
        }
        Ok(rho)
    }
}

/// `V = (1/m) Σ_i (R_i - M)(R_i - M)ᵀ` over the rows of `r`.
pub fn covariance_matrix(r: &ReturnMatrix) -> Result<CovarianceModel> {
    covariance_matrix_with(r, Normalization::Population)
}

pub fn covariance_matrix_with(r: &ReturnMatrix, norm: Normalization) -> Result<CovarianceModel> {
    let (m, n) = r.returns().shape();
    if m < 2 {
        return Err(Error::domain(format!(
            "covariance matrix needs at least 2 return periods, got {m}"
        )));
    }
    let div = norm.divisor(m)?;
    let means = r.means();
    let mut v = DMatrix::<f64>::zeros(n, n);
    let mut centered = vec![0.0; n];
    for row in r.returns().row_iter() {
        for j in 0..n {
            centered[j] = row[j] - means[j];
        }
        for j in 0..n {
            for l in j..n {
                v[(j, l)] += centered[j] * centered[l];
            }
        }
    }
    for j in 0..n {
        for l in j..n {
            v[(j, l)] /= div;
            v[(l, j)] = v[(j, l)];
        }
    }
    CovarianceModel::from_symmetric(r.assets().to_vec(), v)
}
