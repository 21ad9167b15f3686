//! Small dense symmetric positive-definite factorization.
//!
//! Every `V⁻¹` and `Q⁻¹` in the toolkit is applied through [`Cholesky::solve`];
//! no explicit inverse is ever formed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots must exceed this fraction of the largest absolute entry.
pub const PIVOT_RTOL: f64 = 1e-12;

/// Lower-triangular factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Factor `a` using the relative pivot tolerance [`PIVOT_RTOL`].
    ///
    /// Only the lower triangle of `a` is read; callers are responsible for symmetry.
    pub fn factor(a: &DMatrix<f64>) -> Result<Self> {
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Self::factor_with_tolerance(a, PIVOT_RTOL * scale)
    }

    /// Factor `a`, rejecting any pivot `<= pivot_tol`.
    pub fn factor_with_tolerance(a: &DMatrix<f64>, pivot_tol: f64) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::domain(format!(
                "cannot factor a non-square {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::domain("cannot factor an empty matrix"));
        }
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut pivot = a[(j, j)];
            for k in 0..j {
                pivot -= l[(j, k)] * l[(j, k)];
            }
            // NaN pivots fail this test too.
            if !(pivot > pivot_tol) {
                return Err(Error::NotPositiveDefinite { index: j, pivot });
            }
            let d = pivot.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        assert_eq!(b.len(), self.dim(), "right-hand side has wrong length");
        let n = self.dim();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solve `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for (j, col) in b.column_iter().enumerate() {
            out.set_column(j, &self.solve(&col.into_owned()));
        }
        out
    }
}
