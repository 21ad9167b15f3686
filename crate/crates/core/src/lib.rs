//! Mean-variance portfolio toolkit: return statistics, equality-constrained
//! quadratic programs, the efficient frontier, contribution backtests and
//! quota-based performance accounting.
//!
//! ```no_run
//! use portfolio_core::{frontier, io, series, stats};
//!
//! # fn main() -> portfolio_core::Result<()> {
//! let prices = io::ingest_prices("prices.csv".as_ref(), io::Locale::Dot)?;
//! let returns = series::simple_returns(&prices)?;
//! let cov = stats::covariance_matrix(&returns)?;
//! let means: Vec<f64> = returns.means().iter().copied().collect();
//! let f = frontier::frontier_constants(&means, &cov)?;
//! let vertex = frontier::min_risk_portfolio(&f)?;
//! println!("sigma_min = {}", vertex.risk);
//! # Ok(())
//! # }
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod config;
pub mod error;
pub mod frontier;
pub mod io;
pub mod linalg;
pub mod qp;
pub mod quota;
pub mod report;
pub mod series;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
pub use frontier::{Allocation, FrontierModel, MinRiskPortfolio};
pub use nalgebra;
pub use quota::{QuotaEntry, QuotaLedger};
pub use series::{PriceSeries, ReturnMatrix};
pub use stats::{CovarianceModel, Normalization};
