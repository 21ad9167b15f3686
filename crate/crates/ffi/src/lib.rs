//! C ABI over `portfolio-core`.
//!
//! Every function returns a [`PfStatus`]. Results go through out-pointers, which are
//! left untouched on failure. The message for the last failure on the calling thread
//! is available from [`pf_last_error`]. Matrices are dense and row-major. Dates are
//! integers of the form `yyyymmdd`.
//!
//! Handles from `*_new`/`*_open` must be released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chrono::{Datelike, NaiveDate};
use portfolio_core::nalgebra::{DMatrix, DVector};
use portfolio_core::{backtest, frontier, qp, quota, stats, Error, ErrorKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Inputs violate a precondition (shape, range, ordering, parse).
    Validation = 2,
    /// The data are numerically unusable (not positive definite, rank loss, degenerate).
    Numerical = 3,
    /// An internal panic was caught at the boundary.
    Panic = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Message for the most recent failure on this thread, or null if the last call
/// succeeded. The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn pf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[derive(Debug)]
struct Fail(PfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Validation => PfStatus::Validation,
            ErrorKind::Numerical => PfStatus::Numerical,
        };
        Fail(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Fail>;

fn null(what: &str) -> Fail {
    Fail(PfStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(PfStatus::Validation, msg.into())
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> PfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_last_error();
            PfStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            PfStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> FfiResult<&'a [f64]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &str) -> FfiResult<&'a mut [f64]> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> FfiResult<()> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

fn matrix(data: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

fn asset_names(n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("x{j}")).collect()
}

fn covariance_model(cov: &[f64], n: usize) -> FfiResult<stats::CovarianceModel> {
    Ok(stats::CovarianceModel::from_matrix(asset_names(n), matrix(cov, n, n))?)
}

fn to_date(yyyymmdd: i32) -> FfiResult<NaiveDate> {
    let (y, m, d) = (yyyymmdd / 10000, (yyyymmdd / 100 % 100) as u32, (yyyymmdd % 100) as u32);
    NaiveDate::from_ymd_opt(y, m, d).ok_or_else(|| invalid(format!("invalid date {yyyymmdd}")))
}

fn from_date(d: NaiveDate) -> i32 {
    d.year() * 10000 + d.month() as i32 * 100 + d.day() as i32
}

// ---------------------------------------------------------------------------
// Statistics

/// Arithmetic mean of `n` values.
///
/// # Safety
/// `values` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_mean(values: *const f64, n: usize, out: *mut f64) -> PfStatus {
    guard(|| {
        let v = slice(values, n, "values")?;
        write(out, stats::mean(v)?, "out")
    })
}

/// Standard deviation; `sample != 0` divides by `n − 1` instead of `n`.
///
/// # Safety
/// `values` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_stddev(values: *const f64, n: usize, sample: i32, out: *mut f64) -> PfStatus {
    guard(|| {
        let v = slice(values, n, "values")?;
        let s = if sample != 0 {
            stats::stddev_sample(v)?
        } else {
            stats::stddev_population(v)?
        };
        write(out, s, "out")
    })
}

/// Population covariance of two series of length `n`.
///
/// # Safety
/// `v` and `u` must each point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_covariance(v: *const f64, u: *const f64, n: usize, out: *mut f64) -> PfStatus {
    guard(|| {
        let c = stats::covariance(slice(v, n, "v")?, slice(u, n, "u")?)?;
        write(out, c, "out")
    })
}

/// Pearson correlation of two series of length `n`.
///
/// # Safety
/// `v` and `u` must each point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_correlation(v: *const f64, u: *const f64, n: usize, out: *mut f64) -> PfStatus {
    guard(|| {
        let c = stats::correlation(slice(v, n, "v")?, slice(u, n, "u")?)?;
        write(out, c, "out")
    })
}

// ---------------------------------------------------------------------------
// Quadratic programming

/// Cholesky test on a symmetric `n × n` matrix. Writes 1 or 0 to `out`.
///
/// # Safety
/// `q` must point to `n * n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_is_positive_definite(q: *const f64, n: usize, out: *mut i32) -> PfStatus {
    guard(|| {
        let q = slice(q, n * n, "q")?;
        let pd = qp::is_positive_definite(&matrix(q, n, n))?;
        write(out, pd as i32, "out")
    })
}

/// Minimize `½ xᵀQx` subject to `Ax = b`.
///
/// `q` is `n × n`, `a` is `s × n`, `b` has `s` entries, with `1 <= s < n`.
/// `x_out` receives `n` values and `lambda_out` `s` values; either may be null.
///
/// # Safety
/// All non-null pointers must reference arrays of the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn pf_solve_eq_qp(
    q: *const f64,
    n: usize,
    a: *const f64,
    s: usize,
    b: *const f64,
    x_out: *mut f64,
    lambda_out: *mut f64,
    objective_out: *mut f64,
) -> PfStatus {
    guard(|| {
        let q = matrix(slice(q, n * n, "q")?, n, n);
        let a = matrix(slice(a, s * n, "a")?, s, n);
        let b = DVector::from_column_slice(slice(b, s, "b")?);
        let sol = qp::solve_eq_qp(&qp::EqQpProblem::new(q, a, b)?)?;
        if !x_out.is_null() {
            slice_mut(x_out, n, "x_out")?.copy_from_slice(sol.x_star.as_slice());
        }
        if !lambda_out.is_null() {
            slice_mut(lambda_out, s, "lambda_out")?.copy_from_slice(sol.lambda.as_slice());
        }
        if !objective_out.is_null() {
            objective_out.write(sol.objective);
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Frontier

/// Opaque efficient-frontier model.
pub struct PfFrontier(frontier::FrontierModel);

/// Build a frontier from `n` mean returns and a row-major `n × n` covariance.
///
/// # Safety
/// `means` must point to `n` doubles, `cov` to `n * n`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_frontier_new(
    means: *const f64,
    cov: *const f64,
    n: usize,
    out: *mut *mut PfFrontier,
) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 {
            return Err(invalid("need at least one asset"));
        }
        let means = slice(means, n, "means")?;
        let v = covariance_model(slice(cov, n * n, "cov")?, n)?;
        let f = frontier::frontier_constants(means, &v)?;
        out.write(Box::into_raw(Box::new(PfFrontier(f))));
        Ok(())
    })
}

/// Release a frontier handle. Null is ignored.
///
/// # Safety
/// `f` must come from [`pf_frontier_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pf_frontier_free(f: *mut PfFrontier) {
    if !f.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(f))));
    }
}

unsafe fn frontier_ref<'a>(f: *const PfFrontier) -> FfiResult<&'a frontier::FrontierModel> {
    f.as_ref().map(|f| &f.0).ok_or_else(|| null("frontier"))
}

/// Number of assets in the model.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_frontier_dim(f: *const PfFrontier, out: *mut usize) -> PfStatus {
    guard(|| write(out, frontier_ref(f)?.dim(), "out"))
}

/// Frontier constants `a`, `b`, `c` and `delta`. Null outputs are skipped.
///
/// # Safety
/// `f` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_frontier_constants(
    f: *const PfFrontier,
    a: *mut f64,
    b: *mut f64,
    c: *mut f64,
    delta: *mut f64,
) -> PfStatus {
    guard(|| {
        let f = frontier_ref(f)?;
        for (p, v) in [(a, f.a()), (b, f.b()), (c, f.c()), (delta, f.delta())] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// Minimum-risk weights for target return `r`; writes `dim` values to `weights_out`.
///
/// # Safety
/// `f` must be a live handle; `weights_out` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn pf_frontier_allocation(f: *const PfFrontier, r: f64, weights_out: *mut f64) -> PfStatus {
    guard(|| {
        let f = frontier_ref(f)?;
        let x = frontier::frontier_allocation(f, r)?;
        slice_mut(weights_out, f.dim(), "weights_out")?.copy_from_slice(x.weights().as_slice());
        Ok(())
    })
}

/// Risk on the frontier at target return `r`.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_frontier_risk(f: *const PfFrontier, r: f64, out: *mut f64) -> PfStatus {
    guard(|| write(out, frontier::frontier_risk(frontier_ref(f)?, r)?, "out"))
}

/// Vertex of the frontier. `weights_out` (length `dim`) may be null.
///
/// # Safety
/// `f` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_frontier_min_risk(
    f: *const PfFrontier,
    weights_out: *mut f64,
    return_out: *mut f64,
    risk_out: *mut f64,
) -> PfStatus {
    guard(|| {
        let f = frontier_ref(f)?;
        let mr = frontier::min_risk_portfolio(f)?;
        if !weights_out.is_null() {
            slice_mut(weights_out, f.dim(), "weights_out")?.copy_from_slice(mr.allocation.weights().as_slice());
        }
        if !return_out.is_null() {
            return_out.write(mr.expected_return);
        }
        if !risk_out.is_null() {
            risk_out.write(mr.risk);
        }
        Ok(())
    })
}

/// Total return divided by per-period risk.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_performance_quotient(total_return: f64, risk: f64, out: *mut f64) -> PfStatus {
    guard(|| write(out, frontier::performance_quotient(total_return, risk)?, "out"))
}

// ---------------------------------------------------------------------------
// Contribution rule

/// Index of the asset whose current percentage lags its suggested percentage the most.
/// Both arrays hold `n` percentages summing to 100.
///
/// # Safety
/// `current` and `suggested` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_choose_asset_markowitz(
    current: *const f64,
    suggested: *const f64,
    n: usize,
    out: *mut usize,
) -> PfStatus {
    guard(|| {
        let j = backtest::choose_asset_markowitz(slice(current, n, "current")?, slice(suggested, n, "suggested")?)?;
        write(out, j, "out")
    })
}

// ---------------------------------------------------------------------------
// Quota ledger

/// Opaque quota ledger.
pub struct PfQuotaLedger(quota::QuotaLedger);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfQuotaEntry {
    /// `yyyymmdd`
    pub date: i32,
    pub portfolio_return: f64,
    pub flow: f64,
    pub quota_value: f64,
    pub quota_count: f64,
    pub capital: f64,
}

/// Open a ledger on `date` with a positive initial deposit.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_quota_open(date: i32, initial_deposit: f64, out: *mut *mut PfQuotaLedger) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let l = quota::QuotaLedger::open(to_date(date)?, initial_deposit)?;
        out.write(Box::into_raw(Box::new(PfQuotaLedger(l))));
        Ok(())
    })
}

/// Release a ledger handle. Null is ignored.
///
/// # Safety
/// `l` must come from [`pf_quota_open`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pf_quota_free(l: *mut PfQuotaLedger) {
    if !l.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(l))));
    }
}

unsafe fn ledger_ref<'a>(l: *const PfQuotaLedger) -> FfiResult<&'a quota::QuotaLedger> {
    l.as_ref().map(|l| &l.0).ok_or_else(|| null("ledger"))
}

/// Apply one period: the return first, then the flow. The ledger is unchanged on failure.
///
/// # Safety
/// `l` must be a live handle not used concurrently from another thread.
#[no_mangle]
pub unsafe extern "C" fn pf_quota_apply(
    l: *mut PfQuotaLedger,
    date: i32,
    portfolio_return: f64,
    flow: f64,
) -> PfStatus {
    guard(|| {
        let l = l.as_mut().ok_or_else(|| null("ledger"))?;
        l.0.apply_day(to_date(date)?, portfolio_return, flow)?;
        Ok(())
    })
}

/// Number of entries, including the opening one.
///
/// # Safety
/// `l` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_quota_len(l: *const PfQuotaLedger, out: *mut usize) -> PfStatus {
    guard(|| write(out, ledger_ref(l)?.len(), "out"))
}

/// Copy entry `index` into `out`.
///
/// # Safety
/// `l` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_quota_entry(l: *const PfQuotaLedger, index: usize, out: *mut PfQuotaEntry) -> PfStatus {
    guard(|| {
        let entries = ledger_ref(l)?.entries();
        let e = entries
            .get(index)
            .ok_or_else(|| invalid(format!("index {index} out of range for {} entries", entries.len())))?;
        let entry = PfQuotaEntry {
            date: from_date(e.date),
            portfolio_return: e.portfolio_return,
            flow: e.flow,
            quota_value: e.quota_value,
            quota_count: e.quota_count,
            capital: e.capital,
        };
        write(out, entry, "out")
    })
}

/// Final over initial quota value, minus one.
///
/// # Safety
/// `l` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_quota_return(l: *const PfQuotaLedger, out: *mut f64) -> PfStatus {
    guard(|| write(out, ledger_ref(l)?.quota_return()?, "out"))
}

/// Final capital over net deposits, minus one.
///
/// # Safety
/// `l` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_quota_capital_return(l: *const PfQuotaLedger, out: *mut f64) -> PfStatus {
    guard(|| write(out, ledger_ref(l)?.capital_return()?, "out"))
}

/// Population standard deviation of the per-period quota returns.
///
/// # Safety
/// `l` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_quota_risk(l: *const PfQuotaLedger, out: *mut f64) -> PfStatus {
    guard(|| write(out, ledger_ref(l)?.risk()?, "out"))
}
