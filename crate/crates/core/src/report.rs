//! Plot-ready CSV reports.
//!
//! Output is deterministic: the same inputs produce byte-identical files.
//! Precision only affects how numbers are printed.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::backtest::{contribution_vs_interest_split, BacktestState};
use crate::error::{Error, Result};
use crate::frontier::{self, FrontierModel, MinRiskPortfolio};
use crate::quota::QuotaLedger;
use crate::series::ReturnMatrix;
use crate::stats::{self, CovarianceModel};

/// `None` prints the shortest string that round-trips; `Some(d)` prints `d` decimals.
pub fn format_number(v: f64, precision: Option<usize>) -> String {
    let s = match precision {
        None => format!("{v}"),
        Some(d) => format!("{v:.d$}"),
    };
    // No "-0" or "-0.000" in reports.
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// `r,sigma,x_1..x_n` rows for each grid point.
pub fn write_frontier_rows<W: Write>(out: W, f: &FrontierModel, grid: &[f64], precision: Option<usize>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["r".to_string(), "sigma".to_string()];
    header.extend((1..=f.dim()).map(|i| format!("x_{i}")));
    w.write_record(&header)?;
    for &r in grid {
        let x = frontier::frontier_allocation(f, r)?;
        let sigma = frontier::frontier_risk(f, r)?;
        let mut rec = vec![format_number(r, precision), format_number(sigma, precision)];
        rec.extend(x.weights().iter().map(|v| format_number(*v, precision)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `key,value` rows: frontier constants, the vertex and the minimum-risk weights.
pub fn write_frontier_summary<W: Write>(out: W, f: &FrontierModel, precision: Option<usize>) -> Result<()> {
    let mr = frontier::min_risk_portfolio(f)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "value"])?;
    for (k, v) in [
        ("a", f.a()),
        ("b", f.b()),
        ("c", f.c()),
        ("delta", f.delta()),
        ("r_min", mr.expected_return),
        ("sigma_min", mr.risk),
    ] {
        w.write_record([k.to_string(), format_number(v, precision)])?;
    }
    for (a, x) in f.assets().iter().zip(mr.allocation.weights().iter()) {
        w.write_record([format!("x_min_{a}"), format_number(*x, precision)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `frontier.csv` and `frontier_summary.csv` into `dir`.
pub fn emit_frontier_report(
    dir: &Path,
    f: &FrontierModel,
    grid: &[f64],
    precision: Option<usize>,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let rows = dir.join("frontier.csv");
    let summary = dir.join("frontier_summary.csv");
    write_frontier_rows(create(&rows)?, f, grid, precision)?;
    write_frontier_summary(create(&summary)?, f, precision)?;
    Ok(vec![rows, summary])
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// `asset,weight,percent` for a minimum-risk portfolio, followed by its return and risk.
pub fn write_min_risk<W: Write>(out: W, mr: &MinRiskPortfolio, precision: Option<usize>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["asset", "weight", "percent"])?;
    let pct = mr.allocation.percentages();
    for ((a, x), p) in mr
        .allocation
        .assets()
        .iter()
        .zip(mr.allocation.weights().iter())
        .zip(pct)
    {
        w.write_record([a.clone(), format_number(*x, precision), format_number(p, precision)])?;
    }
    w.write_record([
        "r_min".to_string(),
        format_number(mr.expected_return, precision),
        String::new(),
    ])?;
    w.write_record([
        "sigma_min".to_string(),
        format_number(mr.risk, precision),
        String::new(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Per-asset mean and standard deviations, then the covariance and correlation matrices.
pub fn write_stats<W: Write>(out: W, r: &ReturnMatrix, cov: &CovarianceModel, precision: Option<usize>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = r.n_assets();
    let f = |v: f64| format_number(v, precision);
    w.write_record(["asset", "mean", "stddev", "stddev_sample"])?;
    for j in 0..n {
        let col = r.column(j);
        let sample = stats::stddev_sample(col).map(f).unwrap_or_default();
        w.write_record([r.assets()[j].clone(), f(r.means()[j]), f(cov.stddevs()[j]), sample])?;
    }
    let corr = cov.correlation_matrix().ok();
    for (name, m) in [("covariance", Some(cov.matrix().clone())), ("correlation", corr)] {
        let Some(m) = m else { continue };
        let mut header = vec![name.to_string()];
        header.extend(r.assets().iter().cloned());
        w.write_record(pad(header, n))?;
        for i in 0..n {
            let mut rec = vec![r.assets()[i].clone()];
            rec.extend((0..n).map(|j| f(m[(i, j)])));
            w.write_record(pad(rec, n))?;
        }
    }
    w.flush()?;
    Ok(())
}

// Every record in a CSV file must have the same width.
fn pad(mut rec: Vec<String>, n: usize) -> Vec<String> {
    rec.resize(4.max(n + 1), String::new());
    rec
}

/// Daily returns of a fixed-weight portfolio with its mean and population risk.
pub fn write_portfolio_returns<W: Write>(
    out: W,
    r: &ReturnMatrix,
    series: &[f64],
    precision: Option<usize>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "return"])?;
    for (d, v) in r.dates().iter().zip(series) {
        w.write_record([d.to_string(), format_number(*v, precision)])?;
    }
    w.write_record(["mean".to_string(), format_number(stats::mean(series)?, precision)])?;
    w.write_record([
        "stddev".to_string(),
        format_number(stats::stddev_population(series)?, precision),
    ])?;
    if let Ok(s) = stats::stddev_sample(series) {
        w.write_record(["stddev_sample".to_string(), format_number(s, precision)])?;
    }
    w.flush()?;
    Ok(())
}

/// `date,C-<asset>..,N-<asset>..,patrimony`: month-end closes, share counts and patrimony.
pub fn write_backtest_monthly<W: Write>(out: W, state: &BacktestState, precision: Option<usize>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let f = |v: f64| format_number(v, precision);
    let mut header = vec!["date".to_string()];
    header.extend(state.assets.iter().map(|a| format!("C-{a}")));
    header.extend(state.assets.iter().map(|a| format!("N-{a}")));
    header.push("patrimony".into());
    w.write_record(&header)?;
    for m in &state.ledger {
        let mut rec = vec![m.month_end.to_string()];
        rec.extend(m.month_end_closes.iter().map(|v| f(*v)));
        rec.extend(m.holdings_after.iter().map(|v| f(*v)));
        rec.push(f(m.patrimony_after));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `date,P-..,PS-..,DP-..,chosen,contribution,warning` per trade date.
pub fn write_backtest_decisions<W: Write>(out: W, state: &BacktestState, precision: Option<usize>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = state.assets.len();
    let f = |v: f64| format_number(v, precision);
    let mut header = vec!["date".to_string()];
    for prefix in ["P", "PS", "DP"] {
        header.extend(state.assets.iter().map(|a| format!("{prefix}-{a}")));
    }
    header.extend(["chosen", "contribution", "warning"].map(String::from));
    w.write_record(&header)?;
    for m in &state.ledger {
        let mut rec = vec![m.date.to_string()];
        for v in [&m.current_shares, &m.suggested_shares, &m.percent_gaps] {
            if v.is_empty() {
                rec.extend(std::iter::repeat_n(String::new(), n));
            } else {
                rec.extend(v.iter().map(|x| f(*x)));
            }
        }
        rec.push(m.chosen_asset.clone().unwrap_or_default());
        rec.push(f(m.contribution));
        rec.push(m.warning.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Contribution/growth split plus quota-based performance, as `key,value` rows.
pub fn write_backtest_summary<W: Write>(out: W, state: &BacktestState, precision: Option<usize>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "value"])?;
    if state.ledger.is_empty() {
        w.flush()?;
        return Ok(());
    }
    let split = contribution_vs_interest_split(state);
    let mut rows = vec![
        ("contributed", split.contributed),
        ("final_patrimony", state.final_patrimony()),
        ("growth", split.growth),
        ("percent_contributed", split.percent_contributed),
        ("percent_growth", split.percent_growth),
    ];
    let ledger = state.quota_ledger()?;
    rows.push(("quota_return", ledger.quota_return()?));
    if ledger.len() > 1 {
        let risk = ledger.risk()?;
        rows.push(("risk", risk));
        if let Ok(q) = ledger.performance_quotient() {
            rows.push(("performance_quotient", q));
        }
    }
    for (k, v) in rows {
        w.write_record([k.to_string(), format_number(v, precision)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<prefix>monthly.csv`, `<prefix>decisions.csv`, `<prefix>summary.csv` and,
/// for non-empty runs, `<prefix>quota.csv`.
pub fn emit_backtest_report(
    dir: &Path,
    prefix: &str,
    state: &BacktestState,
    precision: Option<usize>,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let monthly = dir.join(format!("{prefix}monthly.csv"));
    let decisions = dir.join(format!("{prefix}decisions.csv"));
    let summary = dir.join(format!("{prefix}summary.csv"));
    write_backtest_monthly(create(&monthly)?, state, precision)?;
    write_backtest_decisions(create(&decisions)?, state, precision)?;
    write_backtest_summary(create(&summary)?, state, precision)?;
    let mut files = vec![monthly, decisions, summary];
    if !state.daily.is_empty() {
        let quota = dir.join(format!("{prefix}quota.csv"));
        write_quota_report(create(&quota)?, &state.quota_ledger()?, precision)?;
        files.push(quota);
    }
    Ok(files)
}

pub fn write_quota_report<W: Write>(out: W, ledger: &QuotaLedger, precision: Option<usize>) -> Result<()> {
    crate::io::write_quota_ledger(out, ledger, precision, crate::io::Locale::Dot)
}
